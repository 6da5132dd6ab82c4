"""Test-time evaluation: accuracy, stability under hypothetical queries and
group exposure, aggregated into report rows."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import DataError, Dataset, MissingGroups, Query, ranking_from_scores
from .fair_metric import FairItemMetric
from .ot import query_distance
from .plackett_luce import pl_sample
from .policy_gradient import LinearPolicy
from .ranking_metrics import (
    group_exposure_disparity,
    kendall_tau,
    ndcg,
    weighted_kendall_tau,
)
from .training import substream


def nearest_fair_neighbors(metric: FairItemMetric, data: Dataset, pool: Optional[Dataset] = None):
    """For each query of ``data`` find the closest other query in ``pool``
    (default: ``data`` itself) under the transport distance.

    Returns a list of hypothetical queries whose items are reordered so that
    item ``i`` is the one matched to item ``i`` of the original query.
    Candidates must have the same number of items. Among optimal matchings
    the most compact one is used for the alignment.
    """
    pool = data if pool is None else pool
    out = []
    for q in data:
        best = None
        for cand in pool:
            if cand is q or cand.n != q.n:
                continue
            plan = query_distance(metric, q, cand)
            if best is None or plan.value < best[0]:
                best = (plan.value, cand, plan)
        if best is None:
            raise DataError(f"no same-size neighbour for query {q.id!r}")
        _, cand, _ = best
        idx = query_distance(metric, q, cand, prefer_compact=True).perm
        groups = None if cand.groups is None else cand.groups[idx]
        out.append(Query(f"{q.id}~{cand.id}", cand.features[idx], cand.rels[idx], groups))
    return out


def group_flip(data: Dataset, column: int):
    """Swap the two values taken by feature ``column`` across the dataset."""
    values = np.unique(np.concatenate([q.features[:, column] for q in data]))
    if values.size > 2:
        raise DataError(f"feature {column} is not binary (takes {values.size} values)")
    lo, hi = (values[0], values[-1]) if values.size else (0.0, 1.0)
    if lo == hi:
        lo, hi = 0.0, 1.0
    out = []
    for q in data:
        x = q.features.copy()
        col = x[:, column]
        x[:, column] = np.where(col == lo, hi, lo)
        out.append(q.with_features(x))
    return out


def stability(policy: LinearPolicy, data: Dataset, hypothetical, weighted_method: str = "hyperbolic"):
    """Mean deterministic Kendall's tau (plain, weighted) between each query's
    ranking and the ranking of its hypothetical counterpart."""
    taus, wtaus = [], []
    for q, h in zip(data, hypothetical):
        r = ranking_from_scores(policy.scores(q))
        r2 = ranking_from_scores(policy.scores(h))
        taus.append(kendall_tau(r, r2))
        wtaus.append(weighted_kendall_tau(r, r2, weighted_method))
    return float(np.mean(taus)), float(np.mean(wtaus))


@dataclass
class EvalResult:
    ndcg_stochastic: float
    kendall_tau: float = float("nan")
    kendall_tau_weighted: float = float("nan")
    exposure_disparity: float = float("nan")


def evaluate(policy: LinearPolicy, data: Dataset, n_samples: int, seed: int,
             hypothetical=None, exposure: bool = True, weighted_method: str = "hyperbolic") -> EvalResult:
    """Stochastic NDCG and exposure disparity share the same ``n_samples``
    Plackett-Luce draws per query."""
    if exposure and not data.has_groups:
        raise MissingGroups("exposure disparity requested but the data has no group labels")
    ndcgs, disparities = [], []
    for i, q in enumerate(data):
        rng = substream(seed, "eval", i)
        s = policy.scores(q)
        rankings = [pl_sample(s, rng) for _ in range(n_samples)]
        ndcgs.append(np.mean([ndcg(r, q.rels) for r in rankings]))
        if exposure:
            disparities.append(group_exposure_disparity(rankings, q))
    result = EvalResult(float(np.mean(ndcgs)))
    if exposure:
        result.exposure_disparity = float(np.mean(disparities))
    if hypothetical is not None:
        result.kendall_tau, result.kendall_tau_weighted = stability(policy, data, hypothetical, weighted_method)
    return result


def sensitive_weight_ratio(policy: LinearPolicy, metric: FairItemMetric) -> float:
    """``||P_A theta|| / ||(I - P_A) theta||``: how much the scores lean on
    sensitive directions."""
    fair = np.linalg.norm(metric.project(policy.theta))
    sens = np.linalg.norm(policy.theta - metric.project(policy.theta))
    return float(sens / fair) if fair > 0 else float("inf")
