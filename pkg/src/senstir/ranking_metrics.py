"""Ranking quality and fairness metrics."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.stats import weightedtau

from .core import LengthMismatch, MissingGroups, Query, Ranking, TooShort, _descending_stable
from .plackett_luce import pl_sample

# CSV column identifiers
NDCG_STOCHASTIC = "ndcg_stochastic"
KENDALL_TAU = "kendall_tau"
KENDALL_TAU_WEIGHTED = "kendall_tau_weighted"
EXPOSURE_DISPARITY = "exposure_disparity"


def log_discount(ranks) -> np.ndarray:
    return 1.0 / np.log2(1.0 + np.asarray(ranks, dtype=float))


def _rels_for(r: Ranking, rels) -> np.ndarray:
    rels = np.asarray(rels, dtype=float).reshape(-1)
    if rels.size != r.n:
        raise LengthMismatch(f"{rels.size} relevances for a ranking of {r.n} items")
    return rels


def dcg(r: Ranking, rels) -> float:
    rels = _rels_for(r, rels)
    gains = np.exp2(rels[r.order]) - 1.0
    return float(np.sum(gains * log_discount(np.arange(1, r.n + 1))))


def ideal_dcg(rels) -> float:
    rels = np.asarray(rels, dtype=float).reshape(-1)
    return dcg(Ranking(_descending_stable(rels)), rels)


def ndcg(r: Ranking, rels) -> float:
    """DCG over ideal DCG; 1 when every relevance is zero."""
    rels = _rels_for(r, rels)
    best = ideal_dcg(rels)
    if best == 0.0:
        return 1.0
    return dcg(r, rels) / best


def stochastic_ndcg(policy, q: Query, n_samples: int, rng: np.random.Generator) -> float:
    """Mean NDCG of ``n_samples`` Plackett-Luce draws.

    ``policy`` is anything with a ``scores(query)`` method, or a score vector.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    scores = policy.scores(q) if hasattr(policy, "scores") else policy
    return float(np.mean([ndcg(pl_sample(scores, rng), q.rels) for _ in range(n_samples)]))


def _pair_signs(r: Ranking, r2: Ranking):
    if r.n != r2.n:
        raise LengthMismatch(f"rankings of {r.n} and {r2.n} items")
    if r.n < 2:
        raise TooShort("Kendall's tau needs at least two items")
    iu, ju = np.triu_indices(r.n, k=1)
    a = np.sign(r.ranks[iu] - r.ranks[ju])
    b = np.sign(r2.ranks[iu] - r2.ranks[ju])
    return iu, ju, a * b


def kendall_tau(r: Ranking, r2: Ranking) -> float:
    _, _, agree = _pair_signs(r, r2)
    return float(agree.mean())


def weighted_kendall_tau(r: Ranking, r2: Ranking, method: str = "hyperbolic") -> float:
    """Kendall's tau with top-heavy pair weights.

    ``method="hyperbolic"``: each item pair is weighted by
    ``w(a, b) = 1/a + 1/b`` at the pair's ranks, averaged over the two
    rankings so the statistic stays symmetric; normalized by the total weight.
    ``method="scipy"``: :func:`scipy.stats.weightedtau` with default
    parameters on negated ranks.
    """
    if method == "scipy":
        _pair_signs(r, r2)
        return float(weightedtau(-r.ranks, -r2.ranks).statistic)
    if method != "hyperbolic":
        raise ValueError(f"unknown weighted tau method {method!r}")
    iu, ju, agree = _pair_signs(r, r2)

    def w(ranking):
        return 1.0 / ranking.ranks[iu] + 1.0 / ranking.ranks[ju]

    weights = 0.5 * (w(r) + w(r2))
    return float(np.sum(agree * weights) / np.sum(weights))


@dataclass(frozen=True)
class ExposureSpec:
    position_bias: Callable = log_discount
    merit: Callable = lambda rels: np.asarray(rels, dtype=float)


def group_exposure_disparity(rankings: Sequence[Ranking], q: Query, spec: ExposureSpec = ExposureSpec()) -> float:
    """Positive part of the advantaged-minus-disadvantaged exposure/merit gap.

    The group with the larger mean merit is the advantaged one; on equal
    merit group 0 is treated as advantaged. Zero if either group has zero
    merit or is absent from the query.
    """
    if q.groups is None:
        raise MissingGroups(f"query {q.id!r} has no group labels")
    if not rankings:
        raise ValueError("need at least one ranking")
    merit = spec.merit(q.rels)
    g0 = q.groups == 0
    g1 = q.groups == 1
    if not g0.any() or not g1.any():
        return 0.0
    m0 = float(merit[g0].mean())
    m1 = float(merit[g1].mean())
    if m0 == 0.0 or m1 == 0.0:
        return 0.0
    exposure = np.mean([spec.position_bias(r.ranks) for r in rankings], axis=0)
    ratio0 = float(exposure[g0].mean()) / m0
    ratio1 = float(exposure[g1].mean()) / m1
    if m0 >= m1:
        return max(0.0, ratio0 - ratio1)
    return max(0.0, ratio1 - ratio0)
