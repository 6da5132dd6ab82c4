"""Expected ranking utility of a linear Plackett-Luce policy and its gradient."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DataError, Query
from .plackett_luce import pl_enumerate, pl_log_prob_grad_scores, pl_sample
from .ranking_metrics import ndcg

DELTAS = {"ndcg": ndcg}


class BaselineNeedsSamples(DataError):
    pass


@dataclass(frozen=True)
class LinearPolicy:
    theta: np.ndarray

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float).reshape(-1)
        if not np.all(np.isfinite(theta)):
            raise DataError("policy weights must be finite")
        object.__setattr__(self, "theta", theta)

    def scores(self, q_or_features) -> np.ndarray:
        x = getattr(q_or_features, "features", q_or_features)
        return np.asarray(x, dtype=float) @ self.theta


@dataclass(frozen=True)
class UtilitySpec:
    delta: str = "ndcg"
    mc_samples: int = 10
    use_baseline: bool = True

    def __post_init__(self):
        if self.delta not in DELTAS:
            raise ValueError(f"unknown ranking metric {self.delta!r}")
        if self.mc_samples < 1:
            raise ValueError("mc_samples must be >= 1")


def utility_grad_estimate(policy: LinearPolicy, q: Query, spec: UtilitySpec, rng: np.random.Generator):
    """REINFORCE estimate of the utility gradient for one query.

    Returns ``(grad, mean_delta)``; ``mean_delta`` is the Monte-Carlo mean
    of the metric, which doubles as the baseline when ``use_baseline``.
    """
    if spec.use_baseline and spec.mc_samples < 2:
        raise BaselineNeedsSamples("a per-query mean baseline needs at least 2 samples")
    delta = DELTAS[spec.delta]
    s = policy.scores(q)
    samples = [pl_sample(s, rng) for _ in range(spec.mc_samples)]
    values = np.array([delta(r, q.rels) for r in samples])
    mean_delta = float(values.mean())
    weights = values - mean_delta if spec.use_baseline else values
    score_grad = np.zeros(q.n)
    for w, r in zip(weights, samples):
        if w != 0.0:
            score_grad += w * pl_log_prob_grad_scores(s, r)
    return q.features.T @ (score_grad / spec.mc_samples), mean_delta


def utility_exact(policy: LinearPolicy, q: Query, delta: str = "ndcg") -> float:
    fn = DELTAS[delta]
    return float(sum(p * fn(r, q.rels) for r, p in pl_enumerate(policy.scores(q))))


def utility_grad_exact(policy: LinearPolicy, q: Query, delta: str = "ndcg") -> np.ndarray:
    fn = DELTAS[delta]
    s = policy.scores(q)
    score_grad = np.zeros(q.n)
    for r, p in pl_enumerate(s):
        score_grad += p * fn(r, q.rels) * pl_log_prob_grad_scores(s, r)
    return q.features.T @ score_grad
