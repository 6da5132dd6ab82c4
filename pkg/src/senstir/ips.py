"""Click-based estimates of additive ranking metrics.

Clicks follow a position-based examination model: the item shown at rank
``k`` of the logged ranking is examined with probability ``v(k)``, and a
click happens when an examined item is relevant.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DataError, LengthMismatch, Query, Ranking


class NonBinaryRelevance(DataError):
    pass


@dataclass(frozen=True)
class PropensityModel:
    """``v(k) = max((1/k)**eta, floor)``."""

    eta: float = 1.0
    floor: float = 1e-3
    kind: str = "rank_power"

    def __post_init__(self):
        if self.kind != "rank_power":
            raise ValueError(f"unknown propensity model {self.kind!r}")
        if self.eta < 0:
            raise ValueError("eta must be >= 0")
        if not 0 < self.floor <= 1:
            raise ValueError("floor must lie in (0, 1]")

    def __call__(self, ranks) -> np.ndarray:
        ranks = np.asarray(ranks, dtype=float)
        return np.maximum(ranks ** (-self.eta), self.floor)


@dataclass(frozen=True)
class WeighingFunction:
    kind: str = "dcg_log"

    def __call__(self, ranks) -> np.ndarray:
        return 1.0 / np.log2(1.0 + np.asarray(ranks, dtype=float))


def _clicks(c, n):
    c = np.asarray(c, dtype=float).reshape(-1)
    if c.size != n:
        raise LengthMismatch(f"{c.size} clicks for {n} items")
    return c


def basic_delta(r: Ranking, c, f: WeighingFunction = WeighingFunction()) -> float:
    c = _clicks(c, r.n)
    return float(np.sum(f(r.ranks) * c))


def ips_delta(r: Ranking, c, logged: Ranking, prop: PropensityModel, f: WeighingFunction = WeighingFunction()) -> float:
    """Clicks reweighted by ``1 / v(rank in logged ranking)``; positions for
    ``f`` come from the evaluated ranking ``r``.
    """
    c = _clicks(c, r.n)
    if logged.n != r.n:
        raise LengthMismatch(f"logged ranking has {logged.n} items, evaluated {r.n}")
    return float(np.sum(f(r.ranks) * c / prop(logged.ranks)))


def _binary_rels(q: Query) -> np.ndarray:
    if not np.all(np.isin(q.rels, (0.0, 1.0))):
        raise NonBinaryRelevance(f"query {q.id!r} needs 0/1 relevances")
    return q.rels


def simulate_clicks(q: Query, logged: Ranking, prop: PropensityModel, rng: np.random.Generator) -> np.ndarray:
    rels = _binary_rels(q)
    if logged.n != q.n:
        raise LengthMismatch(f"logged ranking has {logged.n} items, query {q.n}")
    observed = rng.random(q.n) < prop(logged.ranks)
    return (observed & (rels == 1.0)).astype(int)


def true_delta(q: Query, r: Ranking, f: WeighingFunction = WeighingFunction()) -> float:
    return float(np.sum(f(r.ranks) * q.rels))


def expected_ips_delta(q: Query, r: Ranking, logged: Ranking, prop: PropensityModel,
                       f: WeighingFunction = WeighingFunction()) -> float:
    """Exact expectation of :func:`ips_delta` over click realizations."""
    rels = _binary_rels(q)
    click_prob = rels * prop(logged.ranks)
    return float(np.sum(f(r.ranks) * click_prob / prop(logged.ranks)))


def expected_basic_delta(q: Query, r: Ranking, logged: Ranking, prop: PropensityModel,
                         f: WeighingFunction = WeighingFunction()) -> float:
    rels = _binary_rels(q)
    return float(np.sum(f(r.ranks) * rels * prop(logged.ranks)))
