"""Optimal-transport distance between equal-size queries.

With uniform weights ``1/n`` on both sides an optimal coupling can always be
taken to be ``(1/n)`` times a permutation matrix, so the transport problem
reduces to a linear assignment problem solved exactly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import DataError, NumericError, Query, SizeMismatch
from .fair_metric import FairItemMetric, item_distance_grad2, pairwise_distances

MARGINAL_TOL = 1e-9
LEX_WEIGHT = 1e-6


class StalePlan(NumericError):
    pass


@dataclass(frozen=True)
class TransportPlan:
    coupling: np.ndarray
    value: float
    # perm[i] = item of the second query that item i of the first is sent to
    perm: np.ndarray

    @classmethod
    def from_permutation(cls, perm, value: float) -> "TransportPlan":
        perm = np.asarray(perm, dtype=int)
        n = perm.size
        coupling = np.zeros((n, n))
        coupling[np.arange(n), perm] = 1.0 / n
        return cls(coupling, float(value), perm)

    def check_marginals(self, tol: float = MARGINAL_TOL) -> bool:
        n = self.coupling.shape[0]
        return (
            bool(np.all(self.coupling >= 0))
            and np.allclose(self.coupling.sum(axis=1), 1.0 / n, atol=tol, rtol=0)
            and np.allclose(self.coupling.sum(axis=0), 1.0 / n, atol=tol, rtol=0)
        )


def cost_matrix(metric: FairItemMetric, q: Query, q2: Query) -> np.ndarray:
    if q.n != q2.n:
        raise SizeMismatch(f"queries have {q.n} and {q2.n} items")
    return pairwise_distances(metric, q.features, q2.features)


def solve_assignment(c: np.ndarray):
    """Minimum-cost perfect matching. Returns ``(perm, value)`` with
    ``value = (1/n) * sum_i c[i, perm[i]]``.
    """
    c = np.asarray(c, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise SizeMismatch(f"cost matrix must be square, got {c.shape}")
    if not np.all(np.isfinite(c)):
        raise DataError("cost matrix must be finite")
    n = c.shape[0]
    rows, cols = linear_sum_assignment(c)
    perm = np.empty(n, dtype=int)
    perm[rows] = cols
    return perm, float(c[rows, cols].sum() / n)


def query_distance(metric: FairItemMetric, q: Query, q2: Query, prefer_compact: bool = False) -> TransportPlan:
    """Optimal transport between ``q`` and ``q2`` under the fair item metric.

    Optimal plans are often not unique (on a line, crossing and order-preserving
    matchings of separated clusters can cost the same). With ``prefer_compact``
    the returned plan is, among the optimal ones, one that also minimizes the
    sum of squared costs, which yields order-preserving matchings in 1-D.
    The value is the same either way.
    """
    c = cost_matrix(metric, q, q2)
    perm, value = solve_assignment(c)
    if prefer_compact and c.size > 1 and c.max() > 0:
        alt, _ = solve_assignment(c + LEX_WEIGHT * c**2 / c.max())
        alt_value = float(c[np.arange(c.shape[0]), alt].sum() / c.shape[0])
        if alt_value <= value + MARGINAL_TOL * max(1.0, value):
            perm = alt
    return TransportPlan.from_permutation(perm, value)


def query_distance_grad(metric: FairItemMetric, q: Query, q2: Query, plan: TransportPlan) -> np.ndarray:
    """Gradient of ``d_Q(q, q2)`` with respect to each item of ``q2``.

    Uses the supplied optimal coupling (envelope argument); the result is
    only a true gradient where the optimal permutation is locally unique.
    Returns an ``(n, p)`` array.
    """
    n = q2.n
    if plan.coupling.shape != (n, n) or q.n != n or not plan.check_marginals():
        raise StalePlan("transport plan does not match the queries' marginals")
    grads = np.zeros_like(q2.features)
    rows, cols = np.nonzero(plan.coupling)
    for i, j in zip(rows, cols):
        grads[j] += plan.coupling[i, j] * item_distance_grad2(metric, q.features[i], q2.features[j])
    return grads
