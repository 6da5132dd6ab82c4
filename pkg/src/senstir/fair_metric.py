"""Sensitive subspaces and the fair item metric they induce.

The fair distance between two items is the Euclidean length of their
feature difference after projecting out a learned sensitive subspace ``A``.
Subspaces come from linear fits that predict a sensitive attribute: a
logistic hyperplane for a binary group label, or ridge coefficients for a
continuous attribute (optionally together with explicit basis vectors such
as the attribute's own coordinate).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .core import DataError, Dataset, DimensionMismatch, NumericError

SINGULAR_TOL = 1e-12
DROP_TOL = 1e-10
DEFAULT_RIDGE_ALPHAS = (0.1, 1.0, 10.0)


class SingleClass(DataError):
    pass


class NoConvergence(NumericError):
    pass


def orthonormalize(vectors: Iterable, drop_tol: float = DROP_TOL) -> np.ndarray:
    """Modified Gram-Schmidt; vectors whose residual norm falls below
    ``drop_tol`` (relative to their original norm) are dropped.

    Returns a ``(p, k)`` matrix with orthonormal columns (``k`` may be 0).
    """
    basis = []
    p = None
    for v in vectors:
        v = np.asarray(v, dtype=float).reshape(-1)
        p = v.size
        norm0 = np.linalg.norm(v)
        if norm0 <= drop_tol:
            continue
        w = v.copy()
        for b in basis:
            w -= (b @ w) * b
        # second pass restores orthogonality lost to cancellation
        for b in basis:
            w -= (b @ w) * b
        norm = np.linalg.norm(w)
        if norm <= drop_tol * max(1.0, norm0):
            continue
        basis.append(w / norm)
    if not basis:
        return np.zeros((p or 0, 0))
    return np.column_stack(basis)


@dataclass(frozen=True)
class SensitiveSubspace:
    basis: np.ndarray

    def __post_init__(self):
        basis = np.asarray(self.basis, dtype=float)
        if basis.ndim != 2:
            raise DimensionMismatch("subspace basis must be a (p, k) matrix")
        p, k = basis.shape
        if not 1 <= k < p:
            raise DataError(f"subspace rank must satisfy 1 <= k < p, got k={k}, p={p}")
        if np.max(np.abs(basis.T @ basis - np.eye(k))) > 1e-10:
            raise DataError("subspace basis columns are not orthonormal")
        object.__setattr__(self, "basis", basis)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    @classmethod
    def spanned_by(cls, vectors: Iterable) -> "SensitiveSubspace":
        return cls(orthonormalize(vectors))


@dataclass(frozen=True)
class FairItemMetric:
    """``d(x, x2) = ||(I - P_A)(x - x2)||`` (or its square in ``squared`` mode)."""

    subspace: SensitiveSubspace
    mode: str = "euclidean"
    complement_projector: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.mode not in ("euclidean", "squared"):
            raise ValueError(f"unknown metric mode {self.mode!r}")
        a = self.subspace.basis
        proj = np.eye(a.shape[0]) - a @ a.T
        # exact symmetry; the product above is symmetric only up to rounding
        proj = 0.5 * (proj + proj.T)
        object.__setattr__(self, "complement_projector", proj)

    @property
    def dim(self) -> int:
        return self.subspace.dim

    def _check(self, *arrays):
        for x in arrays:
            if np.shape(x)[-1] != self.dim:
                raise DimensionMismatch(f"expected feature dim {self.dim}, got {np.shape(x)[-1]}")

    def project(self, x: np.ndarray) -> np.ndarray:
        """Apply ``I - P_A`` to a vector or to each row of a matrix."""
        x = np.asarray(x, dtype=float)
        self._check(x)
        return x @ self.complement_projector

    def sensitive_part(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return x - self.project(x)


def item_distance(metric: FairItemMetric, x, x2) -> float:
    x = np.asarray(x, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    metric._check(x, x2)
    diff = metric.complement_projector @ (x - x2)
    sq = float(diff @ diff)
    return sq if metric.mode == "squared" else float(np.sqrt(sq))


def item_distance_grad2(metric: FairItemMetric, x, x2) -> np.ndarray:
    """Gradient of ``item_distance`` in its second argument.

    At coinciding projections (euclidean mode) the zero vector is returned,
    which is a valid subgradient of the norm.
    """
    x = np.asarray(x, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    metric._check(x, x2)
    diff = metric.complement_projector @ (x2 - x)
    if metric.mode == "squared":
        return 2.0 * diff
    d = np.linalg.norm(diff)
    if d <= SINGULAR_TOL:
        return np.zeros_like(diff)
    return diff / d


def pairwise_distances(metric: FairItemMetric, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """``c[i, j] = item_distance(xs[i], ys[j])`` for row-stacked items."""
    px = metric.project(xs)
    py = metric.project(ys)
    diff = px[:, None, :] - py[None, :, :]
    sq = np.einsum("ijk,ijk->ij", diff, diff)
    return sq if metric.mode == "squared" else np.sqrt(sq)


def project_complement(metric: FairItemMetric, data: Dataset) -> Dataset:
    if data.feature_dim != metric.dim:
        raise DimensionMismatch(f"dataset dim {data.feature_dim} != metric dim {metric.dim}")
    return data.map_features(metric.project)


# -- fitting -----------------------------------------------------------------


def ridge_cv(X: np.ndarray, y: np.ndarray, alphas: Sequence[float] = DEFAULT_RIDGE_ALPHAS):
    """Ridge regression with an unpenalized intercept; alpha is picked by
    exact leave-one-out squared error, computed in closed form from the hat
    matrix. Returns ``(coef, alpha)``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    if X.shape[0] != y.size:
        raise DimensionMismatch(f"{X.shape[0]} rows but {y.size} targets")
    alphas = [float(a) for a in alphas]
    if not alphas or min(alphas) <= 0:
        raise DataError("ridge strengths must be positive")
    m = X.shape[0]
    Xc = X - X.mean(axis=0)
    yc = y - y.mean()
    U, s, Vt = np.linalg.svd(Xc, full_matrices=False)
    Uty = U.T @ yc
    best = None
    for alpha in alphas:
        shrink = s**2 / (s**2 + alpha)
        resid = yc - U @ (shrink * Uty)
        # the intercept adds 1/m to every diagonal entry of the hat matrix
        h = (U**2) @ shrink + 1.0 / m
        loo = np.mean((resid / (1.0 - h)) ** 2) if np.all(h < 1.0) else np.inf
        if best is None or loo < best[0]:
            best = (loo, alpha)
    alpha = best[1]
    coef = Vt.T @ (s / (s**2 + alpha) * Uty)
    return coef, alpha


def fit_subspace_ridge(
    X: np.ndarray,
    y: np.ndarray,
    ridge_strengths: Sequence[float] = DEFAULT_RIDGE_ALPHAS,
    extra_basis: Sequence = (),
    target_index: Optional[int] = None,
    feature_dim: Optional[int] = None,
) -> SensitiveSubspace:
    """Span of the ridge coefficients predicting ``y`` from ``X`` plus ``extra_basis``.

    When ``target_index`` is given, ``X`` omits that coordinate and the
    coefficient vector is embedded into ``feature_dim`` dimensions with a 0
    in the target slot. Linearly dependent spanning vectors are dropped, so
    the returned rank may be smaller than the number of inputs.
    """
    coef, _ = ridge_cv(X, y, ridge_strengths)
    if target_index is not None:
        p = feature_dim if feature_dim is not None else coef.size + 1
        if p != coef.size + 1:
            raise DimensionMismatch("feature_dim must be one more than the design width")
        coef = np.insert(coef, target_index, 0.0)
    vectors = [coef] + [np.asarray(v, dtype=float) for v in extra_basis]
    for v in vectors:
        if v.size != coef.size:
            raise DimensionMismatch(f"spanning vector of dim {v.size}, expected {coef.size}")
    return SensitiveSubspace.spanned_by(vectors)


def _logistic_objective(Z, sgn, wb, reg):
    margin = sgn * (Z @ wb)
    return np.sum(np.logaddexp(0.0, -margin)) + 0.5 * np.sum(reg * wb * wb)


def fit_logistic(X, labels, l2_strength=0.01, max_iters=100, tol=1e-8):
    """L2-regularized logistic regression (bias unpenalized).

    Minimizes ``sum_i log(1 + exp(-s_i (x_i.w + b))) + l2/2 ||w||^2`` with
    damped Newton steps until the gradient norm, divided by the number of
    rows, falls below ``tol``. Returns ``(w, b)``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(labels).reshape(-1)
    if X.shape[0] != y.size:
        raise DimensionMismatch(f"{X.shape[0]} rows but {y.size} labels")
    classes = np.unique(y)
    if classes.size < 2:
        raise SingleClass("logistic fit needs both classes present")
    if not set(classes.tolist()) <= {0, 1}:
        raise DataError("labels must be 0/1")
    m, p = X.shape
    Z = np.hstack([X, np.ones((m, 1))])
    sgn = np.where(y == 1, 1.0, -1.0)
    reg = np.r_[np.full(p, float(l2_strength)), 0.0]
    wb = np.zeros(p + 1)
    obj = _logistic_objective(Z, sgn, wb, reg)
    for it in range(max_iters + 1):
        margin = sgn * (Z @ wb)
        # sigma(-margin), written via tanh to stay finite for large margins
        sig = 0.5 * (1.0 - np.tanh(0.5 * margin))
        grad = Z.T @ (-sgn * sig) + reg * wb
        if np.linalg.norm(grad) / m < tol:
            return wb[:p], wb[p]
        if it == max_iters:
            break
        hess = (Z * (sig * (1.0 - sig))[:, None]).T @ Z + np.diag(reg)
        hess[np.diag_indices_from(hess)] += 1e-12 * m
        direction = np.linalg.solve(hess, grad)
        step = 1.0
        while True:
            cand = wb - step * direction
            cand_obj = _logistic_objective(Z, sgn, cand, reg)
            if cand_obj <= obj - 1e-4 * step * (grad @ direction) or step < 1e-10:
                break
            step *= 0.5
        wb, obj = cand, cand_obj
    raise NoConvergence(f"gradient norm {np.linalg.norm(grad) / m:.3g} above tol {tol} after {max_iters} iterations")


def fit_subspace_logistic(X, labels, l2_strength=0.01, max_iters=100, tol=1e-8) -> SensitiveSubspace:
    """Span of the logistic decision-boundary normal (bias excluded)."""
    w, _ = fit_logistic(X, labels, l2_strength, max_iters, tol)
    return SensitiveSubspace.spanned_by([w])
