"""Shared domain types and elementary ranking constructions.

Items are stored column-wise inside a :class:`Query` (a feature matrix, a
relevance vector and optional group labels) rather than as a list of item
objects; every numerical routine in the package works on those arrays.

Item indices are 0-based (numpy convention). Ranks are 1-based so that the
position discount ``1 / log2(1 + rank)`` reads the same as in the formulas.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


class SenstirError(Exception):
    """Base class for all errors raised by this package."""


class DataError(SenstirError, ValueError):
    """Input data violates a documented invariant."""


class NumericError(SenstirError, ArithmeticError):
    """A numerical procedure failed (no convergence, stale state, ...)."""


class DimensionMismatch(DataError):
    pass


class LengthMismatch(DataError):
    pass


class SizeMismatch(DataError):
    pass


class NonFiniteFeature(DataError):
    pass


class NonFiniteScore(DataError):
    pass


class NegativeRelevance(DataError):
    pass


class MissingGroups(DataError):
    pass


class TooLarge(DataError):
    pass


class TooShort(DataError):
    pass


@dataclass(frozen=True)
class Query:
    """A candidate set of ``n`` items to be ranked.

    ``features`` has shape ``(n, p)``, ``rels`` shape ``(n,)``; ``groups`` is
    either ``None`` or an integer array of 0/1 labels.
    """

    id: str
    features: np.ndarray
    rels: np.ndarray
    groups: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "features", np.atleast_2d(np.asarray(self.features, dtype=float)))
        object.__setattr__(self, "rels", np.asarray(self.rels, dtype=float).reshape(-1))
        if self.groups is not None:
            object.__setattr__(self, "groups", np.asarray(self.groups, dtype=int).reshape(-1))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    def with_features(self, features: np.ndarray) -> "Query":
        return Query(self.id, features, self.rels, self.groups)

    @classmethod
    def from_items(cls, qid: str, items: Sequence[dict]) -> "Query":
        """Build from item records ``{"features": [...], "rel": r, "group": g}``.

        Raises DimensionMismatch when items disagree on feature length.
        """
        dims = {len(it["features"]) for it in items}
        if len(dims) > 1:
            raise DimensionMismatch(f"query {qid!r}: items have feature dims {sorted(dims)}")
        has_group = ["group" in it and it["group"] is not None for it in items]
        if any(has_group) and not all(has_group):
            raise DataError(f"query {qid!r}: group labels present on some items only")
        groups = [it["group"] for it in items] if items and all(has_group) else None
        return cls(qid, [it["features"] for it in items], [it["rel"] for it in items], groups)


@dataclass(frozen=True)
class Ranking:
    """A permutation of ``n`` items.

    ``order[k]`` is the (0-based) item placed at rank ``k + 1``;
    ``ranks[i]`` is the (1-based) rank of item ``i``.
    """

    order: np.ndarray
    ranks: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        order = np.asarray(self.order, dtype=int).reshape(-1)
        n = order.size
        if n == 0 or not np.array_equal(np.sort(order), np.arange(n)):
            raise DataError(f"not a permutation of 0..{n - 1}: {order.tolist()}")
        ranks = np.empty(n, dtype=int)
        ranks[order] = np.arange(1, n + 1)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "ranks", ranks)

    @classmethod
    def from_ranks(cls, ranks: Sequence[int]) -> "Ranking":
        ranks = np.asarray(ranks, dtype=int)
        order = np.empty_like(ranks)
        order[ranks - 1] = np.arange(ranks.size)
        return cls(order)

    @property
    def n(self) -> int:
        return self.order.size

    def __eq__(self, other):
        return isinstance(other, Ranking) and np.array_equal(self.order, other.order)

    def __hash__(self):
        return hash(tuple(self.order.tolist()))


@dataclass(frozen=True)
class Dataset:
    queries: tuple
    feature_dim: int
    has_groups: bool = False

    def __post_init__(self):
        object.__setattr__(self, "queries", tuple(self.queries))
        if not self.queries:
            raise DataError("dataset has no queries")
        for q in self.queries:
            if q.p != self.feature_dim:
                raise DimensionMismatch(
                    f"query {q.id!r} has feature dim {q.p}, dataset declares {self.feature_dim}"
                )
            if (q.groups is not None) != self.has_groups:
                raise DataError(f"query {q.id!r}: group labels inconsistent with dataset")

    @classmethod
    def of(cls, queries: Sequence[Query]) -> "Dataset":
        queries = tuple(queries)
        if not queries:
            raise DataError("dataset has no queries")
        return cls(queries, queries[0].p, queries[0].groups is not None)

    def __len__(self):
        return len(self.queries)

    def __iter__(self):
        return iter(self.queries)

    def __getitem__(self, i):
        return self.queries[i]

    def map_features(self, fn) -> "Dataset":
        queries = [q.with_features(fn(q.features)) for q in self.queries]
        return Dataset(queries, queries[0].p, self.has_groups)


def validate_query(q: Query) -> None:
    if q.n < 1:
        raise DataError(f"query {q.id!r} has no items")
    if q.rels.shape != (q.n,):
        raise LengthMismatch(f"query {q.id!r}: {q.rels.size} relevances for {q.n} items")
    if not np.all(np.isfinite(q.features)):
        raise NonFiniteFeature(f"query {q.id!r} has non-finite features")
    if not np.all(np.isfinite(q.rels)):
        raise DataError(f"query {q.id!r} has non-finite relevances")
    if np.any(q.rels < 0):
        raise NegativeRelevance(f"query {q.id!r} has negative relevance")
    if q.groups is not None:
        if q.groups.shape != (q.n,):
            raise LengthMismatch(f"query {q.id!r}: {q.groups.size} group labels for {q.n} items")
        if not np.all(np.isin(q.groups, (0, 1))):
            raise DataError(f"query {q.id!r}: group labels must be 0 or 1")


def _descending_stable(values: np.ndarray) -> np.ndarray:
    # stable sort on the negation keeps lower indices first among ties
    return np.argsort(-values, kind="stable")


def ranking_from_scores(scores) -> Ranking:
    """Deterministic ranking by descending score, ties to the lower index."""
    scores = np.asarray(scores, dtype=float).reshape(-1)
    if not np.all(np.isfinite(scores)):
        raise NonFiniteScore("scores must be finite")
    return Ranking(_descending_stable(scores))


def ideal_ranking(q: Query) -> Ranking:
    validate_query(q)
    return Ranking(_descending_stable(q.rels))
