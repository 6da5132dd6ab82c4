"""Plackett-Luce distribution over rankings induced by item scores."""
from __future__ import annotations

import itertools

import numpy as np

from .core import LengthMismatch, Ranking, TooLarge, _descending_stable

ENUMERATION_LIMIT = 8


def _check(s, r: Ranking):
    s = np.asarray(s, dtype=float).reshape(-1)
    if s.size != r.n:
        raise LengthMismatch(f"{s.size} scores for a ranking of {r.n} items")
    return s


def _stage_log_norms(s_ranked: np.ndarray) -> np.ndarray:
    # lse[j] = logsumexp(s_ranked[j:]), computed back to front
    n = s_ranked.size
    out = np.empty(n)
    acc = -np.inf
    for j in range(n - 1, -1, -1):
        acc = np.logaddexp(acc, s_ranked[j])
        out[j] = acc
    return out


def pl_log_prob(s, r: Ranking) -> float:
    s = _check(s, r)
    s_ranked = s[r.order]
    return float(np.sum(s_ranked - _stage_log_norms(s_ranked)))


def pl_log_prob_grad_scores(s, r: Ranking) -> np.ndarray:
    """d log P(r | s) / d s.

    The item at rank ``k`` collects ``1 - sum_{j <= k} softmax_j(item)``,
    where ``softmax_j`` is taken over the items still unplaced at stage ``j``.
    """
    s = _check(s, r)
    s_ranked = s[r.order]
    lse = _stage_log_norms(s_ranked)
    n = s.size
    # probs[j, k] = P(item at rank k chosen at stage j), zero for k < j
    probs = np.exp(s_ranked[None, :] - lse[:, None])
    probs = np.triu(probs)
    g_ranked = 1.0 - probs.sum(axis=0)
    g = np.empty(n)
    g[r.order] = g_ranked
    return g


def pl_sample(s, rng: np.random.Generator) -> Ranking:
    """Sequential softmax selection without replacement.

    Consumes exactly ``n`` uniform variates (one per stage, by inverse CDF).
    The CDF runs over items in descending score order, so with distinct
    scores the same variates pick the same items however the query's items
    are indexed.
    """
    s = np.asarray(s, dtype=float).reshape(-1)
    n = s.size
    u = rng.random(n)
    remaining = _descending_stable(s).tolist()
    order = np.empty(n, dtype=int)
    for j in range(n):
        pool = s[remaining]
        w = np.exp(pool - pool.max())
        cdf = np.cumsum(w)
        k = int(np.searchsorted(cdf, u[j] * cdf[-1], side="right"))
        k = min(k, len(remaining) - 1)
        order[j] = remaining.pop(k)
    return Ranking(order)


def pl_sample_many(s, rng: np.random.Generator, size: int) -> list:
    return [pl_sample(s, rng) for _ in range(size)]


def pl_enumerate(s):
    """All ``n!`` rankings with their exact probabilities (``n <= 8``)."""
    s = np.asarray(s, dtype=float).reshape(-1)
    n = s.size
    if n > ENUMERATION_LIMIT:
        raise TooLarge(f"refusing to enumerate {n}! rankings (limit n={ENUMERATION_LIMIT})")
    out = []
    for perm in itertools.permutations(range(n)):
        r = Ranking(np.array(perm))
        out.append((r, float(np.exp(pl_log_prob(s, r)))))
    return out

