import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from senstir.core import LengthMismatch, MissingGroups, Query, Ranking, TooShort, ideal_ranking
from senstir.plackett_luce import pl_enumerate
from senstir.policy_gradient import LinearPolicy, utility_exact
from senstir.ranking_metrics import (
    ExposureSpec,
    dcg,
    group_exposure_disparity,
    kendall_tau,
    ndcg,
    stochastic_ndcg,
    weighted_kendall_tau,
)

INV_LOG3 = 1 / math.log2(3)


def test_dcg_examples():
    assert dcg(Ranking([0, 1]), [1, 0]) == 1.0
    assert dcg(Ranking([0, 1, 2]), [0, 0, 0]) == 0.0
    assert dcg(Ranking([1, 0]), [1, 0]) == pytest.approx(INV_LOG3)
    # graded gain 2^rel - 1
    assert dcg(Ranking([0]), [3]) == 7.0


def test_dcg_length_check():
    with pytest.raises(LengthMismatch):
        dcg(Ranking([0, 1]), [1, 0, 0])


def test_ndcg_examples():
    q = Query("q", np.zeros((4, 1)), [0, 2, 1, 3])
    assert ndcg(ideal_ranking(q), q.rels) == 1.0
    assert ndcg(Ranking([1, 0]), [1, 0]) == pytest.approx(INV_LOG3)
    for perm in itertools.permutations(range(3)):
        assert ndcg(Ranking(perm), [2, 2, 2]) == pytest.approx(1.0)
        assert ndcg(Ranking(perm), [0, 0, 0]) == 1.0


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 4), min_size=1, max_size=6))
def test_ndcg_bounds_and_ideal_dominates(rels):
    rels = np.array(rels, dtype=float)
    best = dcg(ideal_ranking(Query("q", np.zeros((rels.size, 1)), rels)), rels)
    for perm in itertools.permutations(range(rels.size)):
        r = Ranking(perm)
        assert 0.0 <= ndcg(r, rels) <= 1.0 + 1e-12
        assert dcg(r, rels) <= best + 1e-12


def test_stochastic_ndcg_constant_rels_is_one(rng):
    q = Query("q", rng.standard_normal((5, 2)), np.ones(5))
    assert stochastic_ndcg(LinearPolicy([1.0, -1.0]), q, 10, rng) == 1.0


def test_stochastic_ndcg_converges_to_exact(rng):
    q = Query("q", rng.standard_normal((5, 2)), [0, 1, 2, 0, 3])
    pol = LinearPolicy([0.7, -0.4])
    exact = utility_exact(pol, q)
    values = [stochastic_ndcg(pol, q, 1, rng) for _ in range(20_000)]
    se = np.std(values) / math.sqrt(len(values))
    assert abs(np.mean(values) - exact) < 3 * se
    a = stochastic_ndcg(pol, q, 10, np.random.default_rng(1))
    assert a == stochastic_ndcg(pol.scores(q), q, 10, np.random.default_rng(1))


def test_kendall_examples():
    ident = Ranking([0, 1, 2])
    assert kendall_tau(ident, ident) == 1.0
    assert kendall_tau(ident, Ranking([2, 1, 0])) == -1.0
    assert kendall_tau(ident, Ranking([0, 2, 1])) == pytest.approx(1 / 3)
    with pytest.raises(TooShort):
        kendall_tau(Ranking([0]), Ranking([0]))


def brute_kendall(r, r2):
    n = r.n
    s = 0
    for i, j in itertools.combinations(range(n), 2):
        s += np.sign(r.ranks[i] - r.ranks[j]) * np.sign(r2.ranks[i] - r2.ranks[j])
    return s / math.comb(n, 2)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 8), st.integers(0, 10_000))
def test_tau_properties(n, seed):
    rng = np.random.default_rng(seed)
    r, r2 = Ranking(rng.permutation(n)), Ranking(rng.permutation(n))
    assert kendall_tau(r, r2) == pytest.approx(brute_kendall(r, r2))
    for fn in (kendall_tau, weighted_kendall_tau):
        v = fn(r, r2)
        assert -1 - 1e-12 <= v <= 1 + 1e-12
        assert v == pytest.approx(fn(r2, r))
        assert fn(r, r) == pytest.approx(1.0)
        assert fn(r, Ranking(r.order[::-1])) == pytest.approx(-1.0)


def test_weighted_tau_penalizes_top_swaps_more():
    ident = Ranking(range(5))
    top = Ranking([1, 0, 2, 3, 4])
    bottom = Ranking([0, 1, 2, 4, 3])
    assert weighted_kendall_tau(ident, top) < weighted_kendall_tau(ident, bottom)
    # plain tau cannot tell them apart
    assert kendall_tau(ident, top) == kendall_tau(ident, bottom)


def test_weighted_tau_hand_value():
    # n=3, swap of ranks 2 and 3: pair weights at ranks (1,2)=1.5, (1,3)=4/3, (2,3)=5/6
    v = weighted_kendall_tau(Ranking([0, 1, 2]), Ranking([0, 2, 1]))
    assert v == pytest.approx((1.5 + 4 / 3 - 5 / 6) / (1.5 + 4 / 3 + 5 / 6))


def test_weighted_tau_scipy_method_runs():
    ident = Ranking(range(5))
    assert weighted_kendall_tau(ident, ident, "scipy") == pytest.approx(1.0)
    with pytest.raises(ValueError):
        weighted_kendall_tau(ident, ident, "other")


def test_exposure_examples():
    q = Query("q", np.zeros((2, 1)), [1, 1], [0, 1])
    d = group_exposure_disparity([Ranking([0, 1])], q)
    assert d == pytest.approx(1 - INV_LOG3)
    # group 0 without merit
    q0 = Query("q", np.zeros((3, 1)), [0, 1, 1], [0, 1, 1])
    assert group_exposure_disparity([Ranking([0, 1, 2])], q0) == 0.0
    # identical groups under a symmetric pair of rankings
    qs = Query("q", np.zeros((2, 1)), [1, 1], [0, 1])
    assert group_exposure_disparity([Ranking([0, 1]), Ranking([1, 0])], qs) == pytest.approx(0.0)


def test_exposure_picks_advantaged_group_by_merit():
    # group 1 has higher merit and is also ranked on top
    q = Query("q", np.zeros((3, 1)), [1, 2, 2], [0, 1, 1])
    rankings = [Ranking([1, 2, 0])]
    exposure = 1 / np.log2(1 + np.array([3, 1, 2]))
    expected = max(0.0, exposure[1:].mean() / 2 - exposure[0] / 1)
    assert group_exposure_disparity(rankings, q) == pytest.approx(expected)


def test_exposure_invariant_to_group_relabeling(rng):
    for _ in range(50):
        n = 6
        rels = rng.permutation(n).astype(float) + 1.0
        groups = rng.permutation([0, 0, 0, 1, 1, 1])
        rankings = [Ranking(rng.permutation(n)) for _ in range(3)]
        a = group_exposure_disparity(rankings, Query("q", np.zeros((n, 1)), rels, groups))
        b = group_exposure_disparity(rankings, Query("q", np.zeros((n, 1)), rels, 1 - groups))
        assert a == pytest.approx(b, abs=1e-12)


def test_exposure_custom_spec():
    q = Query("q", np.zeros((2, 1)), [1, 1], [0, 1])
    spec = ExposureSpec(position_bias=lambda r: 1.0 / np.asarray(r, dtype=float))
    assert group_exposure_disparity([Ranking([0, 1])], q, spec) == pytest.approx(0.5)


def test_exposure_requires_groups():
    with pytest.raises(MissingGroups):
        group_exposure_disparity([Ranking([0, 1])], Query("q", np.zeros((2, 1)), [1, 0]))
