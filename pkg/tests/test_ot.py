import itertools

import numpy as np
import pytest

from conftest import central_diff, random_metric, random_query, rel_err
from senstir.core import DataError, Query, SizeMismatch
from senstir.fair_metric import FairItemMetric, SensitiveSubspace
from senstir.ot import (
    StalePlan,
    TransportPlan,
    cost_matrix,
    query_distance,
    query_distance_grad,
    solve_assignment,
)


def brute_force_assignment(c):
    n = c.shape[0]
    return min(sum(c[i, p[i]] for i in range(n)) / n for p in itertools.permutations(range(n)))


@pytest.mark.parametrize("seed", range(30))
def test_assignment_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    n = rng.integers(1, 7)
    c = rng.uniform(0, 5, (n, n))
    perm, value = solve_assignment(c)
    assert sorted(perm.tolist()) == list(range(n))
    assert value == pytest.approx(brute_force_assignment(c), abs=1e-12)
    assert value == pytest.approx(c[np.arange(n), perm].mean(), abs=1e-12)


def test_assignment_rejects_bad_costs():
    with pytest.raises(SizeMismatch):
        solve_assignment(np.zeros((2, 3)))
    with pytest.raises(DataError):
        solve_assignment(np.array([[0.0, np.nan], [1.0, 0.0]]))


def test_identical_queries_have_zero_distance(rng):
    m = random_metric(rng, 3)
    q = random_query(rng, 5, 3)
    plan = query_distance(m, q, q)
    assert plan.value == 0.0
    assert plan.check_marginals()


def test_sensitive_shift_has_zero_distance(rng):
    m = random_metric(rng, 4, 2)
    q = random_query(rng, 6, 4)
    shifted = q.with_features(q.features + rng.standard_normal((6, 2)) @ m.subspace.basis.T)
    assert query_distance(m, q, shifted).value < 1e-12


def test_distance_is_symmetric_and_permutation_invariant(rng):
    m = random_metric(rng, 3)
    q, q2 = random_query(rng, 5, 3), random_query(rng, 5, 3)
    d = query_distance(m, q, q2).value
    assert query_distance(m, q2, q).value == pytest.approx(d, abs=1e-12)
    shuffled = Query("s", q2.features[rng.permutation(5)], q2.rels)
    assert query_distance(m, q, shuffled).value == pytest.approx(d, abs=1e-12)


def test_size_mismatch(rng):
    m = random_metric(rng, 2)
    with pytest.raises(SizeMismatch):
        query_distance(m, random_query(rng, 3, 2), random_query(rng, 4, 2))


def test_two_point_example():
    # on a line the crossing and order-preserving matchings tie; value is the same
    m = FairItemMetric(SensitiveSubspace.spanned_by([[0, 1]]))
    q = Query("a", [[0, 0], [1, 0]], [0, 0])
    q2 = Query("b", [[2, 5], [3, -5]], [0, 0])
    plan = query_distance(m, q, q2)
    assert plan.value == pytest.approx(2.0)
    assert query_distance(m, q, q2, prefer_compact=True).perm.tolist() == [0, 1]


def test_prefer_compact_keeps_value(rng):
    m = random_metric(rng, 3)
    for _ in range(20):
        q, q2 = random_query(rng, 6, 3), random_query(rng, 6, 3)
        assert query_distance(m, q, q2, True).value == query_distance(m, q, q2).value
        plan = query_distance(m, q, q2, True)
        c = cost_matrix(m, q, q2)
        assert c[np.arange(6), plan.perm].mean() == pytest.approx(plan.value, abs=1e-9)


def test_prefer_compact_is_order_preserving_in_one_dimension(rng):
    m = FairItemMetric(SensitiveSubspace.spanned_by([[0, 1]]))
    for _ in range(20):
        q = Query("a", np.c_[np.sort(rng.uniform(0, 1, 5)), rng.standard_normal(5)], np.zeros(5))
        q2 = Query("b", np.c_[np.sort(rng.uniform(3, 4, 5)), rng.standard_normal(5)], np.zeros(5))
        assert query_distance(m, q, q2, True).perm.tolist() == list(range(5))


@pytest.mark.parametrize("mode", ["euclidean", "squared"])
def test_distance_grad_matches_finite_differences(rng, mode):
    m = random_metric(rng, 3, 1, mode)
    q, q2 = random_query(rng, 5, 3), random_query(rng, 5, 3)
    plan = query_distance(m, q, q2)
    g = query_distance_grad(m, q, q2, plan)
    fd = central_diff(lambda x: query_distance(m, q, q2.with_features(x)).value, q2.features)
    assert rel_err(g, fd) < 1e-5


def test_stale_plan_rejected(rng):
    m = random_metric(rng, 2)
    q, q2 = random_query(rng, 3, 2), random_query(rng, 3, 2)
    bad = TransportPlan(np.full((3, 3), 0.5), 0.0, np.arange(3))
    with pytest.raises(StalePlan):
        query_distance_grad(m, q, q2, bad)
    with pytest.raises(StalePlan):
        query_distance_grad(m, q, q2, TransportPlan.from_permutation([0, 1], 0.0))
