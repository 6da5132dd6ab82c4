import math

import numpy as np
import pytest

from conftest import central_diff, rel_err
from senstir.core import Query, TooLarge
from senstir.policy_gradient import (
    BaselineNeedsSamples,
    LinearPolicy,
    UtilitySpec,
    utility_exact,
    utility_grad_estimate,
    utility_grad_exact,
)


def instance(seed, n=4, p=3):
    rng = np.random.default_rng(seed)
    q = Query("q", rng.standard_normal((n, p)), rng.integers(0, 3, n).astype(float))
    return q, LinearPolicy(rng.normal(0, 0.8, p))


def test_constant_relevance_with_baseline_gives_zero(rng):
    q = Query("q", rng.standard_normal((5, 2)), np.full(5, 2.0))
    g, u = utility_grad_estimate(LinearPolicy([0.3, -1.0]), q, UtilitySpec(mc_samples=10), rng)
    assert u == 1.0
    assert np.all(g == 0.0)


def test_single_item_gives_zero(rng):
    q = Query("q", [[1.0, 2.0]], [3.0])
    g, _ = utility_grad_estimate(LinearPolicy([1.0, 1.0]), q, UtilitySpec(use_baseline=False), rng)
    assert np.all(g == 0.0)


def test_baseline_needs_two_samples(rng):
    q, pol = instance(0)
    with pytest.raises(BaselineNeedsSamples):
        utility_grad_estimate(pol, q, UtilitySpec(mc_samples=1), rng)


def test_utility_exact_examples():
    q = Query("q", [[1.0], [0.0]], [1, 0])
    assert utility_exact(LinearPolicy([0.0]), q) == pytest.approx((1 + 1 / math.log2(3)) / 2)
    assert utility_exact(LinearPolicy([50.0]), q) == pytest.approx(1.0, abs=1e-12)
    q_eq = Query("q", np.eye(3), [1, 1, 1])
    assert utility_exact(LinearPolicy([0.2, 0.1, 0.0]), q_eq) == pytest.approx(1.0)
    assert np.allclose(utility_grad_exact(LinearPolicy([0.2, 0.1, 0.0]), q_eq), 0.0)


def test_enumeration_guard():
    q = Query("q", np.zeros((9, 1)), np.zeros(9))
    with pytest.raises(TooLarge):
        utility_exact(LinearPolicy([0.0]), q)


@pytest.mark.parametrize("seed", range(5))
def test_exact_gradient_matches_finite_differences(seed):
    q, pol = instance(seed)
    g = utility_grad_exact(pol, q)
    fd = central_diff(lambda th: utility_exact(LinearPolicy(th), q), pol.theta)
    assert np.allclose(g, fd, atol=1e-5)


def test_duplicate_items_cancel_at_zero_weights():
    q = Query("q", [[1.0, 0.0], [0.0, 1.0]], [1.0, 1.0])
    g = utility_grad_exact(LinearPolicy([0.0, 0.0]), q)
    assert g @ np.array([1.0, -1.0]) == pytest.approx(0.0, abs=1e-15)


def test_estimator_matches_exact_at_many_samples():
    q, pol = instance(11)
    g, _ = utility_grad_estimate(pol, q, UtilitySpec(mc_samples=100_000, use_baseline=False),
                                 np.random.default_rng(0))
    assert rel_err(g, utility_grad_exact(pol, q)) < 0.05


def test_estimator_is_invariant_to_item_order():
    q, pol = instance(4)
    perm = np.array([2, 0, 3, 1])
    q2 = Query("q", q.features[perm], q.rels[perm])
    for use_baseline in (True, False):
        spec = UtilitySpec(mc_samples=20, use_baseline=use_baseline)
        g1, u1 = utility_grad_estimate(pol, q, spec, np.random.default_rng(5))
        g2, u2 = utility_grad_estimate(pol, q2, spec, np.random.default_rng(5))
        assert u1 == u2
        np.testing.assert_allclose(g1, g2, rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(utility_grad_exact(pol, q), utility_grad_exact(pol, q2), atol=1e-12)
