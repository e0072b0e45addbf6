import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import logsumexp, softmax

from vosopt.core import (Objective, as_vector, bregman_divergence, check_three_point_identity,
                         gradient_check, linear_combination, power_iteration,
                         resolvent_residual, sample_strong_monotonicity, scaled_identity,
                         symmetrized_bregman, verify_convexity_bounds)
from vosopt.errors import InputError, ParameterError


def half_norm(dim):
    return Objective(lambda x: 0.5 * float(x @ x), lambda x: x.copy(), 1.0, 1.0, dim)


def quartic():
    # f(x) = x^4 / 4 in one dimension
    return Objective(lambda x: 0.25 * float(x[0] ** 4), lambda x: x ** 3, 0.0, 1e9, 1)


def diag_quadratic(d, mu=None, L=None):
    d = np.asarray(d, float)
    return Objective(lambda x: 0.5 * float(x @ (d * x)), lambda x: d * x,
                     float(d.min()) if mu is None else mu, float(d.max()) if L is None else L,
                     d.size)


def log_sum_exp(dim):
    return Objective(lambda x: float(logsumexp(x)), softmax, 0.0, 1.0, dim)


# -- Bregman divergences ------------------------------------------------------

def test_bregman_half_norm():
    assert bregman_divergence(half_norm(2), [1, 0], [0, 0]) == pytest.approx(0.5)


def test_bregman_zero_on_diagonal(rng):
    f = log_sum_exp(4)
    x = rng.standard_normal(4)
    assert bregman_divergence(f, x, x) == 0.0


def test_bregman_quartic_hand_value():
    # f(2) - f(1) - f'(1)(2 - 1) = 4 - 1/4 - 1 with f'(x) = x^3
    assert bregman_divergence(quartic(), [2.0], [1.0]) == pytest.approx(2.75, abs=1e-15)
    # reverse direction: 1/4 - 4 - 8 * (1 - 2)
    assert bregman_divergence(quartic(), [1.0], [2.0]) == pytest.approx(4.25, abs=1e-15)


def test_symmetrized_quartic_hand_value():
    f = quartic()
    val = symmetrized_bregman(f, [2.0], [1.0])
    assert val == pytest.approx(3.5, abs=1e-15)
    avg = 0.5 * (bregman_divergence(f, [1.0], [2.0]) + bregman_divergence(f, [2.0], [1.0]))
    assert val == pytest.approx(avg, abs=1e-14)


def test_symmetrized_quadratic_equals_bregman(rng):
    f = diag_quadratic([1.0, 3.0, 7.0])
    x, y = rng.standard_normal(3), rng.standard_normal(3)
    assert symmetrized_bregman(f, x, y) == pytest.approx(bregman_divergence(f, y, x), rel=1e-13)
    assert symmetrized_bregman(f, x, x) == 0.0


def test_bregman_dimension_mismatch():
    with pytest.raises(InputError):
        bregman_divergence(half_norm(2), [1, 0, 0], [0, 0])


def test_as_vector_rejects_nonfinite():
    with pytest.raises(InputError):
        as_vector([1.0, np.nan])
    with pytest.raises(InputError):
        as_vector(np.ones((2, 2)))


# -- three-point identity ----------------------------------------------------

def test_three_point_identity_smooth(rng):
    f = log_sum_exp(5)
    for _ in range(20):
        x, y, z = (rng.standard_normal(5) for _ in range(3))
        assert check_three_point_identity(f, x, y, z, relative=True) <= 1e-10


def test_three_point_identity_coincident():
    f = log_sum_exp(3)
    x = np.array([0.3, -1.0, 2.0])
    assert check_three_point_identity(f, x, x, x) == 0.0


def test_three_point_identity_quadratic(rng):
    f = diag_quadratic([1.0, 10.0, 100.0])
    x, y, z = (rng.standard_normal(3) for _ in range(3))
    assert check_three_point_identity(f, x, y, z, relative=True) <= 1e-14


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=9, max_size=9))
def test_three_point_identity_property(vals):
    f = log_sum_exp(3)
    v = np.array(vals)
    assert check_three_point_identity(f, v[:3], v[3:6], v[6:], relative=True) <= 1e-10


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=4, max_size=4))
def test_bregman_nonnegative_property(vals):
    f = log_sum_exp(2)
    v = np.array(vals)
    assert bregman_divergence(f, v[:2], v[2:]) >= -1e-12


# -- convexity bounds ----------------------------------------------------------

def test_bounds_hold_for_exact_constants():
    rep = verify_convexity_bounds(diag_quadratic([1.0, 10.0]), samples=1000, seed=0)
    assert rep.passed, rep


def test_bounds_flag_overstated_mu():
    f = diag_quadratic([1.0, 10.0], mu=20.0, L=10.0)
    rep = verify_convexity_bounds(f, samples=200, seed=0)
    names = {v.name for v in rep}
    assert any(n.startswith("lower_mu") for n in names)
    assert "declared_constants(mu<=L)" in names


def test_bounds_flag_overstated_mu_below_lipschitz():
    # mu = 5 is still <= L but false along the first eigenvector
    rep = verify_convexity_bounds(diag_quadratic([1.0, 10.0], mu=5.0), samples=200, seed=0)
    assert any(v.name.startswith("lower_mu") for v in rep)


def test_bounds_log_sum_exp_mu_zero():
    f = log_sum_exp(4)
    rep = verify_convexity_bounds(f, samples=500, seed=1, radius=3.0)
    assert rep.passed, rep
    assert not any(k.startswith("upper_mu_grad") for k in rep.margins)
    assert any(k.startswith("co_convexity") for k in rep.margins)


def test_bounds_with_minimizer():
    f = diag_quadratic([2.0, 5.0, 9.0])
    rep = verify_convexity_bounds(f, samples=300, seed=2, x_star=np.zeros(3))
    assert rep.passed
    assert "inner_vs_gap" in rep.margins


def test_bounds_sample_count_validated():
    with pytest.raises(ParameterError):
        verify_convexity_bounds(half_norm(1), samples=0)


def test_gradient_check_consistent(rng):
    assert gradient_check(log_sum_exp(6), rng.standard_normal(6)) <= 1e-5


def test_gradient_check_detects_wrong_gradient(rng):
    bad = Objective(lambda x: float(logsumexp(x)), lambda x: 2 * softmax(x), 0.0, 1.0, 3)
    assert gradient_check(bad, rng.standard_normal(3)) > 1e-2


def test_linear_combination_constants():
    f = linear_combination(2.0, diag_quadratic([1.0, 4.0]), 0.5, diag_quadratic([2.0, 2.0]))
    assert (f.mu, f.lipschitz) == (3.0, 9.0)
    assert f.value(np.array([1.0, 1.0])) == pytest.approx(2 * 2.5 + 0.5 * 2.0)


def test_shifted_objective_constants():
    f = diag_quadratic([1.0, 10.0]).shifted()
    assert (f.mu, f.lipschitz) == (0.0, 9.0)
    assert np.allclose(f.gradient(np.array([1.0, 1.0])), [0.0, 9.0])


# -- operators -------------------------------------------------------------------

def test_scaled_identity_resolvent_and_monotonicity():
    N = scaled_identity(2.0, 3)
    assert resolvent_residual(N, 0.5, np.array([1.0, -2.0, 3.0])) <= 1e-15
    assert sample_strong_monotonicity(N, samples=50).passed


def test_power_iteration_close_to_exact(rng):
    M = rng.standard_normal((8, 5))
    exact = np.linalg.norm(M, 2)
    est = power_iteration(M, iterations=200)
    assert est <= exact * (1 + 1e-12)
    assert est >= 0.99 * exact
    assert power_iteration(np.zeros((3, 3))) == 0.0


def test_condition_number():
    assert diag_quadratic([2.0, 8.0]).condition_number == 4.0
    assert math.isinf(log_sum_exp(2).condition_number)
