import numpy as np
import pytest

from vosopt.core import gradient_check
from vosopt.errors import ConfigurationError, InputError, ParameterError
from vosopt.problems import (LeastSquaresProblem, build_lasso, build_least_squares_convex,
                             build_logistic, build_quadratic, build_saddle, build_skew_monotone,
                             ista, problem_from_dict, prox_gradient_residual, soft_threshold)


def test_quadratic_identity_spectrum():
    q = build_quadratic([1, 1], seed=0)
    assert np.allclose(q.a_matrix, np.eye(2), atol=1e-15)
    assert np.allclose(q.x_star, q.b_vector, atol=1e-15)


def test_quadratic_constants():
    q = build_quadratic([1, 100], seed=42)
    assert (q.mu, q.lipschitz) == (1.0, 100.0)
    eig = np.linalg.eigvalsh(q.a_matrix)
    assert eig[0] == pytest.approx(1.0, rel=0.01)
    assert eig[-1] == pytest.approx(100.0, rel=0.01)
    assert np.max(np.abs(q.a_matrix - q.a_matrix.T)) <= 1e-14


@pytest.mark.parametrize("spectrum,dim", [([1, 100], None), ([1, 1e4], 50), ([0.5, 3, 7], None)])
def test_quadratic_solution_residual(spectrum, dim):
    q = build_quadratic(spectrum, seed=1, dim=dim)
    b = q.b_vector
    assert np.linalg.norm(q.a_matrix @ q.x_star - b) <= 1e-10 * np.linalg.norm(b)


def test_quadratic_rejects_negative_spectrum():
    with pytest.raises(InputError):
        build_quadratic([-1, 2])


def test_soft_threshold_examples():
    assert np.array_equal(soft_threshold(1.0, np.array([2.0, -0.5, 0.0])), [1.0, 0.0, 0.0])
    assert np.array_equal(soft_threshold(3.7, np.zeros(4)), np.zeros(4))
    assert np.array_equal(soft_threshold(0.1, np.array([0.1, -0.1])), [0.0, 0.0])


def test_soft_threshold_kkt_and_nonexpansive(rng):
    lam = 0.3
    for _ in range(50):
        u, v = rng.standard_normal(6), rng.standard_normal(6)
        p = soft_threshold(lam, v)
        # 0 in d|.|(p) + (p - v)/lam
        g = (v - p) / lam
        on = p != 0
        assert np.allclose(g[on], np.sign(p[on]))
        assert np.all(np.abs(g[~on]) <= 1 + 1e-12)
        assert np.linalg.norm(soft_threshold(lam, u) - p) <= np.linalg.norm(u - v) + 1e-15


def test_soft_threshold_rejects_nonpositive():
    with pytest.raises(ParameterError):
        soft_threshold(0.0, np.ones(2))


def test_least_squares_axis_example():
    # A = [1, 0], b = 0: every point on the x2-axis is a minimizer
    A = np.array([[1.0, 0.0]])
    p = LeastSquaresProblem(A, np.zeros(1), 0.0, 1.0, np.zeros(2), np.array([[1.0], [0.0]]))
    f = p.objective
    for t in (-3.0, 0.0, 2.5):
        assert f.value(np.array([0.0, t])) == 0.0
        assert np.array_equal(f.gradient(np.array([0.0, t])), [0.0, 0.0])
    assert f.value(np.array([1.0, 0.0])) == 0.5
    assert np.allclose(p.solution_near([3.0, 4.0]), [0.0, 4.0])


def test_least_squares_seeded(least_squares):
    p = least_squares
    f = p.objective
    assert f.value(p.x_star) <= 1e-20
    assert np.allclose(p.x_star, np.linalg.pinv(p.a_matrix) @ p.b_vector, atol=1e-6)
    rng = np.random.default_rng(0)
    for _ in range(5):
        xs = p.solution_near(rng.standard_normal(p.dim))
        assert np.linalg.norm(f.gradient(xs)) <= 1e-10
    assert p.mu == 0.0
    assert np.linalg.norm(p.a_matrix, 2) ** 2 == pytest.approx(p.lipschitz, rel=1e-12)


def test_least_squares_prox_matches_normal_equations(least_squares):
    p = least_squares
    A, b = p.a_matrix, p.b_vector
    v = np.random.default_rng(5).standard_normal(p.dim)
    for t in (0.1, 1.0, 10.0):
        z = p.objective.prox(t, v)
        assert np.linalg.norm(A.T @ (A @ z - b) + (z - v) / t) <= 1e-10 * (1 + np.linalg.norm(v))


def test_least_squares_needs_wide_matrix():
    with pytest.raises(InputError):
        build_least_squares_convex(m=5, n=5)


def test_logistic_problem():
    p = build_logistic(n=10, seed=2)
    f = p.objective
    assert gradient_check(f, np.linspace(-1, 1, 10)) <= 1e-5
    assert np.linalg.norm(f.gradient(p.x_star)) <= 1e-10
    eig = np.linalg.eigvalsh(f.hessian(np.zeros(10)))
    assert eig[0] >= p.mu * (1 - 1e-12)
    assert eig[-1] <= p.lipschitz * (1 + 1e-12)
    z = f.prox(0.5, np.ones(10))
    assert np.linalg.norm(f.gradient(z) + (z - 1.0) / 0.5) <= 1e-10


def test_lasso_solution_kkt():
    p = build_lasso(n=50, seed=0)
    f = p.objective
    g = f.gradient(p.x_star)
    on = p.x_star != 0
    assert np.allclose(g[on], -p.lam * np.sign(p.x_star[on]), atol=1e-10)
    assert np.all(np.abs(g[~on]) <= p.lam * (1 + 1e-10))
    assert np.linalg.norm(p.x_star - p.ista_solution) <= 1e-8
    assert prox_gradient_residual(f, p.nonsmooth, p.x_star) <= 1e-12


def test_ista_matches_reference():
    p = build_lasso(n=20, seed=3)
    x = ista(p.objective, p.nonsmooth, np.zeros(20))
    assert np.linalg.norm(x - p.x_star) <= 1e-8


def test_skew_problem():
    p = build_skew_monotone(n=20, seed=0)
    assert p.residual(p.x_star) <= 1e-10
    assert p.skew.n_norm == pytest.approx(5.0, rel=1e-12)
    N = p.operator()
    b = np.arange(20.0)
    y = N.resolvent(2.0, b)
    assert np.linalg.norm(2.0 * y + N.apply(y) - b) <= 1e-10 * np.linalg.norm(b)


def test_nonlinear_skew_problem():
    p = build_skew_monotone(n=10, delta=1.0, seed=1)
    assert not p.linear
    assert p.residual(p.x_star) <= 1e-10


def test_saddle_problem():
    p = build_saddle(seed=0)
    assert p.residual(p.x_star) <= 1e-10
    assert p.coupling.b_norm == pytest.approx(3.0, rel=1e-12)
    N = p.operator()
    beta = 2.0 * p.mu_vector
    b = np.linspace(-1, 1, p.dim)
    y = N.resolvent(beta, b)
    assert np.linalg.norm(beta * y + N.apply(y) - b) <= 1e-10 * np.linalg.norm(b)


def test_saddle_resolvent_needs_proportional_beta():
    p = build_saddle(mu_f=1.0, mu_g=2.0, seed=0)
    with pytest.raises(ConfigurationError):
        p.operator().resolvent(np.ones(p.dim), np.ones(p.dim))


@pytest.mark.parametrize("desc", [
    {"type": "quadratic", "spectrum": [1, 10], "dim": 5, "seed": 3},
    {"type": "logistic", "n": 6, "seed": 1},
    {"type": "lasso", "n": 10, "lam": 0.2, "seed": 2},
    {"type": "skew", "n": 6, "seed": 4},
    {"type": "saddle", "m": 3, "n": 4, "seed": 5},
    {"type": "least_squares", "m": 4, "n": 9, "seed": 6},
])
def test_problem_json_round_trip(desc):
    p = problem_from_dict(desc)
    q = problem_from_dict(p.to_dict())
    assert np.array_equal(p.x_star, q.x_star)
    assert p.to_dict() == q.to_dict()


def test_problem_json_errors():
    with pytest.raises(ConfigurationError):
        problem_from_dict({"type": "nope"})
    with pytest.raises(ConfigurationError):
        problem_from_dict({"spectrum": [1, 2]})
    with pytest.raises(ConfigurationError):
        problem_from_dict({"type": "quadratic"})


def test_declared_override_keeps_data():
    p = problem_from_dict({"type": "quadratic", "spectrum": [1, 10], "declared_mu": 3.0})
    q = build_quadratic([1, 10])
    assert p.mu == 3.0
    assert np.array_equal(p.a_matrix, q.a_matrix)
