import math

import numpy as np
import pytest

from vosopt.core import Objective
from vosopt.errors import ConfigurationError, ParameterError
from vosopt.lyapunov import (LyapunovSpec, check_cross_term_lemma, check_nonnegative,
                             check_strong_lyapunov, eval_lyapunov, integrate_flow,
                             strong_lyapunov_sides)
from vosopt.problems import build_least_squares_convex, build_quadratic, build_skew_monotone
from vosopt.solvers import initial_state
from vosopt.solvers.state import SchemeState
from vosopt.solvers.stepsize import vos_alpha


@pytest.fixture(scope="module")
def quad():
    return build_quadratic([1, 10], seed=7, dim=8)


def all_specs(q):
    S, f, xs = q.splitting(), q.objective, q.x_star
    a = vos_alpha(q.mu, q.lipschitz)
    return [LyapunovSpec("gap", xs, f=f), LyapunovSpec("distance", xs),
            LyapunovSpec("combined", xs, f=f, mu=q.mu),
            LyapunovSpec("vos_F", xs, F=S.F, mu=S.mu), LyapunovSpec("vos_f", xs, f=f, mu=S.mu),
            LyapunovSpec("modified_alpha", xs, F=S.F, mu=S.mu, alpha=a),
            LyapunovSpec("scaled", xs, F=S.F), LyapunovSpec("scaled_ppa", xs, f=f),
            LyapunovSpec("perturbed", xs, F=S.F, epsilon=0.3)]


def test_zero_at_solution(quad):
    st = initial_state(quad.x_star, gamma=2.0, epsilon=0.5)
    for spec in all_specs(quad):
        assert abs(eval_lyapunov(spec, st)) <= 1e-12, spec.kind


def test_vos_F_closed_form(quad, rng):
    S = quad.splitting()
    xs = quad.x_star
    A = quad.a_matrix - quad.mu * np.eye(quad.dim)
    x, y = rng.standard_normal(quad.dim), rng.standard_normal(quad.dim)
    want = 0.5 * (x - xs) @ A @ (x - xs) + 0.5 * quad.mu * (y - xs) @ (y - xs)
    got = eval_lyapunov(LyapunovSpec("vos_F", xs, F=S.F, mu=S.mu), SchemeState(x=x, y=y))
    assert got == pytest.approx(want, rel=1e-13)


def test_modified_minus_vos_F(quad, rng):
    S = quad.splitting()
    xs = quad.x_star
    a = 0.2
    for _ in range(10):
        st = SchemeState(x=rng.standard_normal(quad.dim), y=rng.standard_normal(quad.dim))
        e = eval_lyapunov(LyapunovSpec("vos_F", xs, F=S.F, mu=S.mu), st)
        ea = eval_lyapunov(LyapunovSpec("modified_alpha", xs, F=S.F, mu=S.mu, alpha=a), st)
        cross = (S.F.gradient(st.x) - S.F.gradient(xs)) @ (st.y - xs)
        assert abs((ea - e) - (-a * cross)) <= 1e-14 * (1 + abs(e))


def test_modified_nonnegative_at_theorem_alpha(quad):
    S = quad.splitting()
    a = vos_alpha(quad.mu, quad.lipschitz)
    spec = LyapunovSpec("modified_alpha", quad.x_star, F=S.F, mu=S.mu, alpha=a)
    assert check_nonnegative(spec, samples=500).passed


def test_unknown_kind():
    with pytest.raises(ConfigurationError):
        LyapunovSpec("nope", np.zeros(2))


def test_strong_lyapunov_equilibrium(quad):
    S = quad.splitting()
    spec = LyapunovSpec("vos_F", quad.x_star, F=S.F, mu=S.mu)
    lhs, rhs = strong_lyapunov_sides("vos", spec, quad, initial_state(quad.x_star))
    assert abs(lhs) <= 1e-12 and abs(rhs) <= 1e-12


@pytest.mark.parametrize("flow,kind", [("vos", "vos_F"), ("vos", "vos_f"),
                                       ("gradient", "gap"), ("gradient", "distance"),
                                       ("gradient", "combined"), ("scaled_vos", "scaled"),
                                       ("perturbed_vos", "perturbed")])
def test_strong_lyapunov_zero_violations(quad, flow, kind):
    spec = next(s for s in all_specs(quad) if s.kind == kind)
    system = quad.objective if flow == "gradient" else quad
    assert check_strong_lyapunov(flow, spec, system, samples=1000, seed=1).passed


def test_perturbed_on_convex_least_squares():
    p = build_least_squares_convex(m=10, n=25, seed=1)
    S = p.splitting()
    spec = LyapunovSpec("perturbed", p.x_star, F=S.F, epsilon=1e-2)
    assert check_strong_lyapunov("perturbed_vos", spec, p, samples=500).passed


def test_falsified_mu_is_detected():
    p = build_quadratic([1, 10], seed=0, dim=6).with_declared(mu=3.0)
    f = p.objective
    rep = check_strong_lyapunov("gradient", LyapunovSpec("combined", p.x_star, f=f, mu=3.0),
                                f, samples=500)
    assert not rep.passed
    assert rep[0].name == "gradient/combined"


def test_pairing_validated(quad):
    S = quad.splitting()
    spec = LyapunovSpec("vos_F", quad.x_star, F=S.F, mu=S.mu)
    with pytest.raises(ConfigurationError):
        check_strong_lyapunov("gradient", spec, quad)
    with pytest.raises(ConfigurationError):
        check_strong_lyapunov("theta", spec, quad)
    with pytest.raises(ParameterError):
        check_strong_lyapunov("vos", spec, quad, samples=0)


def test_cross_term_lemma_quadratic(quad):
    S = quad.splitting()
    assert check_cross_term_lemma(S.F, quad.mu, samples=1000, seed=3).passed


def test_cross_term_lemma_coincident_points():
    # x = x^: the left side is 0 and the right side is c mu/2 |y - y^|^2 >= 0
    F = Objective(lambda x: 0.5 * float(x @ x), lambda x: x.copy(), 0.0, 1.0, 3)
    mu = 0.5
    x = np.array([1.0, -2.0, 0.5])
    y, yh = np.array([0.0, 1.0, 2.0]), np.array([3.0, 1.0, -1.0])
    lhs = abs(float((yh - y) @ (F.gradient(x) - F.gradient(x))))
    rhs = math.sqrt(F.lipschitz / mu) * (0.0 + 0.5 * mu * float((y - yh) @ (y - yh)))
    assert lhs == 0.0 and rhs > 0.0
    # y = y^ as well: 0 <= 0 with no slack
    assert abs(float((y - y) @ (F.gradient(x) - F.gradient(x)))) == 0.0


def test_cross_term_lemma_skew_variant():
    p = build_skew_monotone(n=12, seed=2)
    rep = check_cross_term_lemma(p.objective.shifted(), p.mu, samples=500, decomp=p.skew)
    assert rep.passed
    assert any(k.startswith("cross_term_skew") for k in rep.margins)


# -- flows -----------------------------------------------------------------------

def test_gamma_flow():
    tr = integrate_flow("gamma", None, SchemeState(x=np.zeros(1), gamma=1.0), 1.0,
                        check_halving=False)
    assert abs(tr.final.gamma - math.exp(-1)) <= 1e-8


def test_gradient_flow_half_square():
    f = Objective(lambda x: 0.5 * float(x @ x), lambda x: x.copy(), 1.0, 1.0, 1)
    spec = LyapunovSpec("gap", np.zeros(1), f=f, mu=1.0)
    tr = integrate_flow("gradient", f, initial_state([1.0]), 2.0, spec=spec)
    # x(t) = e^{-t}, so the gap is e^{-2t}/2
    assert np.allclose(tr.energies, 0.5 * np.exp(-2 * tr.times), rtol=1e-10)
    assert tr.within_envelope and tr.halving_ok


def test_vos_flow_envelope(quad):
    S = quad.splitting()
    spec = LyapunovSpec("vos_F", quad.x_star, F=S.F, mu=S.mu)
    tr = integrate_flow("vos", quad, initial_state(quad.initial_point(0)), 10.0, spec=spec)
    assert tr.within_envelope
    assert tr.halving_ok


def test_flow_parameter_checks(quad):
    with pytest.raises(ParameterError):
        integrate_flow("gamma", None, SchemeState(x=np.zeros(1), gamma=1.0), 0.0)
    with pytest.raises(ConfigurationError):
        integrate_flow("vos", quad, initial_state(np.zeros(quad.dim)), 1.0)
