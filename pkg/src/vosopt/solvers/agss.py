"""AGSS for ``grad f + N`` with skew ``N``, and the bilinear saddle solvers."""

from __future__ import annotations

import numpy as np

from ..errors import CapabilityError, ParameterError
from ..operators import forward_substitution_solve, saddle_block_solve, shifted_skew_solve
from ..problems import SaddleProblem, SkewMonotoneProblem
from .state import SchemeState


def _check_alpha(alpha):
    if not alpha > 0:
        raise ParameterError(f"alpha must be positive, got {alpha}")


def agss_implicit_step(problem: SkewMonotoneProblem, state: SchemeState,
                       alpha: float) -> SchemeState:
    """Solve ``(beta I + N) y+ = (mu/alpha) y + mu x - grad f(x)`` with
    ``beta = mu (1 + 1/alpha)``, then the AOR ``x`` update."""
    _check_alpha(alpha)
    mu = problem.mu
    f = problem.objective
    x, y = state.x, state.y
    beta = mu * (1 + 1 / alpha)
    y1 = shifted_skew_solve(problem.skew, beta, (mu / alpha) * y + mu * x - f.gradient(x))
    x1 = (x + alpha * (2 * y1 - y)) / (1 + alpha)
    return state.advance(x=x1, y=y1)


def agss_explicit_step(problem: SkewMonotoneProblem, state: SchemeState,
                       alpha: float) -> SchemeState:
    """Fully explicit AGSS with ``N = B^sym - 2B``.

    ``((mu/alpha + mu) I - 2B) y+ = (mu/alpha) y + mu x - grad f(x) - B^sym y``
    is lower triangular, so ``y+`` costs one forward sweep.
    """
    _check_alpha(alpha)
    mu = problem.mu
    d = problem.skew
    f = problem.objective
    x, y = state.x, state.y
    rhs = (mu / alpha) * y + mu * x - f.gradient(x) - d.b_sym @ y
    y1 = forward_substitution_solve(d, mu / alpha + mu, rhs, scale=-2.0)
    x1 = (x + alpha * (2 * y1 - y)) / (1 + alpha)
    return state.advance(x=x1, y=y1)


def _saddle_ready(problem: SaddleProblem):
    if not (problem.f.mu > 0 and problem.g.mu > 0):
        raise CapabilityError("saddle schemes need mu_f > 0 and mu_g > 0; "
                              "the case mu_g = 0 is not handled by this framework")


def saddle_implicit_step(problem: SaddleProblem, state: SchemeState,
                         alpha: float) -> SchemeState:
    """Coupled ``(v, q)`` from the block solve, then AOR updates of ``(u, p)``.

    ``state.x`` stacks ``(u, p)`` and ``state.y`` stacks ``(v, q)``.
    """
    _check_alpha(alpha)
    _saddle_ready(problem)
    a = alpha
    f, g = problem.f, problem.g
    u, p = problem.split(state.x)
    v, q = problem.split(state.y)
    rv = v + a * u - (a / f.mu) * f.gradient(u)
    rq = q + a * p - (a / g.mu) * g.gradient(p)
    v1, q1 = saddle_block_solve(problem.coupling, a, rv, rq)
    y1 = np.concatenate([v1, q1])
    x1 = (state.x + a * (2 * y1 - state.y)) / (1 + a)
    return state.advance(x=x1, y=y1)


def saddle_explicit_step(problem: SaddleProblem, state: SchemeState,
                         alpha: float) -> SchemeState:
    """Explicit saddle step: ``v+`` first, then ``q+`` with ``2 B v+ - B v``."""
    _check_alpha(alpha)
    _saddle_ready(problem)
    a = alpha
    f, g = problem.f, problem.g
    B = problem.coupling.b_matrix
    u, p = problem.split(state.x)
    v, q = problem.split(state.y)
    v1 = (v + a * u - (a / f.mu) * (f.gradient(u) + B.T @ q)) / (1 + a)
    q1 = (q + a * p - (a / g.mu) * (g.gradient(p) - 2 * (B @ v1) + B @ v)) / (1 + a)
    y1 = np.concatenate([v1, q1])
    x1 = (state.x + a * (2 * y1 - state.y)) / (1 + a)
    return state.advance(x=x1, y=y1)
