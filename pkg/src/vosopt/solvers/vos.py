"""The VOS family: AOR, EPC, extra gradient, triple-term and composite steps."""

from __future__ import annotations

import numpy as np

from ..core import MonotoneOperator, Objective, ProxOracle
from ..errors import CapabilityError, ParameterError
from .state import SchemeState
from .stepsize import hb_parameters


def _check_alpha(alpha):
    if not alpha > 0:
        raise ParameterError(f"alpha must be positive, got {alpha}")


def _resolvent(N: MonotoneOperator):
    if N.resolvent is None:
        raise CapabilityError(f"operator {N.name!r} has no resolvent")
    return N.resolvent


def _weight(N, mu):
    return N.mu_monotone if mu is None else mu


def aor_vos_step(F: Objective, N: MonotoneOperator, state: SchemeState, alpha: float,
                 mu=None) -> SchemeState:
    """Implicit ``y`` update with the gradient at ``x_k``, then the over-relaxed ``x``.

    ``y+`` solves ``(mu/alpha)(y+ - y) + N(y+) = -grad F(x)``;
    ``x+ = (x + alpha (2 y+ - y)) / (1 + alpha)``. ``mu`` may be a vector of
    per-coordinate weights (block problems); it defaults to ``N.mu_monotone``.
    """
    _check_alpha(alpha)
    res = _resolvent(N)
    mu = _weight(N, mu)
    x, y = state.x, state.y
    beta = mu / alpha
    y1 = res(beta, beta * y - F.gradient(x))
    x1 = (x + alpha * (2 * y1 - y)) / (1 + alpha)
    return state.advance(x=x1, y=y1)


def epc_vos_step(F: Objective, N: MonotoneOperator, state: SchemeState, alpha: float,
                 mu=None) -> SchemeState:
    """Predictor ``x~ = (x + alpha y)/(1+alpha)``, implicit ``y`` with ``grad F(x~)``,
    corrector ``x+ = (x + alpha y+)/(1+alpha)``."""
    _check_alpha(alpha)
    res = _resolvent(N)
    mu = _weight(N, mu)
    x, y = state.x, state.y
    xt = (x + alpha * y) / (1 + alpha)
    beta = mu / alpha
    y1 = res(beta, beta * y - F.gradient(xt))
    x1 = (x + alpha * y1) / (1 + alpha)
    return state.advance(x=x1, y=y1, x_tilde=xt)


def aor_hb_step(f: Objective, state: SchemeState, gamma_beta=None) -> SchemeState:
    """``x+ = x - gamma (2 grad f(x) - grad f(x_prev)) + beta (x - x_prev)``.

    Without history the missing terms are taken as zero, so the first step is
    ``x - 2 gamma grad f(x)``: the AOR-VOS step started from ``y = x``.
    ``state.y`` is left untouched.
    """
    gamma, beta = hb_parameters(f.mu, f.lipschitz) if gamma_beta is None else gamma_beta
    if not gamma > 0:
        raise ParameterError(f"gamma must be positive, got {gamma}")
    x = state.x
    g = f.gradient(x)
    if state.prev_gradient is None or state.x_prev is None:
        x1 = x - 2 * gamma * g
    else:
        x1 = x - gamma * (2 * g - state.prev_gradient) + beta * (x - state.x_prev)
    return state.advance(x=x1, x_prev=x, prev_gradient=g)


def extra_gradient_step(f: Objective, state: SchemeState, alpha: float,
                        monotone_reset: bool = False) -> SchemeState:
    """Predictor, explicit ``y`` update at the predictor, then a ``1/L`` gradient step.

    With `monotone_reset`, ``x+`` falls back to ``x`` whenever ``f(x+) > f(x)``.
    """
    _check_alpha(alpha)
    if not f.mu > 0:
        raise ParameterError("extra-gradient step needs mu > 0")
    mu, L = f.mu, f.lipschitz
    x, y = state.x, state.y
    xt = (x + alpha * y) / (1 + alpha)
    g = f.gradient(xt)
    y1 = (y + alpha * (xt - g / mu)) / (1 + alpha)
    x1 = xt - g / L
    if monotone_reset and f.value(x1) > f.value(x):
        x1 = x
    return state.advance(x=x1, y=y1, x_tilde=xt)


def _composite_y(f: Objective, g: ProxOracle, y, xp, alpha):
    mu = f.mu
    t = alpha / ((1 + alpha) * mu)
    v = y / (1 + alpha) + alpha / ((1 + alpha) * mu) * (mu * xp - f.gradient(xp))
    return g.prox(t, v)


def composite_aor_step(f: Objective, g: ProxOracle, state: SchemeState,
                       alpha: float) -> SchemeState:
    """Prox form of AOR-VOS with ``F = f - mu|x|^2/2`` and ``N = dg + mu I``."""
    _check_alpha(alpha)
    if not f.mu > 0:
        raise ParameterError("composite step needs mu > 0")
    x, y = state.x, state.y
    y1 = _composite_y(f, g, y, x, alpha)
    x1 = (x + 2 * alpha * y1 - alpha * y) / (1 + alpha)
    return state.advance(x=x1, y=y1)


def composite_epc_step(f: Objective, g: ProxOracle, state: SchemeState,
                       alpha: float) -> SchemeState:
    """Prox form of EPC-VOS for ``f + g``."""
    _check_alpha(alpha)
    if not f.mu > 0:
        raise ParameterError("composite step needs mu > 0")
    x, y = state.x, state.y
    xt = (x + alpha * y) / (1 + alpha)
    y1 = _composite_y(f, g, y, xt, alpha)
    x1 = (x + alpha * y1) / (1 + alpha)
    return state.advance(x=x1, y=y1, x_tilde=xt)
