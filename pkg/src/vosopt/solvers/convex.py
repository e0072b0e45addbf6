"""Convex-case schemes (mu = 0): scaled PPA, scaled EPC, perturbed EPC, homotopy."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from ..core import MonotoneOperator, Objective, bregman_divergence
from ..errors import CapabilityError, ConfigurationError, ParameterError
from .baseline import ppa_step
from .state import SchemeState
from .vos import _resolvent


def scaled_ppa_step(f, state: SchemeState, alpha: float) -> SchemeState:
    """``x+ = prox_{t f}(x)`` with ``t = alpha/gamma``, then ``gamma+ = gamma/(1+alpha)``."""
    if not alpha > 0:
        raise ParameterError(f"alpha must be positive, got {alpha}")
    if not state.gamma > 0:
        raise ParameterError("scaled PPA needs gamma > 0")
    x1 = ppa_step(f, state.x, alpha / state.gamma)
    return state.advance(x=x1, y=x1, gamma=state.gamma / (1 + alpha))


def scaled_epc_step(F: Objective, N: MonotoneOperator, state: SchemeState,
                    alpha: Optional[float] = None,
                    gamma_next: Optional[float] = None) -> SchemeState:
    """EPC step of the dynamically scaled flow.

    ``alpha`` defaults to ``sqrt(gamma/L_F)``. ``gamma_next`` defaults to
    ``gamma/(1+alpha)``; a supplied value must not exceed it.
    """
    g = state.gamma
    if not g > 0:
        raise ParameterError("scaled EPC needs gamma > 0")
    a = math.sqrt(g / F.lipschitz) if alpha is None else float(alpha)
    if not a > 0:
        raise ParameterError(f"alpha must be positive, got {a}")
    res = _resolvent(N)
    x, y = state.x, state.y
    xt = (x + a * y) / (1 + a)
    beta = g / a
    y1 = res(beta, beta * y - F.gradient(xt))
    x1 = (x + a * y1) / (1 + a)
    g1 = g / (1 + a)
    if gamma_next is not None:
        if gamma_next > g1 * (1 + 1e-12):
            raise ParameterError("gamma_next violates gamma_{k+1} <= gamma_k/(1+alpha_k)")
        g1 = float(gamma_next)
    return state.advance(x=x1, y=y1, gamma=g1, x_tilde=xt)


def perturbed_epc_step(F: Objective, N: MonotoneOperator, state: SchemeState,
                       alpha: Optional[float] = None) -> SchemeState:
    """EPC step of the perturbed flow with ``eps = state.epsilon``.

    ``y+`` solves ``(eps/alpha + eps) y+ + N(y+) = (eps/alpha) y + eps x~ - grad F(x~)``.
    """
    eps = state.epsilon
    if not eps > 0:
        raise ParameterError("perturbed EPC needs epsilon > 0")
    a = math.sqrt(eps / F.lipschitz) if alpha is None else float(alpha)
    if not a > 0:
        raise ParameterError(f"alpha must be positive, got {a}")
    res = _resolvent(N)
    x, y = state.x, state.y
    xt = (x + a * y) / (1 + a)
    y1 = res(eps * (1 + 1 / a), (eps / a) * y + eps * xt - F.gradient(xt))
    x1 = (x + a * y1) / (1 + a)
    return state.advance(x=x1, y=y1, x_tilde=xt)


def perturbed_energy(F: Objective, state: SchemeState, x_star, epsilon=None) -> float:
    eps = state.epsilon if epsilon is None else epsilon
    e = state.y - x_star
    return bregman_divergence(F, state.x, x_star) + 0.5 * eps * float(e @ e)


@dataclass
class HomotopyRecord:
    k: int
    epsilon: float
    inner: int
    cumulative: int
    energy: Optional[float]
    bound: float


@dataclass
class HomotopyResult:
    state: SchemeState
    outer: List[HomotopyRecord]
    R: float
    m0: float
    L_F: float
    epsilon0: float
    states: List[SchemeState] = field(default_factory=list)

    def predicted_total(self, k: Optional[int] = None) -> float:
        """``sum_{i=1..k} m_i`` in closed form (without rounding)."""
        k = len(self.outer) if k is None else k
        if k == 0:
            return 0.0
        eps_k = self.epsilon0 / 2 ** k
        c = (math.sqrt(self.L_F) + math.sqrt(self.epsilon0)) * math.log(2 * (self.R ** 2 + 1))
        r2 = math.sqrt(2)
        return c * r2 / (r2 - 1) * (eps_k ** -0.5 - self.epsilon0 ** -0.5)

    def rate_bound(self, M: float) -> float:
        """``(R^2+1) / (C M + eps0^{-1/2})^2``."""
        R2 = self.R ** 2
        C = (math.sqrt(2) - 1) / ((math.sqrt(2 * self.L_F) + math.sqrt(2 * self.epsilon0))
                                  * math.log(2 * (R2 + 1)))
        return (R2 + 1) / (C * M + self.epsilon0 ** -0.5) ** 2


def estimate_radius(F: Objective, N: MonotoneOperator, x0, y0, epsilon0: float,
                    steps: int = 100) -> float:
    """Rough ``R`` from a short perturbed run: twice the spread of its iterates."""
    st = SchemeState(x=np.array(x0, float), y=np.array(y0, float), epsilon=epsilon0)
    xs = [st.x]
    for _ in range(steps):
        st = perturbed_epc_step(F, N, st)
        xs.append(st.x)
    last = xs[-1]
    return 2.0 * max(float(np.linalg.norm(x - last)) for x in xs) + 1e-12


def homotopy_restart(F: Objective, N: MonotoneOperator, x0, y0, epsilon0: float,
                     epsilon_target: float, R: Optional[float] = None, x_star=None,
                     L_F: Optional[float] = None,
                     on_inner: Optional[Callable] = None,
                     max_outer: Optional[int] = None) -> HomotopyResult:
    """Perturbed EPC with ``eps`` halved and the inner budget scaled by ``sqrt(2)``
    after every outer pass.

    ``R`` defaults to ``2|x0 - x_star|`` when `x_star` is known, otherwise it
    is estimated by :func:`estimate_radius`. The starting energy must satisfy
    ``E(x0, y0; eps0) <= (R^2 + 1) eps0``. `max_outer` caps the number of
    outer passes; the state after every pass is kept in ``states``.
    """
    if not epsilon0 > 0 or not epsilon_target > 0:
        raise ParameterError("epsilon0 and epsilon_target must be positive")
    L = F.lipschitz if L_F is None else float(L_F)
    if not L > 0:
        raise ParameterError("L_F must be positive")
    x0 = np.array(x0, float)
    y0 = np.array(y0, float)
    if R is None:
        R = (2.0 * float(np.linalg.norm(x0 - x_star)) if x_star is not None
             else estimate_radius(F, N, x0, y0, epsilon0))
    st = SchemeState(x=x0, y=y0, epsilon=epsilon0)
    if x_star is not None:
        e0 = perturbed_energy(F, st, x_star)
        if e0 > (R ** 2 + 1) * epsilon0:
            raise ConfigurationError(
                f"initial energy {e0:.6g} exceeds (R^2+1) eps0 = {(R ** 2 + 1) * epsilon0:.6g}")
    m = (math.sqrt(L) + math.sqrt(epsilon0)) * math.log(2 * (R ** 2 + 1)) / math.sqrt(epsilon0)
    m0 = m
    eps = epsilon0
    outer: List[HomotopyRecord] = []
    states: List[SchemeState] = []
    total = 0
    k = 0
    while eps > epsilon_target and (max_outer is None or k < max_outer):
        eps /= 2
        m *= math.sqrt(2)
        inner = int(math.ceil(m - 1e-9))
        st = st.advance(epsilon=eps, iteration=st.iteration)
        a = math.sqrt(eps / L)
        for _ in range(inner):
            st = perturbed_epc_step(F, N, st, a)
            if on_inner is not None:
                on_inner(st)
        total += inner
        k += 1
        energy = perturbed_energy(F, st, x_star) if x_star is not None else None
        outer.append(HomotopyRecord(k, eps, inner, total, energy, (R ** 2 + 1) * eps))
        states.append(st)
    return HomotopyResult(st, outer, float(R), m0, L, float(epsilon0), states)
