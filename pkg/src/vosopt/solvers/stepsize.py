"""Step-size formulas and the step-size policy object."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from ..errors import ConfigurationError, ParameterError

log = logging.getLogger("vosopt")

ALPHA_MAX = 1e6
BISECTION_TOL = 1e-12


def _check_positive(**kw):
    for k, v in kw.items():
        if not v > 0:
            raise ParameterError(f"{k} must be positive, got {v}")


def aor_alpha(mu: float, L_F: float, alpha_max: float = ALPHA_MAX) -> float:
    """``sqrt(mu / L_F)``; capped at `alpha_max` when ``L_F = 0``."""
    _check_positive(mu=mu)
    if L_F <= 0 or mu / L_F > alpha_max ** 2:
        log.info("L_F = %g is degenerate; step size capped at %g", L_F, alpha_max)
        return alpha_max
    return math.sqrt(mu / L_F)


def vos_alpha(mu: float, L: float, alpha_max: float = ALPHA_MAX) -> float:
    """``sqrt(mu / (L - mu))`` for ``F = f - mu|x|^2/2``."""
    return aor_alpha(mu, L - mu, alpha_max)


def extragrad_alpha(mu: float, L: float) -> float:
    _check_positive(mu=mu, L=L)
    return math.sqrt(mu / L)


def gd_alpha(mu: float, L: float) -> float:
    """The optimal fixed step ``2 / (L + mu)``."""
    _check_positive(L=L)
    return 2.0 / (L + mu)


def maxmin_bisection(increasing: Callable[[float], float], decreasing: Callable[[float], float],
                     tol: float = BISECTION_TOL) -> tuple:
    """Maximize ``min(increasing(b), decreasing(b))`` over ``b`` in (0, 1).

    The maximum sits where the two branches cross; returns ``(alpha, beta)``.
    """
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if increasing(mid) < decreasing(mid):
            lo = mid
        else:
            hi = mid
    beta = 0.5 * (lo + hi)
    return min(increasing(beta), decreasing(beta)), beta


def agss_explicit_alpha(mu: float, L: float, l_bsym: float,
                        alpha_max: float = ALPHA_MAX) -> tuple:
    """``max_b min(sqrt(b mu/(L-mu)), (1-b) mu / L_Bsym)``; returns ``(alpha, beta)``."""
    _check_positive(mu=mu)
    if l_bsym <= 0:
        return vos_alpha(mu, L, alpha_max), 1.0
    if L - mu <= 0:
        return min(mu / l_bsym, alpha_max), 0.0
    return maxmin_bisection(lambda b: math.sqrt(b * mu / (L - mu)),
                            lambda b: (1 - b) * mu / l_bsym)


def saddle_implicit_alpha(mu_f: float, L_f: float, mu_g: float, L_g: float,
                          alpha_max: float = ALPHA_MAX) -> float:
    return min(vos_alpha(mu_f, L_f, alpha_max), vos_alpha(mu_g, L_g, alpha_max))


def saddle_explicit_alpha(mu_f: float, L_f: float, mu_g: float, L_g: float, b_norm: float,
                          alpha_max: float = ALPHA_MAX) -> tuple:
    """``max_b min(sqrt(b) a, (1-b) sqrt(mu_f mu_g)/|B|)`` with ``a`` the implicit step."""
    a = saddle_implicit_alpha(mu_f, L_f, mu_g, L_g, alpha_max)
    if b_norm <= 0:
        return a, 1.0
    c = math.sqrt(mu_f * mu_g) / b_norm
    return maxmin_bisection(lambda b: math.sqrt(b) * a, lambda b: (1 - b) * c)


def hss_alpha(lam_min: float, lam_max: float) -> float:
    """Optimal HSS shift ``sqrt(lam_min lam_max)``."""
    _check_positive(lam_min=lam_min, lam_max=lam_max)
    return math.sqrt(lam_min * lam_max)


def hss_rate(lam_min: float, lam_max: float) -> float:
    k = math.sqrt(lam_max / lam_min)
    return (k - 1) / (k + 1)


def hb_parameters(mu: float, L: float, alpha: Optional[float] = None) -> tuple:
    """``(gamma, beta)`` of the triple-term method.

    For general ``alpha``: ``gamma = a^2/((1+a)^2 mu)``, ``beta = (1+a^2)/(1+a)^2``;
    the default ``alpha = sqrt(mu/(L-mu))`` gives ``gamma = 1/(L + 2 sqrt(mu(L-mu)))``
    and ``beta = L gamma``.
    """
    _check_positive(mu=mu)
    if alpha is None:
        if L - mu <= 0:
            a = ALPHA_MAX
        else:
            g = 1.0 / (L + 2.0 * math.sqrt(mu * (L - mu)))
            return g, L * g
    else:
        a = float(alpha)
    return a * a / ((1 + a) ** 2 * mu), (1 + a * a) / (1 + a) ** 2


def scaled_alpha(gamma: float, L_F: float) -> float:
    _check_positive(gamma=gamma, L_F=L_F)
    return math.sqrt(gamma / L_F)


def scaled_c0(gamma0: float, L_F: float) -> float:
    """``c0 = sqrt(g0/L_F) / (sqrt(g0/L_F + 1) + 1)``."""
    r = gamma0 / L_F
    return math.sqrt(r) / (math.sqrt(r + 1) + 1)


def simple_alpha(k: int) -> float:
    """``alpha_k = 2/(k+1)``; paired with ``gamma_k = 4 L_F/(k+1)^2``."""
    return 2.0 / (k + 1)


@dataclass(frozen=True)
class StepSizePolicy:
    """How a run picks its step size.

    ``mode`` is ``fixed`` (``alpha`` given), ``theorem_optimal`` (the runner
    computes the theorem's value from the problem constants) or ``sequence``
    (``alpha`` is a callable ``k -> alpha_k`` or the name ``"simple"``).
    """

    mode: str = "theorem_optimal"
    alpha: Union[None, float, Callable[[int], float], str] = None

    MODES = ("fixed", "theorem_optimal", "sequence")

    def __post_init__(self):
        if self.mode not in self.MODES:
            raise ConfigurationError(f"unknown step-size mode {self.mode!r}")
        if self.mode == "fixed":
            if self.alpha is None or not float(self.alpha) > 0:
                raise ParameterError("fixed step size needs alpha > 0")
        if self.mode == "sequence":
            if not (callable(self.alpha) or self.alpha == "simple"):
                raise ConfigurationError("sequence mode needs a callable or 'simple'")

    def at(self, k: int, default: Optional[float] = None) -> float:
        if self.mode == "fixed":
            return float(self.alpha)
        if self.mode == "sequence":
            a = simple_alpha(k) if self.alpha == "simple" else float(self.alpha(k))
            if not a > 0:
                raise ParameterError(f"step size sequence produced alpha_{k} = {a}")
            return a
        if default is None:
            raise ConfigurationError("theorem-optimal step requested without a formula")
        return default

    @classmethod
    def from_dict(cls, d) -> "StepSizePolicy":
        if d is None:
            return cls()
        if not isinstance(d, dict):
            raise ConfigurationError("policy must be an object")
        return cls(d.get("mode", "theorem_optimal"), d.get("alpha"))
