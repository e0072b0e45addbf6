"""Baselines: gradient descent, proximal point and HSS."""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from ..core import Objective, ProxOracle, as_vector
from ..errors import CapabilityError, ConvergenceError, ParameterError
from ..operators import shifted_skew_solve
from ..problems import QuadraticProblem, SkewMonotoneProblem, newton_solve


def gd_step(f: Objective, x, alpha: float) -> np.ndarray:
    """``x - alpha * grad f(x)``."""
    if not alpha > 0:
        raise ParameterError(f"alpha must be positive, got {alpha}")
    return x - alpha * f.gradient(x)


def ppa_step(f, x, t: float) -> np.ndarray:
    """``prox_{t f}(x)``.

    Uses the oracle's own prox when present, otherwise a Newton solve of
    ``grad f(z) + (z - x)/t = 0`` (needs a Hessian).
    """
    if not t > 0:
        raise ParameterError(f"t must be positive, got {t}")
    prox = getattr(f, "prox", None)
    if prox is not None:
        return prox(t, x)
    if isinstance(f, Objective) and f.hessian is not None:
        n = f.dim
        return newton_solve(lambda z: f.gradient(z) + (z - x) / t,
                            lambda z: f.hessian(z) + np.eye(n) / t, x)
    raise CapabilityError("proximal step needs a prox or a Hessian")


class HssSolver:
    """Holds the two HSS factorizations for one shift ``alpha``."""

    def __init__(self, problem: SkewMonotoneProblem, alpha: float):
        if not problem.linear:
            raise CapabilityError("HSS applies to linear problems only")
        if not alpha > 0:
            raise ParameterError(f"alpha must be positive, got {alpha}")
        self.problem = problem
        self.alpha = float(alpha)
        A = problem.base.a_matrix
        self.a_sym = A
        self.b = problem.base.b_vector
        M = A + self.alpha * np.eye(A.shape[0])
        self._chol = cho_factor(M, lower=True, check_finite=False)

    def step(self, x) -> np.ndarray:
        a, d = self.alpha, self.problem.skew
        half = cho_solve(self._chol, a * x - d.apply(x) + self.b, check_finite=False)
        return shifted_skew_solve(d, a, a * half - self.a_sym @ half + self.b)


def hss_step(problem: SkewMonotoneProblem, x, alpha: float, solver: HssSolver = None):
    """One HSS sweep: solve with ``alpha I + A`` then with ``alpha I + N``."""
    if solver is None or solver.alpha != alpha or solver.problem is not problem:
        solver = HssSolver(problem, alpha)
    return solver.step(as_vector(x, problem.dim))
