"""Test problems with known solutions and declared constants."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import expit

from .core import MonotoneOperator, Objective, ProxOracle, VosSplitting, as_vector, scaled_identity
from .errors import ConfigurationError, ConvergenceError, InputError, ParameterError
from .operators import (SaddleCoupling, SkewDecomposition, make_coupling, random_skew,
                        saddle_block_solve, shifted_skew_solve, skew_split)

NEWTON_TOL = 1e-12


def soft_threshold(lam: float, v) -> np.ndarray:
    """Prox of ``lam*|.|_1``: ``sign(v) * max(|v| - lam, 0)``."""
    if not lam > 0:
        raise ParameterError(f"lambda must be positive, got {lam}")
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - lam, 0.0)


def newton_solve(residual: Callable, jacobian: Callable, x0, tol: float = NEWTON_TOL,
                 max_iter: int = 100) -> np.ndarray:
    """Dense Newton with backtracking on ``|r|``; stops at ``|r| <= tol (1 + |x|)``."""
    x = np.array(x0, dtype=float)
    r = residual(x)
    nr = float(np.linalg.norm(r))
    for _ in range(max_iter):
        if nr <= tol * (1.0 + float(np.linalg.norm(x))):
            return x
        step = np.linalg.solve(jacobian(x), r)
        t = 1.0
        while True:
            xn = x - t * step
            rn = residual(xn)
            nrn = float(np.linalg.norm(rn))
            if nrn <= (1 - 1e-4 * t) * nr or t < 1e-10:
                break
            t *= 0.5
        if nrn >= nr and t < 1e-10:
            break
        x, r, nr = xn, rn, nrn
    if nr <= tol * (1.0 + float(np.linalg.norm(x))):
        return x
    raise ConvergenceError(f"Newton solve stalled at residual {nr:.3e}", residual=nr)


def random_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    return Q * np.sign(np.diag(R))


def _spd_from_spectrum(spectrum, rng):
    lam = np.asarray(spectrum, dtype=float)
    Q = random_orthogonal(lam.size, rng)
    A = (Q * lam) @ Q.T
    return 0.5 * (A + A.T)


def _check_spectrum(spectrum):
    lam = np.asarray(spectrum, dtype=float)
    if lam.ndim != 1 or lam.size == 0:
        raise InputError("spectrum must be a nonempty list")
    if not np.all(np.isfinite(lam)):
        raise InputError("spectrum has non-finite entries")
    if np.any(lam < 0):
        raise InputError(f"spectrum has negative entries: {lam[lam < 0].tolist()}")
    if np.any(np.diff(lam) < 0):
        raise InputError("spectrum must be sorted ascending")
    return lam


def _stretch(lo: float, hi: float, dim: int) -> np.ndarray:
    if dim == 1:
        return np.array([lo])
    if lo > 0:
        return np.geomspace(lo, hi, dim)
    return np.linspace(lo, hi, dim)


class Problem:
    """Shared behaviour: declared constants, JSON description, start points."""

    kind = "problem"
    spec: dict

    def to_dict(self) -> dict:
        return dict(self.spec)

    def initial_point(self, seed: int = 0, scale: float = 1.0) -> np.ndarray:
        rng = np.random.default_rng(seed + 7919)
        return scale * rng.standard_normal(self.dim)

    def solution_near(self, x0) -> np.ndarray:
        return self.x_star

    def with_declared(self, mu: Optional[float] = None, lipschitz: Optional[float] = None):
        """Copy with overridden declared constants (used for adversarial checks)."""
        changes = {}
        if mu is not None:
            changes["mu"] = float(mu)
        if lipschitz is not None:
            changes["lipschitz"] = float(lipschitz)
        spec = dict(self.spec)
        spec.update({f"declared_{k}": v for k, v in changes.items()})
        changes["spec"] = spec
        return dataclasses.replace(self, **changes)


# ---------------------------------------------------------------------------
# Smooth strongly convex problems

@dataclass(frozen=True, eq=False)
class QuadraticProblem(Problem):
    """``f(x) = x^T A x / 2 - b^T x``."""

    a_matrix: np.ndarray
    b_vector: np.ndarray
    mu: float
    lipschitz: float
    x_star: Optional[np.ndarray]
    spec: dict = field(default_factory=dict)
    kind = "quadratic"

    @property
    def dim(self) -> int:
        return self.b_vector.shape[0]

    @property
    def objective(self) -> Objective:
        A, b = self.a_matrix, self.b_vector
        n = self.dim

        def prox(t, v):
            M = A + np.eye(n) / t
            return np.linalg.solve(M, b + v / t)

        return Objective(
            value=lambda x: 0.5 * float(x @ (A @ x)) - float(b @ x),
            gradient=lambda x: A @ x - b,
            mu=self.mu, lipschitz=self.lipschitz, dim=n,
            hessian=lambda x: A, prox=prox, name="quadratic",
        )

    @property
    def f_star(self) -> float:
        return self.objective.value(self.x_star)

    def residual(self, x) -> float:
        return float(np.linalg.norm(self.a_matrix @ x - self.b_vector))

    def splitting(self) -> VosSplitting:
        return smooth_splitting(self.objective, self.x_star)


def build_quadratic(spectrum, seed: int = 0, dim: Optional[int] = None) -> QuadraticProblem:
    """Quadratic with ``A = Q diag(spectrum) Q^T`` for a seeded orthogonal ``Q``.

    With `dim` given, `spectrum` supplies only its extremes and the
    eigenvalues are spread geometrically between them.
    """
    lam = _check_spectrum(spectrum)
    if dim is not None:
        lam = _stretch(lam[0], lam[-1], int(dim))
    rng = np.random.default_rng(seed)
    A = _spd_from_spectrum(lam, rng)
    b = rng.standard_normal(lam.size)
    mu, L = float(lam[0]), float(lam[-1])
    x_star = np.linalg.solve(A, b) if mu > 0 else None
    spec = {"type": "quadratic", "seed": seed}
    if dim is None:
        spec["spectrum"] = lam.tolist()
    else:
        spec.update(spectrum=[mu, L], dim=int(dim))
    return QuadraticProblem(A, b, mu, L, x_star, spec)


@dataclass(frozen=True, eq=False)
class LogisticProblem(Problem):
    """``f(x) = x^T A x / 2 - b^T x + delta * sum(log(1 + exp(x_i)))``."""

    a_matrix: np.ndarray
    b_vector: np.ndarray
    delta: float
    mu: float
    lipschitz: float
    x_star: np.ndarray
    spec: dict = field(default_factory=dict)
    kind = "logistic"

    @property
    def dim(self) -> int:
        return self.b_vector.shape[0]

    @property
    def objective(self) -> Objective:
        return _logistic_objective(self.a_matrix, self.b_vector, self.delta,
                                   self.mu, self.lipschitz)

    @property
    def f_star(self) -> float:
        return self.objective.value(self.x_star)

    def residual(self, x) -> float:
        return float(np.linalg.norm(self.objective.gradient(x)))

    def splitting(self) -> VosSplitting:
        return smooth_splitting(self.objective, self.x_star)


def _logistic_objective(A, b, delta, mu, L) -> Objective:
    n = b.shape[0]

    def grad(x):
        return A @ x - b + delta * expit(x)

    def hess(x):
        s = expit(x)
        return A + np.diag(delta * s * (1 - s))

    def prox(t, v):
        return newton_solve(lambda z: grad(z) + (z - v) / t,
                            lambda z: hess(z) + np.eye(n) / t, v)

    return Objective(
        value=lambda x: 0.5 * float(x @ (A @ x)) - float(b @ x)
        + delta * float(np.sum(np.logaddexp(0.0, x))),
        gradient=grad, mu=mu, lipschitz=L, dim=n, hessian=hess, prox=prox,
        name="logistic",
    )


def build_logistic(n: int = 20, mu: float = 1.0, L: float = 100.0, delta: float = 1.0,
                   seed: int = 0) -> LogisticProblem:
    """Logistic-regularized quadratic; ``A`` has spectrum in ``[mu, L - delta/4]``
    so the declared ``(mu, L)`` stay valid."""
    if delta < 0:
        raise ParameterError("delta must be nonnegative")
    top = L - delta / 4
    if top < mu:
        raise ParameterError("need L - delta/4 >= mu")
    rng = np.random.default_rng(seed)
    A = _spd_from_spectrum(_stretch(mu, top, n), rng)
    b = 3.0 * rng.standard_normal(n)
    obj = _logistic_objective(A, b, delta, mu, L)
    x_star = newton_solve(obj.gradient, obj.hessian, np.linalg.solve(A, b))
    spec = {"type": "logistic", "n": n, "mu": mu, "L": L, "delta": delta, "seed": seed}
    return LogisticProblem(A, b, float(delta), float(mu), float(L), x_star, spec)


def smooth_splitting(f: Objective, x_star=None) -> VosSplitting:
    """``F = f - mu|x|^2/2`` and ``N = mu I``; with ``mu = 0``, ``F = f`` and ``N = 0``."""
    mu = f.mu
    return VosSplitting(F=f.shifted(mu), N=scaled_identity(mu, f.dim), mu=mu, x_star=x_star)


# ---------------------------------------------------------------------------
# Composite

@dataclass(frozen=True, eq=False)
class CompositeProblem(Problem):
    """``f + lam*|x|_1`` with a strongly convex quadratic ``f``."""

    smooth: QuadraticProblem
    lam: float
    x_star: np.ndarray
    ista_solution: np.ndarray
    spec: dict = field(default_factory=dict)
    kind = "lasso"

    @property
    def dim(self) -> int:
        return self.smooth.dim

    @property
    def mu(self) -> float:
        return self.smooth.mu

    @property
    def lipschitz(self) -> float:
        return self.smooth.lipschitz

    @property
    def objective(self) -> Objective:
        return self.smooth.objective

    @property
    def nonsmooth(self) -> ProxOracle:
        lam = self.lam
        if lam == 0:
            return ProxOracle(prox=lambda t, v: np.array(v, dtype=float),
                              value=lambda x: 0.0, name="zero")
        return ProxOracle(prox=lambda t, v: soft_threshold(lam * t, v),
                          value=lambda x: lam * float(np.sum(np.abs(x))), name="l1")

    def total_value(self, x) -> float:
        return self.objective.value(x) + self.lam * float(np.sum(np.abs(x)))

    def residual(self, x) -> float:
        """Prox-gradient fixed-point residual ``|x - T(x)|`` with step ``1/L``."""
        return prox_gradient_residual(self.objective, self.nonsmooth, x)

    def with_declared(self, mu=None, lipschitz=None):
        sm = self.smooth.with_declared(mu, lipschitz)
        spec = dict(self.spec)
        if mu is not None:
            spec["declared_mu"] = float(mu)
        if lipschitz is not None:
            spec["declared_lipschitz"] = float(lipschitz)
        return dataclasses.replace(self, smooth=sm, spec=spec)


def prox_gradient_residual(f: Objective, g: ProxOracle, x) -> float:
    t = 1.0 / f.lipschitz
    return float(np.linalg.norm(x - g.prox(t, x - t * f.gradient(x))))


def ista(f: Objective, g: ProxOracle, x0, tol: float = 1e-12,
         max_iter: int = 200000) -> np.ndarray:
    """Plain proximal gradient with step ``1/L``."""
    t = 1.0 / f.lipschitz
    x = np.array(x0, dtype=float)
    for _ in range(max_iter):
        xn = g.prox(t, x - t * f.gradient(x))
        if np.linalg.norm(xn - x) <= tol * (1 + np.linalg.norm(xn)):
            return xn
        x = xn
    raise ConvergenceError("ISTA reference run did not converge",
                           residual=float(np.linalg.norm(xn - x)))


def build_lasso(n: int = 50, mu: float = 1.0, L: float = 100.0, lam: float = 0.1,
                seed: int = 0, nnz: int = 10) -> CompositeProblem:
    """LASSO-type composite problem with a sparse planted signal."""
    if not lam > 0:
        raise ParameterError("lam must be positive")
    rng = np.random.default_rng(seed)
    A = _spd_from_spectrum(_stretch(mu, L, n), rng)
    x_true = np.zeros(n)
    idx = rng.choice(n, size=min(nnz, n), replace=False)
    x_true[idx] = rng.standard_normal(idx.size)
    b = A @ x_true + 0.01 * rng.standard_normal(n)
    smooth = QuadraticProblem(A, b, float(mu), float(L), np.linalg.solve(A, b),
                              {"type": "quadratic"})
    g = ProxOracle(prox=lambda t, v: soft_threshold(lam * t, v))
    x_ref = _polish_lasso(A, b, lam, _composite_reference(smooth.objective, g, np.zeros(n)))
    x_ista = ista(smooth.objective, g, np.zeros(n))
    if np.linalg.norm(x_ref - x_ista) > 1e-8 * (1 + np.linalg.norm(x_ref)):
        raise ConvergenceError("composite reference runs disagree",
                               residual=float(np.linalg.norm(x_ref - x_ista)))
    spec = {"type": "lasso", "n": n, "mu": mu, "L": L, "lam": lam, "seed": seed}
    return CompositeProblem(smooth, float(lam), x_ref, x_ista, spec)


def _polish_lasso(A, b, lam, x):
    """Solve the optimality system exactly on the support of `x` if KKT still holds."""
    S = np.abs(x) > 1e-9 * (1 + np.max(np.abs(x)))
    if not np.any(S):
        return x
    z = np.zeros_like(x)
    sgn = np.sign(x[S])
    z[S] = np.linalg.solve(A[np.ix_(S, S)], b[S] - lam * sgn)
    g = A @ z - b
    if np.all(np.sign(z[S]) == sgn) and np.all(np.abs(g[~S]) <= lam * (1 + 1e-12)):
        return z
    return x


def _composite_reference(f, g, x0, tol=1e-12, max_iter=100000):
    from .solvers.vos import composite_aor_step
    from .solvers.state import SchemeState

    alpha = math.sqrt(f.mu / (f.lipschitz - f.mu)) if f.lipschitz > f.mu else 1.0
    st = SchemeState(x=np.array(x0, float), y=np.array(x0, float))
    for _ in range(max_iter):
        st = composite_aor_step(f, g, st, alpha)
        if prox_gradient_residual(f, g, st.x) <= tol * (1 + np.linalg.norm(st.x)):
            return st.x
    raise ConvergenceError("composite reference run did not converge",
                           residual=prox_gradient_residual(f, g, st.x))


# ---------------------------------------------------------------------------
# Skew-monotone equations

@dataclass(frozen=True, eq=False)
class SkewMonotoneProblem(Problem):
    """``grad f(x) + N x = 0`` with strongly convex ``f`` and skew ``N``."""

    base: Problem
    skew: SkewDecomposition
    x_star: np.ndarray
    spec: dict = field(default_factory=dict)
    kind = "skew"

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def objective(self) -> Objective:
        return self.base.objective

    @property
    def mu(self) -> float:
        return self.base.mu

    @property
    def lipschitz(self) -> float:
        return self.base.lipschitz

    @property
    def linear(self) -> bool:
        return isinstance(self.base, QuadraticProblem)

    def residual(self, x) -> float:
        return float(np.linalg.norm(self.objective.gradient(x) + self.skew.apply(x)))

    def operator(self) -> MonotoneOperator:
        """``N(y) = mu y + N y`` with resolvent through the shifted skew solve."""
        mu, d = self.mu, self.skew
        return MonotoneOperator(
            apply=lambda y: mu * y + d.apply(y), mu_monotone=mu, dim=self.dim,
            resolvent=lambda beta, b: shifted_skew_solve(d, beta + mu, b),
            skew=d, name="mu*I+N",
        )

    def splitting(self) -> VosSplitting:
        f = self.objective
        return VosSplitting(F=f.shifted(self.mu), N=self.operator(), mu=self.mu,
                            x_star=self.x_star)

    def with_declared(self, mu=None, lipschitz=None):
        base = self.base.with_declared(mu, lipschitz)
        spec = dict(self.spec)
        if mu is not None:
            spec["declared_mu"] = float(mu)
        if lipschitz is not None:
            spec["declared_lipschitz"] = float(lipschitz)
        return dataclasses.replace(self, base=base, spec=spec)


def build_skew_monotone(n: int = 20, mu: float = 1.0, L: float = 10.0,
                        skew_norm: float = 5.0, delta: float = 0.0,
                        seed: int = 0) -> SkewMonotoneProblem:
    """Quadratic (``delta = 0``) or logistic-regularized ``f`` plus a seeded skew part."""
    if delta > 0:
        base = build_logistic(n, mu, L, delta, seed)
    else:
        base = build_quadratic([mu, L], seed, dim=n)
    d = skew_split(random_skew(n, skew_norm, seed + 1))
    f = base.objective
    if delta > 0:
        x_star = newton_solve(lambda x: f.gradient(x) + d.apply(x),
                              lambda x: f.hessian(x) + d.n_matrix,
                              np.zeros(n))
    else:
        x_star = np.linalg.solve(base.a_matrix + d.n_matrix, base.b_vector)
    spec = {"type": "skew", "n": n, "mu": mu, "L": L, "skew_norm": skew_norm,
            "delta": delta, "seed": seed}
    return SkewMonotoneProblem(base, d, x_star, spec)


# ---------------------------------------------------------------------------
# Saddle problems

@dataclass(frozen=True, eq=False)
class SaddleProblem(Problem):
    """``min_u max_p f(u) - g(p) + (B u, p)`` with quadratic ``f`` and ``g``.

    Stacked vectors are ``(u, p)``; ``y`` holds ``(v, q)``.
    """

    f_problem: QuadraticProblem
    g_problem: QuadraticProblem
    coupling: SaddleCoupling
    u_star: np.ndarray
    p_star: np.ndarray
    spec: dict = field(default_factory=dict)
    kind = "saddle"

    @property
    def f(self) -> Objective:
        return self.f_problem.objective

    @property
    def g(self) -> Objective:
        return self.g_problem.objective

    @property
    def dim_u(self) -> int:
        return self.f_problem.dim

    @property
    def dim_p(self) -> int:
        return self.g_problem.dim

    @property
    def dim(self) -> int:
        return self.dim_u + self.dim_p

    @property
    def x_star(self) -> np.ndarray:
        return np.concatenate([self.u_star, self.p_star])

    @property
    def mu_vector(self) -> np.ndarray:
        return np.concatenate([np.full(self.dim_u, self.f.mu), np.full(self.dim_p, self.g.mu)])

    def split(self, z):
        return z[:self.dim_u], z[self.dim_u:]

    def kkt(self, z) -> np.ndarray:
        u, p = self.split(z)
        B = self.coupling.b_matrix
        return np.concatenate([self.f.gradient(u) + B.T @ p, self.g.gradient(p) - B @ u])

    def residual(self, z) -> float:
        return float(np.linalg.norm(self.kkt(z)))

    def block_F(self) -> Objective:
        """``F(u, p) = f_{-mu_f}(u) + g_{-mu_g}(p)``, convex with ``L_F = max(L - mu)``."""
        fs, gs = self.f.shifted(), self.g.shifted()
        m = self.dim_u
        return Objective(
            value=lambda z: fs.value(z[:m]) + gs.value(z[m:]),
            gradient=lambda z: np.concatenate([fs.gradient(z[:m]), gs.gradient(z[m:])]),
            mu=0.0, lipschitz=max(fs.lipschitz, gs.lipschitz), dim=self.dim,
            name="saddle_F",
        )

    def operator(self) -> MonotoneOperator:
        """``N(y) = mu*y + K y`` with ``K = [[0, B^T], [-B, 0]]``.

        The resolvent accepts ``beta`` proportional to the weight vector
        ``mu`` (as in the AOR step), a scalar ``beta`` only when
        ``mu_f = mu_g``.
        """
        c, m = self.coupling, self.dim_u
        B = c.b_matrix
        muv = self.mu_vector

        def apply(y):
            v, q = y[:m], y[m:]
            return muv * y + np.concatenate([B.T @ q, -B @ v])

        def resolvent(beta, b):
            ratio = np.broadcast_to(np.asarray(beta, float), muv.shape) / muv
            s = float(ratio[0])
            if not np.allclose(ratio, s, rtol=1e-14, atol=0.0):
                raise ConfigurationError("saddle resolvent needs beta proportional to mu")
            a = 1.0 / s
            v, q = saddle_block_solve(c, a, a * b[:m] / c.mu_f, a * b[m:] / c.mu_g)
            return np.concatenate([v, q])

        return MonotoneOperator(apply=apply, mu_monotone=float(min(c.mu_f, c.mu_g)),
                                dim=self.dim, resolvent=resolvent, name="saddle_N")

    def splitting(self) -> VosSplitting:
        return VosSplitting(F=self.block_F(), N=self.operator(), mu=self.mu_vector,
                            x_star=self.x_star)

    def initial_point(self, seed: int = 0, scale: float = 1.0) -> np.ndarray:
        rng = np.random.default_rng(seed + 7919)
        return scale * rng.standard_normal(self.dim)


def build_saddle(m: int = 10, n: int = 10, mu_f: float = 1.0, L_f: float = 50.0,
                 mu_g: float = 1.0, L_g: float = 50.0, b_norm: float = 3.0,
                 seed: int = 0) -> SaddleProblem:
    """Quadratic saddle with ``u`` in R^m, ``p`` in R^n and ``B`` of shape (n, m)."""
    fp = build_quadratic([mu_f, L_f], seed, dim=m)
    gp = build_quadratic([mu_g, L_g], seed + 1, dim=n)
    rng = np.random.default_rng(seed + 2)
    G = rng.standard_normal((n, m))
    s = np.linalg.norm(G, 2)
    B = G * (b_norm / s) if b_norm > 0 else np.zeros((n, m))
    coupling = make_coupling(B, mu_f, mu_g)
    K = np.block([[fp.a_matrix, B.T], [-B, gp.a_matrix]])
    z = np.linalg.solve(K, np.concatenate([fp.b_vector, gp.b_vector]))
    spec = {"type": "saddle", "m": m, "n": n, "mu_f": mu_f, "L_f": L_f, "mu_g": mu_g,
            "L_g": L_g, "b_norm": b_norm, "seed": seed}
    return SaddleProblem(fp, gp, coupling, z[:m], z[m:], spec)


# ---------------------------------------------------------------------------
# Convex (mu = 0) least squares

@dataclass(frozen=True, eq=False)
class LeastSquaresProblem(Problem):
    """``f(x) = |A x - b|^2 / 2`` with ``m < n``; ``x_star`` is the least-norm minimizer."""

    a_matrix: np.ndarray
    b_vector: np.ndarray
    mu: float
    lipschitz: float
    x_star: np.ndarray
    row_basis: np.ndarray
    spec: dict = field(default_factory=dict)
    kind = "least_squares"

    @property
    def dim(self) -> int:
        return self.a_matrix.shape[1]

    @property
    def objective(self) -> Objective:
        A, b = self.a_matrix, self.b_vector
        AtA = A.T @ A
        AAt = A @ A.T
        n, m = self.dim, A.shape[0]

        def prox(t, v):
            # row-space form stays well posed as t grows (A A^T is invertible)
            return v - A.T @ np.linalg.solve(AAt + np.eye(m) / t, A @ v - b)

        return Objective(
            value=lambda x: 0.5 * float(np.sum((A @ x - b) ** 2)),
            gradient=lambda x: A.T @ (A @ x - b),
            mu=self.mu, lipschitz=self.lipschitz, dim=n,
            hessian=lambda x: AtA, prox=prox, name="least_squares",
        )

    @property
    def f_star(self) -> float:
        return 0.0

    def residual(self, x) -> float:
        return float(np.linalg.norm(self.objective.gradient(x)))

    def solution_near(self, x0) -> np.ndarray:
        """Minimizer closest to `x0`: the least-norm solution plus the null-space part of `x0`."""
        x0 = as_vector(x0, self.dim)
        V = self.row_basis
        return self.x_star + (x0 - V @ (V.T @ x0))

    def splitting(self) -> VosSplitting:
        return smooth_splitting(self.objective, self.x_star)


def build_least_squares_convex(m: int = 20, n: int = 50, seed: int = 0,
                               cond: float = 1e8) -> LeastSquaresProblem:
    """Singular least squares with log-spaced singular values in ``[1/sqrt(cond), 1]``.

    ``L = |A|^2 = 1``; ``b = A x_gen`` lies in the range of ``A`` so ``min f = 0``.
    The wide spread of small singular values keeps the problem genuinely
    merely convex at desk scale.
    """
    if m >= n:
        raise InputError(f"need m < n for a singular problem, got m={m}, n={n}")
    rng = np.random.default_rng(seed)
    U = random_orthogonal(m, rng)
    V = np.linalg.qr(rng.standard_normal((n, m)))[0]
    s = np.geomspace(1.0, 1.0 / math.sqrt(cond), m) if m > 1 else np.ones(1)
    A = (U * s) @ V.T
    x_gen = rng.standard_normal(n)
    b = A @ x_gen
    x_star = V @ (V.T @ x_gen)
    L = float(s[0] ** 2)
    spec = {"type": "least_squares", "m": m, "n": n, "seed": seed, "cond": cond}
    return LeastSquaresProblem(A, b, 0.0, L, x_star, V, spec)


# ---------------------------------------------------------------------------
# JSON descriptions

_BUILDERS = {
    "quadratic": lambda d: build_quadratic(d["spectrum"], d.get("seed", 0), d.get("dim")),
    "logistic": lambda d: build_logistic(d.get("n", 20), d.get("mu", 1.0), d.get("L", 100.0),
                                         d.get("delta", 1.0), d.get("seed", 0)),
    "lasso": lambda d: build_lasso(d.get("n", 50), d.get("mu", 1.0), d.get("L", 100.0),
                                   d.get("lam", 0.1), d.get("seed", 0)),
    "skew": lambda d: build_skew_monotone(d.get("n", 20), d.get("mu", 1.0), d.get("L", 10.0),
                                          d.get("skew_norm", 5.0), d.get("delta", 0.0),
                                          d.get("seed", 0)),
    "saddle": lambda d: build_saddle(d.get("m", 10), d.get("n", 10), d.get("mu_f", 1.0),
                                     d.get("L_f", 50.0), d.get("mu_g", 1.0),
                                     d.get("L_g", 50.0), d.get("b_norm", 3.0),
                                     d.get("seed", 0)),
    "least_squares": lambda d: build_least_squares_convex(d.get("m", 20), d.get("n", 50),
                                                          d.get("seed", 0),
                                                          d.get("cond", 1e8)),
}

PROBLEM_TYPES = tuple(_BUILDERS)


def problem_from_dict(desc: dict) -> Problem:
    """Build a problem from its JSON description (``type`` tag plus parameters).

    Optional ``declared_mu`` / ``declared_lipschitz`` override the declared
    constants without changing the data.
    """
    if not isinstance(desc, dict) or "type" not in desc:
        raise ConfigurationError("problem description needs a 'type' field")
    kind = desc["type"]
    if kind not in _BUILDERS:
        raise ConfigurationError(f"unknown problem type {kind!r}; known: {sorted(_BUILDERS)}")
    try:
        prob = _BUILDERS[kind](desc)
    except KeyError as exc:
        raise ConfigurationError(f"problem {kind!r} is missing field {exc}") from None
    except TypeError as exc:
        raise ConfigurationError(f"bad problem description: {exc}") from None
    dm, dl = desc.get("declared_mu"), desc.get("declared_lipschitz")
    if dm is not None or dl is not None:
        prob = prob.with_declared(dm, dl)
    return prob
