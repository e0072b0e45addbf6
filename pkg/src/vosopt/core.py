"""Oracle contracts, Bregman divergences and sampled checks of convexity bounds.

Everything here works in the Euclidean inner product, so the dual norm is the
plain 2-norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .errors import InputError, ParameterError

Array = np.ndarray
Weights = Union[float, Array]

DEFAULT_RADIUS = 10.0


def as_vector(x, dim: Optional[int] = None, name: str = "x") -> Array:
    """Return `x` as a finite 1-D float array, checking its length."""
    v = np.asarray(x, dtype=float)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1:
        raise InputError(f"{name} must be one-dimensional, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise InputError(f"{name} has dimension {v.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(v)):
        raise InputError(f"{name} has non-finite entries")
    return v


def _same_dim(*vectors, names=None):
    out = [as_vector(v, name=(names[i] if names else "x")) for i, v in enumerate(vectors)]
    dims = {v.shape[0] for v in out}
    if len(dims) != 1:
        raise InputError(f"dimension mismatch: {[v.shape[0] for v in out]}")
    return out


@dataclass(frozen=True)
class Objective:
    """A smooth convex function together with its declared constants.

    ``mu`` and ``lipschitz`` are metadata; nothing here estimates them.
    ``hessian`` and ``prox`` are optional capabilities used by implicit
    schemes: ``prox(t, v)`` must return ``argmin f(z) + |z - v|^2 / (2t)``.
    """

    value: Callable[[Array], float]
    gradient: Callable[[Array], Array]
    mu: float
    lipschitz: float
    dim: int
    hessian: Optional[Callable[[Array], Array]] = None
    prox: Optional[Callable[[float, Array], Array]] = None
    name: str = "f"

    def __post_init__(self):
        if self.dim < 1:
            raise InputError("dimension must be >= 1")
        if self.mu < 0 or self.lipschitz < 0:
            raise ParameterError("mu and lipschitz must be nonnegative")

    @property
    def condition_number(self) -> float:
        return math.inf if self.mu == 0 else self.lipschitz / self.mu

    def shifted(self, mu: Optional[float] = None) -> "Objective":
        """Return ``f - (mu/2)|x|^2``, which is convex with constants ``(0, L - mu)``."""
        m = self.mu if mu is None else float(mu)
        f, g, h = self.value, self.gradient, self.hessian
        hess = None
        if h is not None:
            hess = lambda x: h(x) - m * np.eye(self.dim)  # noqa: E731
        return Objective(
            value=lambda x: f(x) - 0.5 * m * float(x @ x),
            gradient=lambda x: g(x) - m * x,
            mu=max(self.mu - m, 0.0),
            lipschitz=max(self.lipschitz - m, 0.0),
            dim=self.dim,
            hessian=hess,
            name=f"{self.name}_-mu",
        )


def linear_combination(a: float, f: Objective, b: float, g: Objective) -> Objective:
    """``a f + b g`` for nonnegative weights; constants combine additively."""
    if f.dim != g.dim:
        raise InputError("dimension mismatch")
    return Objective(
        value=lambda x: a * f.value(x) + b * g.value(x),
        gradient=lambda x: a * f.gradient(x) + b * g.gradient(x),
        mu=a * f.mu + b * g.mu,
        lipschitz=a * f.lipschitz + b * g.lipschitz,
        dim=f.dim,
        name=f"{a}*{f.name}+{b}*{g.name}",
    )


@dataclass(frozen=True)
class MonotoneOperator:
    """A strongly monotone operator ``N`` with an optional resolvent.

    ``resolvent(beta, b)`` returns ``y`` solving ``beta*y + N(y) = b``.
    """

    apply: Callable[[Array], Array]
    mu_monotone: float
    dim: int
    resolvent: Optional[Callable[[float, Array], Array]] = None
    skew: Optional[object] = None
    name: str = "N"


def scaled_identity(mu: float, dim: int) -> MonotoneOperator:
    """``N(y) = mu*y``."""
    mu = float(mu)
    return MonotoneOperator(
        apply=lambda y: mu * y,
        mu_monotone=mu,
        dim=dim,
        resolvent=lambda beta, b: b / (beta + mu),
        name=f"{mu}*I",
    )


def zero_operator(dim: int) -> MonotoneOperator:
    return MonotoneOperator(
        apply=lambda y: np.zeros_like(y),
        mu_monotone=0.0,
        dim=dim,
        resolvent=lambda beta, b: b / beta,
        name="0",
    )


@dataclass(frozen=True)
class ProxOracle:
    """Proximal map of a closed convex ``g``; ``value`` is optional."""

    prox: Callable[[float, Array], Array]
    value: Optional[Callable[[Array], float]] = None
    name: str = "g"


@dataclass(frozen=True)
class VosSplitting:
    """The pair ``(F, N)`` of the equation ``grad F(x) + N(x) = 0``.

    ``mu`` is the monotonicity weight used by the flow; it is a scalar, or a
    per-coordinate vector for block problems such as saddle systems.
    """

    F: Objective
    N: MonotoneOperator
    mu: Weights
    x_star: Optional[Array] = None

    @property
    def dim(self) -> int:
        return self.F.dim

    def residual(self, x: Array) -> Array:
        return self.F.gradient(x) + self.N.apply(x)


# ---------------------------------------------------------------------------
# Bregman machinery

def bregman_divergence(f: Objective, y, x) -> float:
    """``D_f(y, x) = f(y) - f(x) - <grad f(x), y - x>``."""
    y, x = _same_dim(y, x, names=("y", "x"))
    return float(f.value(y) - f.value(x) - f.gradient(x) @ (y - x))


def symmetrized_bregman(f: Objective, x, y) -> float:
    """Half of ``D_f(y,x) + D_f(x,y)``, i.e. ``<grad f(x) - grad f(y), x - y> / 2``."""
    x, y = _same_dim(x, y, names=("x", "y"))
    return 0.5 * float((f.gradient(x) - f.gradient(y)) @ (x - y))


def check_three_point_identity(f: Objective, x, y, z, relative: bool = False) -> float:
    """Residual of ``<grad f(y) - grad f(x), z - y> = D(z,x) - D(y,x) - D(z,y)``.

    With ``relative=True`` the residual is divided by ``1 +`` the sum of the
    magnitudes of the four terms.
    """
    x, y, z = _same_dim(x, y, z, names=("x", "y", "z"))
    lhs = float((f.gradient(y) - f.gradient(x)) @ (z - y))
    dzx = bregman_divergence(f, z, x)
    dyx = bregman_divergence(f, y, x)
    dzy = bregman_divergence(f, z, y)
    res = abs(lhs - (dzx - dyx - dzy))
    if relative:
        res /= 1.0 + abs(lhs) + abs(dzx) + abs(dyx) + abs(dzy)
    return res


# ---------------------------------------------------------------------------
# Sampled verification

@dataclass
class Violation:
    """Worst observed failure of one named inequality."""

    name: str
    count: int
    worst_margin: float
    worst_relative: float

    def __str__(self):
        return (f"{self.name}: {self.count} violations, worst margin "
                f"{self.worst_margin:.3e} (relative {self.worst_relative:.3e})")


class ViolationReport(list):
    """List of :class:`Violation`; ``margins`` keeps the worst relative
    margin of every checked inequality, violated or not."""

    def __init__(self, items=(), margins=None):
        super().__init__(items)
        self.margins = dict(margins or {})

    @property
    def passed(self) -> bool:
        return len(self) == 0


class InequalityTally:
    """Accumulates ``lhs <= rhs`` checks with a scale-relative slack."""

    def __init__(self, rtol: float = 1e-10):
        self.rtol = rtol
        self._worst = {}
        self._count = {}

    def le(self, name: str, lhs: float, rhs: float, scale: float = 0.0):
        margin = rhs - lhs
        denom = 1.0 + abs(lhs) + abs(rhs) + abs(scale)
        rel = margin / denom
        prev = self._worst.get(name)
        if prev is None or rel < prev[1]:
            self._worst[name] = (margin, rel)
        if rel < -self.rtol:
            self._count[name] = self._count.get(name, 0) + 1
        else:
            self._count.setdefault(name, 0)

    def flag(self, name: str, margin: float):
        self._worst[name] = (margin, margin)
        self._count[name] = self._count.get(name, 0) + 1

    def report(self) -> ViolationReport:
        out = [Violation(n, c, *self._worst[n]) for n, c in self._count.items() if c]
        out.sort(key=lambda v: v.worst_relative)
        return ViolationReport(out, {n: w[1] for n, w in self._worst.items()})


def sample_points(rng: np.random.Generator, dim: int, radius: float = DEFAULT_RADIUS,
                  center: Optional[Array] = None) -> Array:
    p = radius * rng.standard_normal(dim)
    return p if center is None else center + p


def verify_convexity_bounds(f: Objective, samples: int = 1000, seed: int = 0,
                            x_star=None, radius: float = DEFAULT_RADIUS,
                            rtol: float = 1e-10) -> ViolationReport:
    """Check the upper, lower, co-convexity and refined bounds on random pairs.

    Pairs ``(x, y)`` have standard normal entries scaled by `radius`. When
    `x_star` (a minimizer, ``grad f(x_star) = 0``) is given, the bounds
    involving the optimality gap are checked on ``(x, x_star)`` as well.
    Returns an empty report when nothing is violated.
    """
    if samples < 1:
        raise ParameterError("samples must be >= 1")
    mu, L = float(f.mu), float(f.lipschitz)
    tally = InequalityTally(rtol)
    if mu > L:
        tally.flag("declared_constants(mu<=L)", L - mu)
    rng = np.random.default_rng(seed)
    xs = None if x_star is None else as_vector(x_star, f.dim, "x_star")
    fs = None if xs is None else f.value(xs)

    for _ in range(samples):
        x = sample_points(rng, f.dim, radius)
        y = sample_points(rng, f.dim, radius)
        fx, fy = f.value(x), f.value(y)
        gx, gy = f.gradient(x), f.gradient(y)
        d = x - y
        d2 = float(d @ d)
        gd2 = float((gx - gy) @ (gx - gy))
        dyx = fy - fx - float(gx @ (y - x))
        dxy = fx - fy - float(gy @ (x - y))
        m = 0.5 * float((gx - gy) @ d)
        sc = abs(fx) + abs(fy)
        for name, val in (("D(y,x)", dyx), ("D(x,y)", dxy), ("M", m)):
            tally.le(f"upper_L[{name}]", val, 0.5 * L * d2, sc)
            tally.le(f"lower_mu[{name}]", 0.5 * mu * d2, val, sc)
            tally.le(f"co_convexity[{name}]", gd2 / (2 * L) if L > 0 else 0.0, val, sc)
            if mu > 0:
                tally.le(f"upper_mu_grad[{name}]", val, gd2 / (2 * mu), sc)
        if mu + L > 0:
            tally.le("refined", mu * L / (mu + L) * d2 + gd2 / (mu + L), 2 * m, sc)

        if xs is not None:
            e = x - xs
            e2 = float(e @ e)
            g2 = float(gx @ gx)
            gap = fx - fs
            inner = float(gx @ e)
            sc = abs(fx) + abs(fs)
            tally.le("gap_lower_grad", g2 / (2 * L), gap, sc)
            tally.le("gap_upper_L", gap, 0.5 * L * e2, sc)
            tally.le("inner_lower_grad", g2 / L, inner, sc)
            tally.le("inner_upper_L", inner, L * e2, sc)
            if mu > 0:
                tally.le("gap_lower_mu", 0.5 * mu * e2, gap, sc)
                tally.le("gap_upper_grad", gap, g2 / (2 * mu), sc)
                tally.le("inner_lower_mu", mu * e2, inner, sc)
                tally.le("inner_upper_grad", inner, g2 / mu, sc)
                tally.le("inner_vs_gap", gap + 0.5 * mu * e2, inner, sc)
            tally.le("refined_star", mu * L / (mu + L) * e2 + g2 / (mu + L), inner, sc)
    return tally.report()


def gradient_check(f: Objective, x, step: Optional[float] = None) -> float:
    """Relative error between ``f.gradient(x)`` and central differences.

    The step defaults to ``1e-6 * (1 + |x|)``.
    """
    x = as_vector(x, f.dim)
    h = 1e-6 * (1.0 + float(np.linalg.norm(x))) if step is None else step
    g = f.gradient(x)
    fd = np.empty_like(x)
    for i in range(x.shape[0]):
        e = np.zeros_like(x)
        e[i] = h
        fd[i] = (f.value(x + e) - f.value(x - e)) / (2 * h)
    return float(np.linalg.norm(fd - g) / max(1.0, float(np.linalg.norm(g))))


def sample_strong_monotonicity(N: MonotoneOperator, samples: int = 100, seed: int = 0,
                               radius: float = DEFAULT_RADIUS,
                               rtol: float = 1e-10) -> ViolationReport:
    """Check ``<N(x) - N(y), x - y> >= mu |x - y|^2`` on random pairs."""
    rng = np.random.default_rng(seed)
    tally = InequalityTally(rtol)
    for _ in range(samples):
        x = sample_points(rng, N.dim, radius)
        y = sample_points(rng, N.dim, radius)
        d = x - y
        tally.le("strong_monotonicity", N.mu_monotone * float(d @ d),
                 float((N.apply(x) - N.apply(y)) @ d))
    return tally.report()


def resolvent_residual(N: MonotoneOperator, beta: float, b) -> float:
    """``|beta*y + N(y) - b| / |b|`` at the returned resolvent point."""
    b = as_vector(b, N.dim, "b")
    y = N.resolvent(beta, b)
    nb = float(np.linalg.norm(b))
    return float(np.linalg.norm(beta * y + N.apply(y) - b)) / (nb if nb > 0 else 1.0)


def power_iteration(matrix: Array, iterations: int = 20, tol: float = 0.0,
                    seed: int = 0) -> float:
    """Estimate the spectral norm of `matrix` by power iteration on ``M^T M``.

    Returns a lower estimate of ``|M|_2``; stops early when successive
    estimates agree to `tol` relative.
    """
    M = np.asarray(matrix, dtype=float)
    if M.size == 0 or not np.any(M):
        return 0.0
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(M.shape[1])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iterations):
        w = M.T @ (M @ v)
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return 0.0
        v = w / nw
        new = math.sqrt(nw)
        if tol > 0 and abs(new - est) <= tol * new:
            est = new
            break
        est = new
    return est
