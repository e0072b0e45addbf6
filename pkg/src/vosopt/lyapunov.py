"""Lyapunov functions, sampled strong-Lyapunov checks and flow integration."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .core import (InequalityTally, MonotoneOperator, Objective, VosSplitting, ViolationReport,
                   bregman_divergence, sample_points)
from .errors import CapabilityError, ConfigurationError, IntegrationError, ParameterError
from .solvers.state import SchemeState

KINDS = ("gap", "distance", "combined", "vos_F", "vos_f", "modified_alpha", "agss_alpha",
         "agss_explicit_alpha", "saddle", "saddle_implicit_alpha", "saddle_alpha",
         "scaled_ppa", "scaled", "perturbed")

FLOWS = {
    "gradient": ("gap", "distance", "combined"),
    "vos": ("vos_F", "vos_f"),
    "scaled_gradient": ("scaled_ppa",),
    "scaled_vos": ("scaled",),
    "perturbed_vos": ("perturbed",),
}


@dataclass(frozen=True, eq=False)
class LyapunovSpec:
    """Which Lyapunov function to evaluate, and its parameters.

    ``F`` is the convex part entering ``D_F``; ``f`` is the full objective
    for the kinds built on ``f - f*``. ``mu`` may be a per-coordinate vector
    (saddle problems). ``gamma`` / ``epsilon`` default to the state's values.
    """

    kind: str
    x_star: Optional[np.ndarray]
    F: Optional[Objective] = None
    f: Optional[Objective] = None
    mu: object = 0.0
    alpha: float = 0.0
    gamma: Optional[float] = None
    epsilon: Optional[float] = None
    b_sym: Optional[np.ndarray] = None
    b_matrix: Optional[np.ndarray] = None
    dim_u: Optional[int] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown Lyapunov kind {self.kind!r}")

    def with_alpha(self, alpha: float) -> "LyapunovSpec":
        return replace(self, alpha=float(alpha))


def _wsq(mu, e) -> float:
    """``sum(mu * e^2)`` for scalar or vector weights."""
    return float(np.sum(mu * e * e))


def _need(spec, *names):
    if spec.x_star is None:
        raise CapabilityError("Lyapunov evaluation needs the reference solution x_star")
    for n in names:
        if getattr(spec, n) is None:
            raise CapabilityError(f"Lyapunov kind {spec.kind!r} needs {n!r}")


def eval_lyapunov(spec: LyapunovSpec, state: SchemeState) -> float:
    """Value of the Lyapunov function `spec` at `state`."""
    k = spec.kind
    xs = spec.x_star
    x = state.x
    y = state.y if state.y is not None else state.x
    if k in ("gap", "combined", "scaled_ppa"):
        _need(spec, "f")
        gap = spec.f.value(x) - spec.f.value(xs)
        ex = x - xs
        if k == "gap":
            return gap
        if k == "combined":
            return gap + 0.5 * _wsq(spec.mu, ex)
        g = state.gamma if spec.gamma is None else spec.gamma
        return gap + 0.5 * g * float(ex @ ex)
    if k == "distance":
        _need(spec)
        ex = x - xs
        return 0.5 * float(ex @ ex)
    if k == "vos_f":
        _need(spec, "f")
        ey = y - xs
        return bregman_divergence(spec.f, x, xs) + 0.5 * _wsq(spec.mu, ey)

    _need(spec, "F")
    F = spec.F
    ey = y - xs
    d = bregman_divergence(F, x, xs)
    if k in ("vos_F", "saddle"):
        return d + 0.5 * _wsq(spec.mu, ey)
    if k == "scaled":
        g = state.gamma if spec.gamma is None else spec.gamma
        return d + 0.5 * g * float(ey @ ey)
    if k == "perturbed":
        eps = state.epsilon if spec.epsilon is None else spec.epsilon
        return d + 0.5 * eps * float(ey @ ey)
    cross = float((F.gradient(x) - F.gradient(xs)) @ ey)
    if k in ("modified_alpha", "agss_alpha", "saddle_implicit_alpha"):
        return d + 0.5 * _wsq(spec.mu, ey) - spec.alpha * cross
    if k == "agss_explicit_alpha":
        _need(spec, "b_sym")
        quad = _wsq(spec.mu, ey) - spec.alpha * float(ey @ (spec.b_sym @ ey))
        return d + 0.5 * quad - spec.alpha * cross
    if k == "saddle_alpha":
        _need(spec, "b_matrix", "dim_u")
        m = spec.dim_u
        coupling = float((spec.b_matrix @ ey[:m]) @ ey[m:])
        return d + 0.5 * _wsq(spec.mu, ey) - spec.alpha * cross - spec.alpha * coupling
    raise ConfigurationError(f"unhandled kind {k!r}")  # pragma: no cover


# Alias so ``lyapunov.eval`` reads naturally at call sites.
eval = eval_lyapunov  # noqa: A001


# ---------------------------------------------------------------------------
# Strong Lyapunov property

def _system(problem):
    if isinstance(problem, VosSplitting):
        return problem
    if hasattr(problem, "splitting"):
        return problem.splitting()
    raise ConfigurationError("VOS-type flows need a splitting or a problem")


def strong_lyapunov_sides(flow: str, spec: LyapunovSpec, system, state: SchemeState):
    """``(lhs, rhs)`` of the strong Lyapunov inequality ``-<grad E, G> >= rhs``.

    Gradients of ``E`` are assembled from the oracles, never by differencing.
    """
    if flow not in FLOWS:
        raise ConfigurationError(f"unknown flow {flow!r}; known: {sorted(FLOWS)}")
    if spec.kind not in FLOWS[flow]:
        raise ConfigurationError(f"flow {flow!r} does not pair with Lyapunov kind {spec.kind!r}")
    xs = spec.x_star
    x = state.x
    E = eval_lyapunov(spec, state)

    if flow == "gradient":
        f = spec.f if spec.f is not None else system
        mu, L = float(f.mu), float(f.lipschitz)
        g = f.gradient(x)
        g2 = float(g @ g)
        inner = float((x - xs) @ g)
        if spec.kind == "gap":
            return g2, mu * E + 0.5 * g2
        if spec.kind == "distance":
            return inner, 2 * mu * L / (L + mu) * E + g2 / (L + mu)
        return g2 + mu * inner, mu * E + g2

    if flow == "scaled_gradient":
        f = spec.f
        gam = state.gamma
        g = f.gradient(x)
        ex = x - xs
        lhs = float(g @ g) / gam + float(ex @ g) + 0.5 * gam * float(ex @ ex)
        return lhs, E + float(g @ g) / gam

    S = _system(system)
    F, N = S.F, S.N
    y = state.y
    gx = F.gradient(x)
    dgx = gx - F.gradient(xs)
    ey = y - xs
    r = gx + N.apply(y)
    if flow == "vos":
        mu = S.mu
        if spec.kind == "vos_F":
            lhs = -float(dgx @ (y - x)) + float(ey @ r)
            return lhs, E + bregman_divergence(F, xs, x) + 0.5 * _wsq(mu, ey)
        f = spec.f
        dfx = f.gradient(x) - f.gradient(xs)
        lhs = -float(dfx @ (y - x)) + float(ey @ r)
        return lhs, E + 0.5 * _wsq(mu, y - x)
    if flow == "scaled_vos":
        gam = state.gamma
        lhs = -float(dgx @ (y - x)) + float(ey @ r) + 0.5 * gam * float(ey @ ey)
        return lhs, E
    eps = state.epsilon if spec.epsilon is None else spec.epsilon
    lhs = -float(dgx @ (y - x)) - float(ey @ (eps * (x - y) - r))
    ex = x - xs
    rhs = E + bregman_divergence(F, xs, x) + 0.5 * eps * float((x - y) @ (x - y)) \
        - 0.5 * eps * float(ex @ ex)
    return lhs, rhs


def check_strong_lyapunov(flow: str, spec: LyapunovSpec, problem, samples: int = 1000,
                          seed: int = 0, radius: float = 10.0,
                          rtol: float = 1e-10) -> ViolationReport:
    """Sample states around ``x_star`` and check ``-<grad E, G> >= rhs``.

    For the scaled flows ``gamma`` is drawn log-uniformly in ``[1e-3, 1e3]``;
    for the perturbed flow ``epsilon`` comes from the spec.
    """
    if samples < 1:
        raise ParameterError("samples must be >= 1")
    if flow not in FLOWS:
        raise ConfigurationError(f"unknown flow {flow!r}; known: {sorted(FLOWS)}")
    if spec.kind not in FLOWS[flow]:
        raise ConfigurationError(f"flow {flow!r} does not pair with Lyapunov kind {spec.kind!r}")
    if spec.x_star is None:
        raise CapabilityError("strong Lyapunov check needs x_star")
    rng = np.random.default_rng(seed)
    tally = InequalityTally(rtol)
    name = f"{flow}/{spec.kind}"
    xs = spec.x_star
    n = xs.shape[0]
    eps = spec.epsilon if spec.epsilon is not None else 1.0
    for _ in range(samples):
        x = sample_points(rng, n, radius, xs)
        y = sample_points(rng, n, radius, xs)
        gam = float(np.exp(rng.uniform(math.log(1e-3), math.log(1e3))))
        st = SchemeState(x=x, y=y, gamma=gam, epsilon=eps)
        lhs, rhs = strong_lyapunov_sides(flow, spec, problem, st)
        tally.le(name, rhs, lhs)
    return tally.report()


# ---------------------------------------------------------------------------
# Cross-term lemmas

def check_cross_term_lemma(F: Objective, mu: float, samples: int = 1000, seed: int = 0,
                           decomp=None, betas=None, radius: float = 10.0,
                           rtol: float = 1e-10) -> ViolationReport:
    """Check the cross-term bound for convex ``F`` with smoothness ``L_F = F.lipschitz``.

    ``|<y^ - y, grad F(x^) - grad F(x)>| <= sqrt(L_F/mu) (min D + mu/2 |y - y^|^2)``.
    With a skew decomposition, the variant with the ``B^sym`` term is checked
    for each ``beta`` in `betas` (default: 0.1, 0.5, 0.9).
    """
    if not mu > 0:
        raise ParameterError("mu must be positive")
    rng = np.random.default_rng(seed)
    tally = InequalityTally(rtol)
    LF = F.lipschitz
    c = math.sqrt(LF / mu)
    betas = (0.1, 0.5, 0.9) if betas is None else tuple(betas)
    for _ in range(samples):
        x, xh, y, yh = (sample_points(rng, F.dim, radius) for _ in range(4))
        dgrad = F.gradient(xh) - F.gradient(x)
        dy = yh - y
        dmin = min(bregman_divergence(F, x, xh), bregman_divergence(F, xh, x))
        dy2 = float(dy @ dy)
        inner = float(dy @ dgrad)
        tally.le("cross_term", abs(inner), c * (dmin + 0.5 * mu * dy2))
        if decomp is not None:
            sym = float(dy @ (decomp.b_sym @ dy))
            lhs = abs(inner + 0.5 * sym) - 0.5 * decomp.l_bsym * dy2
            for b in betas:
                rhs = math.sqrt(LF / (b * mu)) * (dmin + 0.5 * b * mu * dy2)
                tally.le(f"cross_term_skew[beta={b}]", lhs, rhs)
    return tally.report()


def check_nonnegative(spec: LyapunovSpec, samples: int = 1000, seed: int = 0,
                      radius: float = 10.0, rtol: float = 1e-10) -> ViolationReport:
    """Sampled check that ``E(x, y) >= 0`` around ``x_star``."""
    rng = np.random.default_rng(seed)
    tally = InequalityTally(rtol)
    xs = spec.x_star
    for _ in range(samples):
        st = SchemeState(x=sample_points(rng, xs.size, radius, xs),
                         y=sample_points(rng, xs.size, radius, xs), gamma=1.0, epsilon=1.0)
        v = eval_lyapunov(spec, st)
        scale = float(np.sum((st.x - xs) ** 2) + np.sum((st.y - xs) ** 2))
        tally.le(f"nonnegative/{spec.kind}", 0.0, v, scale)
    return tally.report()


# ---------------------------------------------------------------------------
# Continuous flows

HALVING_RTOL = 1e-6
INTEGRABLE = ("gradient", "vos", "scaled_gradient", "scaled_vos", "perturbed_vos", "gamma")


@dataclass
class FlowTrajectory:
    flow: str
    times: np.ndarray
    energies: np.ndarray
    envelope: np.ndarray
    final: SchemeState
    halving_gap: Optional[float] = None
    dt: float = 1e-3
    halving_ok: Optional[bool] = None

    @property
    def within_envelope(self) -> bool:
        return bool(np.all(self.energies <= self.envelope))

    @property
    def worst_ratio(self) -> float:
        mask = self.envelope > 0
        return float(np.max(self.energies[mask] / self.envelope[mask])) if mask.any() else 0.0


def _rk4(rhs, z, dt):
    k1 = rhs(z)
    k2 = rhs(z + 0.5 * dt * k1)
    k3 = rhs(z + 0.5 * dt * k2)
    k4 = rhs(z + dt * k3)
    return z + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def _flow_field(flow, system, n, epsilon):
    """Right-hand side on the packed vector and an unpacker to SchemeState."""
    if flow == "gamma":
        return (lambda z: -z), (lambda z: SchemeState(x=np.zeros(0), gamma=float(z[0])))
    if flow == "gradient":
        f = system if isinstance(system, Objective) else system.objective
        return (lambda z: -f.gradient(z)), (lambda z: SchemeState(x=z, y=z))
    if flow == "scaled_gradient":
        f = system if isinstance(system, Objective) else system.objective

        def rhs(z):
            return np.concatenate([-f.gradient(z[:n]) / z[n], [-z[n]]])
        return rhs, (lambda z: SchemeState(x=z[:n], y=z[:n], gamma=float(z[n])))
    S = _system(system)
    F, N, mu = S.F, S.N, S.mu
    if flow == "vos":
        def rhs(z):
            x, y = z[:n], z[n:]
            return np.concatenate([y - x, -(F.gradient(x) + N.apply(y)) / mu])
        return rhs, (lambda z: SchemeState(x=z[:n], y=z[n:]))
    if flow == "scaled_vos":
        def rhs(z):
            x, y, g = z[:n], z[n:2 * n], z[2 * n]
            return np.concatenate([y - x, -(F.gradient(x) + N.apply(y)) / g, [-g]])
        return rhs, (lambda z: SchemeState(x=z[:n], y=z[n:2 * n], gamma=float(z[2 * n])))
    eps = epsilon

    def rhs(z):
        x, y = z[:n], z[n:]
        return np.concatenate([y - x, (eps * (x - y) - F.gradient(x) - N.apply(y)) / eps])
    return rhs, (lambda z: SchemeState(x=z[:n], y=z[n:], epsilon=eps))


def _pack(flow, state):
    if flow == "gamma":
        return np.array([state.gamma], float)
    if flow == "gradient":
        return np.array(state.x, float)
    if flow == "scaled_gradient":
        return np.concatenate([state.x, [state.gamma]])
    if flow == "scaled_vos":
        return np.concatenate([state.x, state.y, [state.gamma]])
    return np.concatenate([state.x, state.y])


def _run(flow, system, state, t_end, dt, spec, sample_every, epsilon):
    n = state.x.shape[0]
    rhs, unpack = _flow_field(flow, system, n, epsilon)
    z = _pack(flow, state)
    steps = int(round(t_end / dt))
    energy = (lambda s: s.gamma) if spec is None else (lambda s: eval_lyapunov(spec, s))
    times, vals = [0.0], [energy(unpack(z))]
    for i in range(1, steps + 1):
        z = _rk4(rhs, z, dt)
        if not np.all(np.isfinite(z)):
            raise IntegrationError(f"non-finite state at t = {i * dt:.6g}")
        if i % sample_every == 0 or i == steps:
            times.append(i * dt)
            vals.append(energy(unpack(z)))
    return np.array(times), np.array(vals), unpack(z)


def decay_envelope(flow: str, spec: Optional[LyapunovSpec], e0: float, t, dt: float,
                   R0: Optional[float] = None, epsilon_R2: float = 0.0) -> np.ndarray:
    """Decay bound for the flow/kind pair.

    Exponential pairs: ``E0 exp(-c t) (1 + 10 dt)``; the merely convex
    gradient flow with the gap uses ``R0^2 / (t + R0^2/E0)``.
    """
    t = np.asarray(t, float)
    slack = 1 + 10 * dt
    if flow == "gamma":
        return e0 * np.exp(-t) * slack
    kind = spec.kind
    if flow == "gradient":
        f = spec.f
        mu, L = float(f.mu), float(f.lipschitz)
        if mu == 0:
            if kind != "gap" or R0 is None:
                raise ConfigurationError("convex gradient flow needs the gap and R0")
            return R0 ** 2 / (t + R0 ** 2 / e0) * slack
        c = 2 * mu * L / (L + mu) if kind == "distance" else mu
        return e0 * np.exp(-c * t) * slack
    if flow == "perturbed_vos":
        return (e0 * np.exp(-t) + epsilon_R2) * slack
    return e0 * np.exp(-t) * slack


def integrate_flow(flow: str, system, state: SchemeState, t_end: float, dt: float = 1e-3,
                   spec: Optional[LyapunovSpec] = None, sample_every: int = 10,
                   check_halving: bool = True, R0: Optional[float] = None) -> FlowTrajectory:
    """Integrate a flow with classical RK4 and record its Lyapunov values.

    ``flow='gamma'`` integrates only ``gamma' = -gamma``. With
    `check_halving`, a second run at ``dt/2`` is compared on ``E(t_end)``:
    ``halving_ok`` requires ``|dE| <= 1e-6 |E(t_end)| + 1e-14 E0`` (the
    absolute part covers trajectories that decay to rounding level).
    Explicit RK4 is only stable while ``dt`` times the stiffness stays
    moderate; the scaled flows stiffen like ``L e^t``.
    """
    if flow not in INTEGRABLE:
        raise ConfigurationError(f"unknown flow {flow!r}")
    if not dt > 0 or t_end < dt:
        raise ParameterError("need dt > 0 and t_end >= dt")
    if flow != "gamma":
        if spec is None:
            raise ConfigurationError("flow integration needs a Lyapunov spec")
        if spec.kind not in FLOWS[flow]:
            raise ConfigurationError(f"flow {flow!r} does not pair with {spec.kind!r}")
        S = system if flow in ("gradient", "scaled_gradient") else _system(system)
        if flow not in ("gradient", "scaled_gradient") and S.N.skew is None \
                and getattr(S.N, "apply", None) is None:
            raise CapabilityError("flow integration needs a single-valued N")
    eps = spec.epsilon if (spec is not None and spec.epsilon is not None) else state.epsilon
    times, vals, final = _run(flow, system, state, t_end, dt, spec, sample_every, eps)
    gap = ok = None
    if check_halving:
        _, vals2, _ = _run(flow, system, state, t_end, dt / 2, spec, 2 * sample_every, eps)
        diff = abs(vals2[-1] - vals[-1])
        gap = diff / max(abs(vals2[-1]), 1e-300)
        ok = bool(diff <= HALVING_RTOL * abs(vals2[-1]) + 1e-14 * abs(vals[0]))
    epsR2 = 0.0
    if flow == "perturbed_vos" and spec is not None:
        dist = float(np.linalg.norm(state.x - spec.x_star))
        epsR2 = eps * (2 * dist) ** 2
    env = decay_envelope(flow, spec, float(vals[0]), times, dt, R0, epsR2)
    return FlowTrajectory(flow, times, vals, env, final, gap, dt, ok)
