"""Uniform driver for every scheme: ids, theorem step sizes, Lyapunov bookkeeping."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from ..core import bregman_divergence
from ..errors import CapabilityError, ConfigurationError, DivergenceError, ParameterError
from ..harness import TraceRecord
from ..lyapunov import LyapunovSpec, eval_lyapunov
from ..problems import (CompositeProblem, LeastSquaresProblem, LogisticProblem, Problem,
                        QuadraticProblem, SaddleProblem, SkewMonotoneProblem)
from . import stepsize as ss
from .agss import agss_explicit_step, agss_implicit_step, saddle_explicit_step, saddle_implicit_step
from .baseline import HssSolver, gd_step, ppa_step
from .convex import homotopy_restart, perturbed_epc_step, scaled_epc_step, scaled_ppa_step
from .state import SchemeState, initial_state
from .stepsize import StepSizePolicy
from .vos import (aor_hb_step, aor_vos_step, composite_aor_step, composite_epc_step,
                  epc_vos_step, extra_gradient_step)

SCHEME_IDS = ("gd", "ppa", "aor-vos", "aor-hb", "epc-vos", "extra-grad", "composite-aor",
              "composite-epc", "agss-implicit", "agss-explicit", "hss", "saddle-implicit",
              "saddle-explicit", "scaled-ppa", "scaled-epc", "perturbed-epc", "homotopy")

_SMOOTH = (QuadraticProblem, LogisticProblem)
_CONVEX = (QuadraticProblem, LogisticProblem, LeastSquaresProblem)
_SPLIT = (QuadraticProblem, LogisticProblem, SkewMonotoneProblem, SaddleProblem,
          LeastSquaresProblem)

ACCEPTS = {
    "gd": _CONVEX, "ppa": _CONVEX, "aor-vos": _SPLIT, "aor-hb": _SMOOTH, "epc-vos": _SPLIT,
    "extra-grad": _SMOOTH, "composite-aor": (CompositeProblem,),
    "composite-epc": (CompositeProblem,), "agss-implicit": (SkewMonotoneProblem,),
    "agss-explicit": (SkewMonotoneProblem,), "hss": (SkewMonotoneProblem,),
    "saddle-implicit": (SaddleProblem,), "saddle-explicit": (SaddleProblem,),
    "scaled-ppa": _CONVEX, "scaled-epc": _SPLIT, "perturbed-epc": _SPLIT, "homotopy": _SPLIT,
}

# schemes whose per-step theorem is stated for the modified function E^alpha
MODIFIED = ("aor-vos", "aor-hb", "composite-aor", "agss-implicit", "agss-explicit",
            "saddle-implicit", "saddle-explicit")
POWER_LAW = ("scaled-epc", "homotopy")


# ---------------------------------------------------------------------------
# Problem constants and theorem rates

def problem_constants(problem: Problem) -> Dict[str, float]:
    """Declared constants a theorem rate may need, as a flat JSON-able dict."""
    c: Dict[str, float] = {}
    if isinstance(problem, SaddleProblem):
        f, g = problem.f, problem.g
        c.update(mu_f=f.mu, L_f=f.lipschitz, mu_g=g.mu, L_g=g.lipschitz,
                 b_norm=problem.coupling.b_norm, mu=min(f.mu, g.mu),
                 L=max(f.lipschitz, g.lipschitz),
                 L_F=max(f.lipschitz - f.mu, g.lipschitz - g.mu))
        return c
    mu, L = float(problem.mu), float(problem.lipschitz)
    c.update(mu=mu, L=L, L_F=L - mu)
    if isinstance(problem, SkewMonotoneProblem):
        c["l_bsym"] = problem.skew.l_bsym
        if problem.linear:
            ev = np.linalg.eigvalsh(problem.base.a_matrix)
            c["lam_min"], c["lam_max"] = float(ev[0]), float(ev[-1])
    return c


def theorem_alpha(scheme: str, constants: Dict[str, float], options: Optional[dict] = None) -> float:
    """The step size the scheme's convergence theorem prescribes."""
    o = options or {}
    c = constants
    if scheme == "gd":
        return ss.gd_alpha(c["mu"], c["L"])
    if scheme in ("ppa", "scaled-ppa"):
        return float(o.get("alpha", 1.0))
    if scheme in ("aor-vos", "aor-hb", "epc-vos", "composite-aor", "composite-epc",
                  "agss-implicit"):
        if "mu_f" in c:
            return ss.saddle_implicit_alpha(c["mu_f"], c["L_f"], c["mu_g"], c["L_g"])
        return ss.aor_alpha(c["mu"], c["L_F"])
    if scheme == "extra-grad":
        return ss.extragrad_alpha(c["mu"], c["L"])
    if scheme == "agss-explicit":
        return ss.agss_explicit_alpha(c["mu"], c["L"], c["l_bsym"])[0]
    if scheme == "hss":
        return ss.hss_alpha(c["lam_min"], c["lam_max"])
    if scheme == "saddle-implicit":
        return ss.saddle_implicit_alpha(c["mu_f"], c["L_f"], c["mu_g"], c["L_g"])
    if scheme == "saddle-explicit":
        return ss.saddle_explicit_alpha(c["mu_f"], c["L_f"], c["mu_g"], c["L_g"], c["b_norm"])[0]
    if scheme == "perturbed-epc":
        return math.sqrt(float(o["epsilon"]) / c["L_F"])
    if scheme in ("scaled-epc", "homotopy"):
        return math.nan
    raise ConfigurationError(f"unknown scheme id {scheme!r}")


def theorem_rate(scheme: str, constants: Dict[str, float],
                 options: Optional[dict] = None) -> Dict[str, float]:
    """``{'factor': ...}`` for per-step contractions, ``{'exponent': ...}`` for power laws.

    The factor applies to the Lyapunov series the harness fits: ``lyap_modified``
    for the schemes in :data:`MODIFIED`, ``lyap_primary`` otherwise.
    """
    if scheme not in SCHEME_IDS:
        raise ConfigurationError(f"unknown scheme id {scheme!r}")
    if scheme in POWER_LAW:
        return {"exponent": -2.0}
    o = options or {}
    a = float(o["alpha"]) if o.get("alpha") is not None else theorem_alpha(scheme, constants, o)
    if scheme == "gd":
        return {"factor": 1.0 - constants["mu"] * a, "alpha": a}
    if scheme == "ppa":
        return {"factor": 1.0 / (1.0 + constants["mu"] * a), "alpha": a}
    if scheme == "hss":
        lo, hi = constants["lam_min"], constants["lam_max"]
        sigma = max(abs(a - lo) / (a + lo), abs(a - hi) / (a + hi))
        return {"factor": sigma ** 2, "alpha": a}
    return {"factor": 1.0 / (1.0 + a), "alpha": a}


# ---------------------------------------------------------------------------
# Run plan

@dataclass
class _Plan:
    state: SchemeState
    step: Callable[[SchemeState, int], SchemeState]
    alpha: Callable[[SchemeState, int], float]
    primary: Callable[[SchemeState], float]
    modified: Optional[Callable[[SchemeState], float]] = None
    after: Optional[Callable[[SchemeState, SchemeState, float], SchemeState]] = None


@dataclass
class RunResult:
    """Outcome of :func:`run_scheme`."""

    scheme: str
    state: SchemeState
    trace: List[TraceRecord]
    iterations: int
    converged: bool
    residual: float
    constants: Dict[str, float]
    theorem: Dict[str, float]
    extra: dict = field(default_factory=dict)


def _f_gap(problem, xs):
    if isinstance(problem, CompositeProblem):
        ref = problem.total_value(xs)
        return lambda x: problem.total_value(x) - ref
    if isinstance(problem, _CONVEX):
        f = problem.objective
        ref = f.value(xs)
        return lambda x: f.value(x) - ref
    return None


def _lyap(spec):
    return lambda s: eval_lyapunov(spec, s)


def _plan(scheme: str, problem: Problem, policy: StepSizePolicy, consts: dict,
          x0, y0, options: dict) -> _Plan:
    st0 = initial_state(x0, y0)
    xs = problem.solution_near(st0.x)

    def alpha_fn(default):
        return lambda s, k: policy.at(k, default)

    if scheme in ("gd", "ppa"):
        f = problem.objective
        spec = LyapunovSpec("combined", xs, f=f, mu=f.mu)
        a0 = theorem_alpha(scheme, consts, options)
        if scheme == "gd":
            step = lambda s, k, a: s.advance(x=gd_step(f, s.x, a), y=None)
        else:
            step = lambda s, k, a: s.advance(x=ppa_step(f, s.x, a), y=None)
        return _Plan(st0, step, alpha_fn(a0), _lyap(spec))

    if scheme in ("aor-vos", "epc-vos", "aor-hb"):
        S = problem.splitting()
        if np.any(np.asarray(S.mu) <= 0):
            raise CapabilityError(f"{scheme} needs a strongly monotone N (mu > 0)")
        a0 = theorem_alpha(scheme, consts, options)
        E = LyapunovSpec("saddle" if isinstance(problem, SaddleProblem) else "vos_F",
                         xs, F=S.F, mu=S.mu)
        if scheme == "epc-vos":
            step = lambda s, k, a: epc_vos_step(S.F, S.N, s, a, mu=S.mu)
            return _Plan(st0, step, alpha_fn(a0), _lyap(E))
        if scheme == "aor-vos":
            step = lambda s, k, a: aor_vos_step(S.F, S.N, s, a, mu=S.mu)
        else:
            f = problem.objective
            if policy.mode == "sequence":
                raise ConfigurationError("aor-hb takes a fixed step size")
            a_hb = policy.at(0, a0)
            gb = ss.hb_parameters(f.mu, f.lipschitz, None if policy.mode != "fixed" else a_hb)

            def step(s, k, a):
                s1 = aor_hb_step(f, s, gb)
                # recover the eliminated y from the AOR relation
                y1 = ((1 + a) * s1.x - s.x + a * s.y) / (2 * a)
                return s1.advance(y=y1, iteration=s1.iteration)
        alpha = alpha_fn(a0)
        if scheme == "aor-hb":
            a_fixed = policy.at(0, a0)
            alpha = lambda s, k: a_fixed
        mod = lambda s, k=None: eval_lyapunov(
            LyapunovSpec("modified_alpha", xs, F=S.F, mu=S.mu, alpha=_cur[0]), s)
        _cur = [a0]

        def track(s_prev, s_new, a):
            _cur[0] = a
            return s_new
        return _Plan(st0, step, alpha, _lyap(E), mod, track)

    if scheme == "extra-grad":
        f = problem.objective
        if not f.mu > 0:
            raise CapabilityError("extra-grad needs mu > 0")
        E = LyapunovSpec("vos_f", xs, f=f, mu=f.mu)
        reset = bool(options.get("monotone_reset", False))
        step = lambda s, k, a: extra_gradient_step(f, s, a, reset)
        return _Plan(st0, step, alpha_fn(theorem_alpha(scheme, consts)), _lyap(E))

    if scheme in ("composite-aor", "composite-epc"):
        f, g = problem.objective, problem.nonsmooth
        F = f.shifted()
        E = LyapunovSpec("vos_F", xs, F=F, mu=f.mu)
        a0 = theorem_alpha(scheme, consts)
        if scheme == "composite-epc":
            step = lambda s, k, a: composite_epc_step(f, g, s, a)
            return _Plan(st0, step, alpha_fn(a0), _lyap(E))
        _cur = [a0]
        step = lambda s, k, a: composite_aor_step(f, g, s, a)
        mod = lambda s: eval_lyapunov(LyapunovSpec("modified_alpha", xs, F=F, mu=f.mu,
                                                   alpha=_cur[0]), s)
        return _Plan(st0, step, alpha_fn(a0), _lyap(E), mod,
                     lambda sp, sn, a: (_cur.__setitem__(0, a), sn)[1])

    if scheme in ("agss-implicit", "agss-explicit"):
        F = problem.objective.shifted()
        mu = problem.mu
        E = LyapunovSpec("vos_F", xs, F=F, mu=mu)
        a0 = theorem_alpha(scheme, consts)
        _cur = [a0]
        if scheme == "agss-implicit":
            step = lambda s, k, a: agss_implicit_step(problem, s, a)
            mk = lambda a: LyapunovSpec("agss_alpha", xs, F=F, mu=mu, alpha=a)
        else:
            step = lambda s, k, a: agss_explicit_step(problem, s, a)
            mk = lambda a: LyapunovSpec("agss_explicit_alpha", xs, F=F, mu=mu, alpha=a,
                                        b_sym=problem.skew.b_sym)
        mod = lambda s: eval_lyapunov(mk(_cur[0]), s)
        return _Plan(st0, step, alpha_fn(a0), _lyap(E), mod,
                     lambda sp, sn, a: (_cur.__setitem__(0, a), sn)[1])

    if scheme == "hss":
        if not problem.linear:
            raise CapabilityError("hss applies to linear problems only")
        a0 = theorem_alpha(scheme, consts)
        solvers: Dict[float, HssSolver] = {}
        Nm = problem.skew.n_matrix

        def step(s, k, a):
            if a not in solvers:
                solvers[a] = HssSolver(problem, a)
            return s.advance(x=solvers[a].step(s.x), y=None)
        a_now = [a0]

        def primary(s):
            w = a_now[0] * (s.x - xs) + Nm @ (s.x - xs)
            return 0.5 * float(w @ w)
        return _Plan(st0, step, alpha_fn(a0), primary, None,
                     lambda sp, sn, a: (a_now.__setitem__(0, a), sn)[1])

    if scheme in ("saddle-implicit", "saddle-explicit"):
        F = problem.block_F()
        muv = problem.mu_vector
        E = LyapunovSpec("saddle", xs, F=F, mu=muv)
        a0 = theorem_alpha(scheme, consts)
        _cur = [a0]
        if scheme == "saddle-implicit":
            step = lambda s, k, a: saddle_implicit_step(problem, s, a)
            mk = lambda a: LyapunovSpec("saddle_implicit_alpha", xs, F=F, mu=muv, alpha=a)
        else:
            step = lambda s, k, a: saddle_explicit_step(problem, s, a)
            mk = lambda a: LyapunovSpec("saddle_alpha", xs, F=F, mu=muv, alpha=a,
                                        b_matrix=problem.coupling.b_matrix,
                                        dim_u=problem.dim_u)
        mod = lambda s: eval_lyapunov(mk(_cur[0]), s)
        return _Plan(st0, step, alpha_fn(a0), _lyap(E), mod,
                     lambda sp, sn, a: (_cur.__setitem__(0, a), sn)[1])

    if scheme == "scaled-ppa":
        f = problem.objective
        g0 = float(options.get("gamma0", 1.0))
        st0 = initial_state(x0, y0, gamma=g0)
        E = LyapunovSpec("scaled_ppa", xs, f=f)
        step = lambda s, k, a: scaled_ppa_step(f, s, a)
        return _Plan(st0, step, alpha_fn(theorem_alpha(scheme, consts, options)), _lyap(E))

    S = problem.splitting()
    LF = S.F.lipschitz
    if not LF > 0:
        raise CapabilityError(f"{scheme} needs L_F > 0")

    if scheme == "scaled-epc":
        simple = policy.mode == "sequence" and policy.alpha == "simple"
        g0 = float(options.get("gamma0", 4 * LF if simple else LF))
        st0 = initial_state(x0, y0, gamma=g0)
        E = LyapunovSpec("scaled", xs, F=S.F)

        def step(s, k, a):
            gn = 4 * LF / (k + 2) ** 2 if simple else None
            return scaled_epc_step(S.F, S.N, s, a, gn)
        alpha = lambda s, k: policy.at(k, math.sqrt(s.gamma / LF))
        return _Plan(st0, step, alpha, _lyap(E))

    if scheme == "perturbed-epc":
        eps = float(options["epsilon"])
        st0 = initial_state(x0, y0, epsilon=eps)
        E = LyapunovSpec("perturbed", xs, F=S.F)
        step = lambda s, k, a: perturbed_epc_step(S.F, S.N, s, a)
        return _Plan(st0, step, alpha_fn(math.sqrt(eps / LF)), _lyap(E))

    raise ConfigurationError(f"unknown scheme id {scheme!r}")  # pragma: no cover


def _record(problem, plan, s, k, alpha, xs, gap, wall):
    x = s.x
    return TraceRecord(
        k=k,
        lyap_primary=float(plan.primary(s)),
        lyap_modified=None if plan.modified is None else float(plan.modified(s)),
        f_gap=None if gap is None else float(gap(x)),
        grad_norm=float(problem.residual(x)),
        dist_to_star=None if xs is None else float(np.linalg.norm(x - xs)),
        gamma=s.gamma if s.gamma > 0 else None,
        epsilon=s.epsilon if s.epsilon > 0 else None,
        alpha=float(alpha),
        wall_ns=int(wall),
    )


def _defaults(scheme, problem, options, x0, consts):
    """Fill scheme options that depend on the problem (epsilon for perturbed runs)."""
    o = dict(options or {})
    if scheme == "perturbed-epc" and "epsilon" not in o:
        o["epsilon"] = 1e-3 * consts["L_F"]
    return o


def run_scheme(scheme: str, problem: Problem, policy: Optional[StepSizePolicy] = None,
               max_iter: int = 1000, tol: float = 0.0, sink: Optional[Callable] = None,
               trace_every: int = 1, x0=None, y0=None, seed: int = 0,
               options: Optional[dict] = None, timing: bool = False) -> RunResult:
    """Run `scheme` on `problem` until ``residual <= tol`` or `max_iter` steps.

    One :class:`TraceRecord` is emitted every `trace_every` iterations (the
    first and the last iterate are always kept). `sink`, if given, is called
    with each record as it is produced. The start point defaults to
    ``problem.initial_point(seed)`` with ``y0 = x0``. For ``homotopy``,
    `max_iter` caps the number of outer passes and rows are per outer pass.

    Raises
    ------
    ConfigurationError
        Unknown scheme id or bad option.
    CapabilityError
        The problem lacks what the scheme needs.
    DivergenceError
        An iterate became non-finite; the last finite state is attached.
    """
    if scheme not in SCHEME_IDS:
        raise ConfigurationError(f"unknown scheme id {scheme!r}; known: {', '.join(SCHEME_IDS)}")
    if not isinstance(problem, ACCEPTS[scheme]):
        raise CapabilityError(f"scheme {scheme!r} does not apply to a {problem.kind} problem")
    if max_iter < 0:
        raise ParameterError("max_iter must be >= 0")
    if trace_every < 1:
        raise ParameterError("trace_every must be >= 1")
    policy = policy or StepSizePolicy()
    x0 = problem.initial_point(seed) if x0 is None else np.array(x0, float)
    consts = problem_constants(problem)
    options = _defaults(scheme, problem, options, x0, consts)
    if scheme == "homotopy":
        return _run_homotopy(problem, x0, y0, max_iter, sink, consts, options, timing)

    plan = _plan(scheme, problem, policy, consts, x0, y0, options)
    xs = problem.solution_near(plan.state.x)
    gap = _f_gap(problem, xs)
    rate = theorem_rate(scheme, consts, options)
    t0 = time.perf_counter_ns()
    clock = (lambda: time.perf_counter_ns() - t0) if timing else (lambda: 0)
    trace: List[TraceRecord] = []

    def emit(rec):
        trace.append(rec)
        if sink is not None:
            sink(rec)

    s = plan.state
    a = plan.alpha(s, 0)
    if plan.after is not None:
        plan.after(s, s, a)
    emit(_record(problem, plan, s, 0, a, xs, gap, clock()))
    res = float(problem.residual(s.x))
    k = 0
    while k < max_iter and not (tol > 0 and res <= tol):
        a = plan.alpha(s, k)
        s1 = plan.step(s, k, a)
        if not s1.is_finite():
            raise DivergenceError(f"{scheme}: non-finite iterate at step {k + 1}", last_state=s)
        if plan.after is not None:
            s1 = plan.after(s, s1, a)
        s = s1
        k += 1
        res = float(problem.residual(s.x))
        last = k == max_iter or (tol > 0 and res <= tol)
        if k % trace_every == 0 or last:
            emit(_record(problem, plan, s, k, a, xs, gap, clock()))
    return RunResult(scheme, s, trace, k, tol > 0 and res <= tol, res, consts, rate)


def _run_homotopy(problem, x0, y0, max_outer, sink, consts, options, timing) -> RunResult:
    S = problem.splitting()
    F, N = S.F, S.N
    LF = F.lipschitz
    st0 = initial_state(x0, y0)
    xs = problem.solution_near(st0.x)
    eps0 = float(options.get("epsilon0", max(bregman_divergence(F, st0.x, xs), 1e-300)))
    target = float(options.get("epsilon_target", 1e-4))
    R = options.get("R")
    t0 = time.perf_counter_ns()
    clock = (lambda: time.perf_counter_ns() - t0) if timing else (lambda: 0)
    E = LyapunovSpec("perturbed", xs, F=F)
    gap = _f_gap(problem, xs)
    trace: List[TraceRecord] = []

    def row(st, k, eps):
        rec = TraceRecord(k=k, lyap_primary=eval_lyapunov(E, st.advance(epsilon=eps)),
                          lyap_modified=None,
                          f_gap=None if gap is None else float(gap(st.x)),
                          grad_norm=float(problem.residual(st.x)),
                          dist_to_star=float(np.linalg.norm(st.x - xs)), gamma=None,
                          epsilon=eps, alpha=math.sqrt(eps / LF), wall_ns=int(clock()))
        trace.append(rec)
        if sink is not None:
            sink(rec)

    row(st0, 0, eps0)
    if max_outer == 0:
        return RunResult("homotopy", st0, trace, 0, False, float(problem.residual(st0.x)),
                         consts, {"exponent": -2.0})
    result = homotopy_restart(F, N, st0.x, st0.y, eps0, target, R=R, x_star=xs, L_F=LF,
                              max_outer=max_outer)
    for rec in result.outer:
        row(result.states[rec.k - 1], rec.cumulative, rec.epsilon)
    st = result.state
    res = float(problem.residual(st.x))
    extra = {"homotopy": result}
    return RunResult("homotopy", st, trace, result.outer[-1].cumulative if result.outer else 0,
                     False, res, consts, {"exponent": -2.0}, extra)
