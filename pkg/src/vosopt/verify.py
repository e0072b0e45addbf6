"""Property suites behind ``vosopt verify``: bounds, Lyapunov and scheme checks.

Every check is seeded; the report is a deterministic list of named results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .core import (bregman_divergence, check_three_point_identity, power_iteration,
                   resolvent_residual, sample_points, verify_convexity_bounds)
from .errors import ConfigurationError
from .harness import compare_to_theorem
from .lyapunov import (LyapunovSpec, check_cross_term_lemma, check_nonnegative,
                       check_strong_lyapunov, eval_lyapunov, integrate_flow)
from .operators import (forward_substitution_solve, make_coupling, saddle_block_matrix,
                        saddle_block_solve, shifted_skew_solve)
from .problems import (CompositeProblem, LeastSquaresProblem, LogisticProblem, Problem,
                       QuadraticProblem, SaddleProblem, SkewMonotoneProblem, build_lasso,
                       build_least_squares_convex, build_logistic, build_quadratic, build_saddle,
                       build_skew_monotone, problem_from_dict)
from .solvers import (SCHEME_IDS, StepSizePolicy, aor_hb_step, aor_vos_step, epc_vos_step,
                      initial_state, run_scheme)
from .solvers.runner import ACCEPTS
from .solvers.stepsize import agss_explicit_alpha, saddle_explicit_alpha, vos_alpha

SUITES = ("bounds", "lyapunov", "schemes", "all")
RTOL = 1e-10


@dataclass
class CheckResult:
    suite: str
    problem: str
    name: str
    passed: bool
    worst: float
    detail: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        extra = f"  {self.detail}" if self.detail else ""
        return f"{tag} {self.suite}/{self.problem}/{self.name} worst_margin={self.worst:.3e}{extra}"


def default_zoo(seed: int = 0) -> Dict[str, Problem]:
    """The built-in problem set; `seed` shifts every instance seed."""
    return {
        "quadratic_1_10": build_quadratic([1, 10], seed=seed, dim=10),
        "quadratic_1_100": build_quadratic([1, 100], seed=seed, dim=30),
        "logistic": build_logistic(n=20, seed=seed),
        "lasso": build_lasso(n=30, seed=seed),
        "skew": build_skew_monotone(n=20, seed=seed),
        "saddle": build_saddle(seed=seed),
        "least_squares": build_least_squares_convex(seed=seed),
    }


def _label(desc, i):
    if isinstance(desc, dict):
        return f"{desc.get('type', 'problem')}_{i}"
    return f"problem_{i}"


def zoo_from_config(cfg: Optional[dict], seed: int) -> Dict[str, Problem]:
    if not cfg or "problems" not in cfg:
        return default_zoo(seed)
    probs = cfg["problems"]
    if not isinstance(probs, list) or not probs:
        raise ConfigurationError("'problems' must be a non-empty list")
    return {_label(d, i): problem_from_dict(d) for i, d in enumerate(probs)}


def _from_report(suite, pname, report, prefix=""):
    out = []
    bad = {v.name: v for v in report}
    for name, worst in sorted(report.margins.items()):
        v = bad.get(name)
        detail = f"{v.count} violations" if v else ""
        out.append(CheckResult(suite, pname, prefix + name, v is None, worst, detail))
    return out


def _scalar(suite, pname, name, err, tol):
    return CheckResult(suite, pname, name, bool(err <= tol), tol - err, f"error={err:.3e}")


def _smooth_parts(p: Problem):
    """(label, objective) pairs of the smooth functions a problem carries."""
    if isinstance(p, SaddleProblem):
        return [("f", p.f, p.u_star), ("g", p.g, p.p_star)]
    if isinstance(p, CompositeProblem):
        return [("f", p.objective, None)]
    if isinstance(p, SkewMonotoneProblem):
        return [("f", p.objective, None)]
    return [("f", p.objective, p.x_star if not isinstance(p, LeastSquaresProblem) else None)]


# ---------------------------------------------------------------------------
# bounds

def suite_bounds(zoo: Dict[str, Problem], seed: int = 0, samples: int = 1000) -> List[CheckResult]:
    out: List[CheckResult] = []
    for pname, p in zoo.items():
        for label, f, xs in _smooth_parts(p):
            rep = verify_convexity_bounds(f, samples=samples, seed=seed, x_star=xs)
            out += _from_report("bounds", pname, rep, f"{label}:")
            rng = np.random.default_rng(seed + 1)
            worst = max(check_three_point_identity(f, *(sample_points(rng, f.dim) for _ in range(3)),
                                                   relative=True) for _ in range(samples))
            out.append(_scalar("bounds", pname, f"{label}:three_point_identity", worst, 1e-12))
            if f.mu > 0:
                rep = verify_convexity_bounds(f.shifted(), samples=samples // 4, seed=seed)
                out += _from_report("bounds", pname, rep, f"{label}_-mu:")
        out += _operator_checks(pname, p, seed)
    return out


def _operator_checks(pname, p, seed):
    out = []
    rng = np.random.default_rng(seed + 2)
    if isinstance(p, SkewMonotoneProblem):
        d = p.skew
        b = rng.standard_normal(d.dim)
        rec = np.max(np.abs(d.b_lower.T - d.b_lower - d.n_matrix))
        out.append(_scalar("bounds", pname, "skew_split_reconstruction", rec, 1e-14))
        for beta in (2.0, 5.0):
            y = forward_substitution_solve(d, beta, b, scale=-2.0)
            M = beta * np.eye(d.dim) - 2 * d.b_lower
            out.append(_scalar("bounds", pname, f"forward_substitution[beta={beta}]",
                               float(np.linalg.norm(M @ y - b) / np.linalg.norm(b)), 1e-12))
            y = shifted_skew_solve(d, beta, b)
            out.append(_scalar("bounds", pname, f"shifted_skew_solve[beta={beta}]",
                               float(np.linalg.norm(beta * y + d.apply(y) - b) / np.linalg.norm(b)),
                               1e-12))
        est = power_iteration(d.b_sym, iterations=500, seed=seed)
        out.append(_scalar("bounds", pname, "power_iteration_vs_exact_norm",
                           abs(est - d.l_bsym) / d.l_bsym, 1e-6))
        N = p.operator()
        out.append(_scalar("bounds", pname, "resolvent_residual",
                           resolvent_residual(N, 1.5, b) / np.linalg.norm(b), 1e-12))
    if isinstance(p, SaddleProblem):
        c = p.coupling
        rv, rq = rng.standard_normal(c.dim_u), rng.standard_normal(c.dim_p)
        for a in (0.1, 1.0):
            v, q = saddle_block_solve(c, a, rv, rq)
            M = saddle_block_matrix(c, a)
            res = np.linalg.norm(M @ np.concatenate([v, q]) - np.concatenate([rv, rq]))
            out.append(_scalar("bounds", pname, f"saddle_block_solve[alpha={a}]",
                               float(res / np.linalg.norm(np.concatenate([rv, rq]))), 1e-12))
        out.append(_scalar("bounds", pname, "kkt_at_solution",
                           p.residual(p.x_star) / (1 + np.linalg.norm(p.x_star)), 1e-10))
    return out


# ---------------------------------------------------------------------------
# lyapunov

def _vos_pairs(p: Problem):
    """(flow, kind, system, spec) combinations meaningful for the problem."""
    xs = p.x_star
    out = []
    if isinstance(p, (QuadraticProblem, LogisticProblem)):
        f = p.objective
        S = p.splitting()
        for kind in ("gap", "distance", "combined"):
            out.append(("gradient", kind, f, LyapunovSpec(kind, xs, f=f, mu=f.mu)))
        out.append(("vos", "vos_F", p, LyapunovSpec("vos_F", xs, F=S.F, mu=S.mu)))
        out.append(("vos", "vos_f", p, LyapunovSpec("vos_f", xs, f=f, mu=S.mu)))
        out.append(("scaled_vos", "scaled", p, LyapunovSpec("scaled", xs, F=S.F)))
        out.append(("perturbed_vos", "perturbed", p,
                    LyapunovSpec("perturbed", xs, F=S.F, epsilon=0.5)))
    elif isinstance(p, SkewMonotoneProblem):
        S = p.splitting()
        out.append(("vos", "vos_F", p, LyapunovSpec("vos_F", xs, F=S.F, mu=S.mu)))
        out.append(("vos", "vos_f", p, LyapunovSpec("vos_f", xs, f=p.objective, mu=S.mu)))
    elif isinstance(p, SaddleProblem):
        S = p.splitting()
        out.append(("vos", "vos_F", p, LyapunovSpec("vos_F", xs, F=S.F, mu=S.mu)))
    elif isinstance(p, LeastSquaresProblem):
        f = p.objective
        S = p.splitting()
        out.append(("gradient", "gap", f, LyapunovSpec("gap", xs, f=f)))
        out.append(("scaled_gradient", "scaled_ppa", f, LyapunovSpec("scaled_ppa", xs, f=f)))
        out.append(("scaled_vos", "scaled", p, LyapunovSpec("scaled", xs, F=S.F)))
        out.append(("perturbed_vos", "perturbed", p,
                    LyapunovSpec("perturbed", xs, F=S.F, epsilon=0.1)))
    return out


def _modified_specs(p: Problem):
    xs = p.x_star
    if isinstance(p, (QuadraticProblem, LogisticProblem)):
        S = p.splitting()
        a = vos_alpha(p.mu, p.lipschitz)
        return [LyapunovSpec("modified_alpha", xs, F=S.F, mu=S.mu, alpha=a)]
    if isinstance(p, CompositeProblem):
        a = vos_alpha(p.mu, p.lipschitz)
        return [LyapunovSpec("modified_alpha", xs, F=p.objective.shifted(), mu=p.mu, alpha=a)]
    if isinstance(p, SkewMonotoneProblem):
        F = p.objective.shifted()
        a = vos_alpha(p.mu, p.lipschitz)
        ae = agss_explicit_alpha(p.mu, p.lipschitz, p.skew.l_bsym)[0]
        return [LyapunovSpec("agss_alpha", xs, F=F, mu=p.mu, alpha=a),
                LyapunovSpec("agss_explicit_alpha", xs, F=F, mu=p.mu, alpha=ae,
                             b_sym=p.skew.b_sym)]
    if isinstance(p, SaddleProblem):
        F = p.block_F()
        f, g = p.f, p.g
        a = min(vos_alpha(f.mu, f.lipschitz), vos_alpha(g.mu, g.lipschitz))
        ae = saddle_explicit_alpha(f.mu, f.lipschitz, g.mu, g.lipschitz, p.coupling.b_norm)[0]
        return [LyapunovSpec("saddle_implicit_alpha", xs, F=F, mu=p.mu_vector, alpha=a),
                LyapunovSpec("saddle_alpha", xs, F=F, mu=p.mu_vector, alpha=ae,
                             b_matrix=p.coupling.b_matrix, dim_u=p.dim_u)]
    return []


def suite_lyapunov(zoo: Dict[str, Problem], seed: int = 0, samples: int = 1000,
                   flows: bool = True) -> List[CheckResult]:
    out: List[CheckResult] = []
    for pname, p in zoo.items():
        for flow, kind, system, spec in _vos_pairs(p):
            rep = check_strong_lyapunov(flow, spec, system, samples=samples, seed=seed)
            out += _from_report("lyapunov", pname, rep)
            st = initial_state(spec.x_star, gamma=1.0, epsilon=1.0)
            out.append(_scalar("lyapunov", pname, f"{kind}:zero_at_solution",
                               abs(eval_lyapunov(spec, st)), 1e-10))
        for spec in _modified_specs(p):
            rep = check_nonnegative(spec, samples=samples, seed=seed)
            out += _from_report("lyapunov", pname, rep)
            st = initial_state(spec.x_star)
            out.append(_scalar("lyapunov", pname, f"{spec.kind}:zero_at_solution",
                               abs(eval_lyapunov(spec, st)), 1e-10))
        out += _lemma_checks(pname, p, seed, samples)
    if flows:
        out += _flow_checks(seed)
    return out


def _lemma_checks(pname, p, seed, samples):
    if isinstance(p, (QuadraticProblem, LogisticProblem)):
        F, mu = p.splitting().F, p.mu
        return _from_report("lyapunov", pname, check_cross_term_lemma(F, mu, samples, seed))
    if isinstance(p, SkewMonotoneProblem):
        F = p.objective.shifted()
        return _from_report("lyapunov", pname,
                            check_cross_term_lemma(F, p.mu, samples, seed, decomp=p.skew))
    return []


def _flow_checks(seed):
    out = []
    q = build_quadratic([1, 10], seed=seed, dim=10)
    f, S, xs = q.objective, q.splitting(), q.x_star
    x0 = q.initial_point(seed)

    def add(name, tr):
        out.append(CheckResult("lyapunov", "flows", f"{name}:envelope", tr.within_envelope,
                               1.0 - tr.worst_ratio))
        if tr.halving_ok is not None:
            out.append(CheckResult("lyapunov", "flows", f"{name}:dt_halving", tr.halving_ok,
                                   1e-6 - tr.halving_gap, f"relative gap={tr.halving_gap:.2e}"))

    from .solvers.state import SchemeState
    tr = integrate_flow("gamma", None, SchemeState(x=np.zeros(1), gamma=1.0), 1.0,
                        check_halving=False)
    out.append(_scalar("lyapunov", "flows", "gamma_decay_e^-1", abs(tr.final.gamma - math.exp(-1)),
                       1e-8))
    add("vos", integrate_flow("vos", q, initial_state(x0), 10.0,
                              spec=LyapunovSpec("vos_F", xs, F=S.F, mu=S.mu)))
    for kind in ("gap", "distance", "combined"):
        add(f"gradient_{kind}", integrate_flow("gradient", f, initial_state(x0), 10.0,
                                               spec=LyapunovSpec(kind, xs, f=f, mu=f.mu)))
    add("scaled_vos", integrate_flow("scaled_vos", q, initial_state(x0, gamma=1.0), 5.0,
                                     spec=LyapunovSpec("scaled", xs, F=S.F)))
    ls = build_least_squares_convex(seed=seed)
    y0 = ls.initial_point(seed)
    xn = ls.solution_near(y0)
    add("scaled_gradient", integrate_flow("scaled_gradient", ls, initial_state(y0, gamma=1.0), 5.0,
                                          spec=LyapunovSpec("scaled_ppa", xn, f=ls.objective)))
    add("gradient_convex_gap", integrate_flow(
        "gradient", ls.objective, initial_state(y0), 10.0,
        spec=LyapunovSpec("gap", xn, f=ls.objective), R0=float(np.linalg.norm(y0 - xn))))
    return out


# ---------------------------------------------------------------------------
# schemes

def _scheme_problem(zoo, scheme):
    for pname, p in zoo.items():
        if isinstance(p, ACCEPTS[scheme]):
            if scheme in ("scaled-epc", "perturbed-epc", "homotopy", "scaled-ppa") and \
                    not isinstance(p, LeastSquaresProblem) and any(
                        isinstance(q, LeastSquaresProblem) for q in zoo.values()):
                continue
            if scheme == "hss" and not p.linear:
                continue
            return pname, p
    return None, None


def suite_schemes(zoo: Dict[str, Problem], seed: int = 0) -> List[CheckResult]:
    out: List[CheckResult] = []
    for scheme in SCHEME_IDS:
        pname, p = _scheme_problem(zoo, scheme)
        if p is None:
            continue
        n = {"scaled-epc": 2000, "perturbed-epc": 1000, "homotopy": 100}.get(scheme, 200)
        r = run_scheme(scheme, p, max_iter=n, seed=seed)
        rep = compare_to_theorem(r.trace, scheme, r.constants)
        out.append(CheckResult("schemes", pname, f"{scheme}:rate", rep.passed, rep.margin,
                               f"measured={rep.measured:.6g} theorem={rep.theorem:.6g}"))
        out.append(_fixed_point(scheme, pname, p))
    out += _reductions(seed)
    return out


def _fixed_point(scheme, pname, p):
    xs = p.x_star
    opts = {"epsilon0": 1.0} if scheme == "homotopy" else None
    r = run_scheme(scheme, p, max_iter=100 if scheme != "homotopy" else 3, x0=xs, y0=xs,
                   options=opts)
    worst = max(np.linalg.norm(r.state.x - xs), 0.0)
    tol = 1e-12 * (1 + np.linalg.norm(xs))
    dev = max(t.dist_to_star for t in r.trace)
    return CheckResult("schemes", pname, f"{scheme}:fixed_point", bool(dev <= tol), tol - dev,
                       f"max deviation={dev:.2e}")


def _max_dev(a_states, b_states):
    return max(float(np.max(np.abs(a - b))) for a, b in zip(a_states, b_states))


def _reductions(seed):
    out = []
    q = build_quadratic([1, 100], seed=seed, dim=20)
    x0 = q.initial_point(seed)
    # triple-term form equals AOR-VOS with y eliminated
    S, f = q.splitting(), q.objective
    a = vos_alpha(q.mu, q.lipschitz)
    s1 = s2 = initial_state(x0)
    xa, xb = [], []
    for _ in range(100):
        s1 = aor_vos_step(S.F, S.N, s1, a)
        s2 = aor_hb_step(f, s2)
        xa.append(s1.x)
        xb.append(s2.x)
    out.append(_scalar("schemes", "reductions", "aor_hb_equals_aor_vos", _max_dev(xa, xb), 1e-12))
    # EPC extrapolation identity: x+ - x~ = alpha/(1+alpha) (y+ - y)
    st = initial_state(x0, q.initial_point(seed + 1))
    worst = 0.0
    for _ in range(50):
        nxt = epc_vos_step(S.F, S.N, st, a)
        lhs = nxt.x - nxt.x_tilde
        rhs = a / (1 + a) * (nxt.y - st.y)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))) / (1 + float(np.max(np.abs(rhs)))))
        st = nxt
    out.append(_scalar("schemes", "reductions", "epc_extrapolation_identity", worst, 1e-12))
    # composite with g = 0 equals the smooth scheme
    base = build_quadratic([1, 100], seed=seed, dim=20)
    lz = CompositeProblem(base, 0.0, base.x_star, base.x_star, {"type": "lasso", "lam": 0.0})
    xz = lz.initial_point(seed)
    for comp, smooth in (("composite-aor", "aor-vos"), ("composite-epc", "epc-vos")):
        ra = run_scheme(comp, lz, max_iter=100, x0=xz, trace_every=1)
        rb = run_scheme(smooth, lz.smooth, max_iter=100, x0=xz)
        dev = float(np.max(np.abs(ra.state.x - rb.state.x)))
        out.append(_scalar("schemes", "reductions", f"{comp}_g0_equals_{smooth}", dev, 1e-12))
    # N = 0 AGSS equals AOR-VOS
    sk0 = build_skew_monotone(n=20, skew_norm=0.0, seed=seed)
    xk = sk0.initial_point(seed)
    rb = run_scheme("aor-vos", sk0.base, max_iter=100, x0=xk)
    for scheme in ("agss-implicit", "agss-explicit"):
        ra = run_scheme(scheme, sk0, max_iter=100, x0=xk)
        dev = float(np.max(np.abs(ra.state.x - rb.state.x)))
        out.append(_scalar("schemes", "reductions", f"{scheme}_N0_equals_aor_vos", dev, 1e-12))
    # B = 0 saddle decouples into two AOR-VOS runs
    sd0 = build_saddle(b_norm=0.0, seed=seed)
    z0 = sd0.initial_point(seed)
    u0, p0 = sd0.split(z0)
    ru = run_scheme("aor-vos", sd0.f_problem, max_iter=100, x0=u0,
                    policy=_fixed(_saddle_alpha(sd0)))
    rp = run_scheme("aor-vos", sd0.g_problem, max_iter=100, x0=p0,
                    policy=_fixed(_saddle_alpha(sd0)))
    for scheme in ("saddle-implicit", "saddle-explicit"):
        rs = run_scheme(scheme, sd0, max_iter=100, x0=z0)
        dev = float(np.max(np.abs(rs.state.x - np.concatenate([ru.state.x, rp.state.x]))))
        out.append(_scalar("schemes", "reductions", f"{scheme}_B0_decouples", dev, 1e-12))
    return out


def _fixed(a):
    return StepSizePolicy("fixed", a)


def _saddle_alpha(p):
    f, g = p.f, p.g
    return min(vos_alpha(f.mu, f.lipschitz), vos_alpha(g.mu, g.lipschitz))


# ---------------------------------------------------------------------------

def run_suite(suite: str, seed: int = 0, config: Optional[dict] = None,
              samples: int = 1000) -> List[CheckResult]:
    """Run one suite (or ``all``) over the default zoo or the configured problems."""
    if suite not in SUITES:
        raise ConfigurationError(f"unknown suite {suite!r}; known: {', '.join(SUITES)}")
    zoo = zoo_from_config(config, seed)
    custom = bool(config and "problems" in config)
    out: List[CheckResult] = []
    if suite in ("bounds", "all"):
        out += suite_bounds(zoo, seed, samples)
    if suite in ("lyapunov", "all"):
        out += suite_lyapunov(zoo, seed, samples, flows=not custom)
    if suite in ("schemes", "all"):
        out += suite_schemes(zoo, seed)
    return out
