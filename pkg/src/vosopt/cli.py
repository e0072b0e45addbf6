"""Command-line entry point: ``vosopt run|verify|sweep|report``.

Exit codes: 0 success, 1 failed checks, 2 bad configuration or unreadable
input, 3 divergence.
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

from .errors import (CapabilityError, ConfigurationError, DivergenceError, FitError, InputError,
                     VosError)
from .harness import compare_to_theorem, iterations_to, read_trace, write_trace
from .problems import problem_from_dict
from .solvers.runner import SCHEME_IDS, run_scheme
from .solvers.stepsize import StepSizePolicy
from .verify import SUITES, run_suite

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_DIVERGED = 0, 1, 2, 3
REPORT_THRESHOLD = 1e-8
_RUN_KEYS = ("problem", "scheme", "policy", "max_iter", "tol", "seed", "trace_every",
             "output", "format", "options", "timing")


def _seed(flag: Optional[int], configured=None) -> int:
    """``--seed`` wins, then the config, then ``VOSOPT_SEED``, then 0."""
    if flag is not None:
        return int(flag)
    if configured is not None:
        return int(configured)
    env = os.environ.get("VOSOPT_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigurationError(f"VOSOPT_SEED must be an integer, got {env!r}") from None
    return 0


@dataclass
class RunConfig:
    """One run: a problem description, a scheme id and run controls."""

    problem: dict
    scheme: str
    policy: Optional[dict] = None
    max_iter: int = 1000
    tol: float = 0.0
    seed: int = 0
    trace_every: int = 1
    output: Optional[str] = None
    format: str = "csv"
    options: dict = field(default_factory=dict)
    timing: bool = False

    @classmethod
    def from_dict(cls, d: dict, seed: Optional[int] = None) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigurationError("run config must be a JSON object")
        unknown = sorted(set(d) - set(_RUN_KEYS) - {"sweep"})
        if unknown:
            raise ConfigurationError(f"unknown config keys: {', '.join(unknown)}")
        for key in ("problem", "scheme"):
            if key not in d:
                raise ConfigurationError(f"config is missing {key!r}")
        if d["scheme"] not in SCHEME_IDS:
            raise ConfigurationError(f"unknown scheme id {d['scheme']!r}")
        if not isinstance(d["problem"], dict):
            raise ConfigurationError("'problem' must be an object")
        fmt = d.get("format", "csv")
        if fmt not in ("csv", "jsonl"):
            raise ConfigurationError(f"unknown format {fmt!r}")
        try:
            max_iter, trace_every = int(d.get("max_iter", 1000)), int(d.get("trace_every", 1))
            tol = float(d.get("tol", 0.0))
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"bad numeric field: {exc}") from None
        if max_iter < 0 or trace_every < 1 or not tol >= 0:
            raise ConfigurationError("need max_iter >= 0, trace_every >= 1 and tol >= 0")
        opts = d.get("options") or {}
        if not isinstance(opts, dict):
            raise ConfigurationError("'options' must be an object")
        return cls(problem=dict(d["problem"]), scheme=d["scheme"], policy=d.get("policy"),
                   max_iter=max_iter, tol=tol, seed=_seed(seed, d.get("seed")),
                   trace_every=trace_every, output=d.get("output"), format=fmt,
                   options=dict(opts), timing=bool(d.get("timing", False)))

    def build_problem(self):
        desc = dict(self.problem)
        desc.setdefault("seed", self.seed)
        return problem_from_dict(desc)


def load_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON: {exc}") from None


def _sidecar(path) -> Path:
    return Path(str(path) + ".meta.json")


def _fitted(trace, scheme, constants, options):
    try:
        return compare_to_theorem(trace, scheme, constants, options=options)
    except (FitError, ValueError):
        return None


def execute(cfg: RunConfig, out: Optional[str] = None, fmt: Optional[str] = None) -> dict:
    """Run one config, write its trace and sidecar, return a summary dict.

    A ``max_iter`` of 0 writes a header-only trace.
    """
    problem = cfg.build_problem()
    policy = StepSizePolicy.from_dict(cfg.policy)
    res = run_scheme(cfg.scheme, problem, policy, max_iter=cfg.max_iter, tol=cfg.tol,
                     trace_every=cfg.trace_every, seed=cfg.seed, options=cfg.options,
                     timing=cfg.timing)
    trace = res.trace if cfg.max_iter > 0 else []
    dest = out or cfg.output
    fmt = fmt or cfg.format
    report = _fitted(res.trace, cfg.scheme, res.constants, cfg.options) if trace else None
    summary = {
        "scheme": cfg.scheme,
        "problem": cfg.problem,
        "seed": cfg.seed,
        "iterations": res.iterations,
        "residual": res.residual,
        "converged": res.converged,
        "constants": res.constants,
        "options": cfg.options,
        "theorem": res.theorem,
        "measured": None if report is None else report.measured,
        "pass": None if report is None else report.passed,
        "output": dest,
    }
    if dest:
        write_trace(trace, dest, fmt)
        with open(_sidecar(dest), "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True, default=float)
            fh.write("\n")
    return summary


def _summary_line(s: dict) -> str:
    rate = "n/a" if s["measured"] is None else f"{s['measured']:.6g}"
    theo = s["theorem"].get("factor", s["theorem"].get("exponent"))
    return (f"{s['scheme']}: residual={s['residual']:.3e} iterations={s['iterations']} "
            f"rate={rate} theorem={theo:.6g}")


# ---------------------------------------------------------------------------
# Subcommands

def cmd_run(args) -> int:
    if not args.config:
        raise ConfigurationError("run needs --config")
    cfg = RunConfig.from_dict(load_json(args.config), args.seed)
    s = execute(cfg, args.out, args.format)
    print(_summary_line(s))
    return EXIT_OK


def cmd_verify(args) -> int:
    config = load_json(args.config) if args.config else None
    seed = _seed(args.seed, (config or {}).get("seed"))
    results = run_suite(args.suite, seed=seed, config=config)
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{args.suite}: {len(results)} checks, {len(failed)} failed (seed {seed})")
    if args.out:
        rows = [{"suite": r.suite, "problem": r.problem, "name": r.name, "pass": r.passed,
                 "worst_margin": r.worst, "detail": r.detail} for r in results]
        with open(args.out, "w") as fh:
            json.dump(rows, fh, indent=2, default=float)
            fh.write("\n")
    return EXIT_FAIL if failed else EXIT_OK


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _entry_path(base: Optional[str], i: int, fmt: str) -> Optional[str]:
    if base is None:
        return None
    p = Path(base)
    if p.suffix in (".csv", ".jsonl"):
        return str(p.with_name(f"{p.stem}_{i:03d}{p.suffix}"))
    return str(p / f"run_{i:03d}.{fmt}")


def _sweep_one(job):
    i, entry, seed, out, fmt = job
    try:
        cfg = RunConfig.from_dict(entry, seed)
        s = execute(cfg, out, fmt)
        return i, EXIT_OK, _summary_line(s)
    except DivergenceError as exc:
        return i, EXIT_DIVERGED, f"diverged: {exc}"
    except (ConfigurationError, InputError, CapabilityError) as exc:
        return i, EXIT_CONFIG, f"config error: {exc}"
    except VosError as exc:
        return i, EXIT_FAIL, f"error: {exc}"


def cmd_sweep(args) -> int:
    if not args.config:
        raise ConfigurationError("sweep needs --config")
    raw = load_json(args.config)
    overrides = raw.get("sweep")
    if not isinstance(overrides, list) or not overrides:
        raise ConfigurationError("sweep config needs a non-empty 'sweep' list of overrides")
    base = {k: v for k, v in raw.items() if k != "sweep"}
    fmt = args.format or base.get("format", "csv")
    root = args.out or base.get("output")
    if root and not Path(root).suffix:
        Path(root).mkdir(parents=True, exist_ok=True)
    jobs = []
    for i, over in enumerate(overrides):
        if not isinstance(over, dict):
            raise ConfigurationError(f"sweep entry {i} must be an object")
        entry = _merge(base, over)
        dest = over.get("output") or _entry_path(root, i, fmt)
        jobs.append((i, entry, args.seed, dest, fmt if not over.get("format") else None))
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_one, jobs))
    else:
        results = [_sweep_one(j) for j in jobs]
    for i, code, line in sorted(results):
        print(f"[{i}] {line}")
    return max(code for _, code, _ in results)


def _report_row(path, scheme=None, constants=None, options=None) -> dict:
    try:
        trace = read_trace(path)
    except OSError as exc:
        raise InputError(f"cannot read trace {path}: {exc.strerror or exc}") from None
    meta = {}
    if _sidecar(path).exists():
        meta = load_json(_sidecar(path))
    scheme = scheme or meta.get("scheme")
    if scheme is None:
        raise ConfigurationError(f"{path}: no scheme id (pass --scheme or keep the .meta.json)")
    constants = constants or meta.get("constants")
    if not constants:
        raise ConfigurationError(f"{path}: no problem constants (pass --config or keep the .meta.json)")
    options = options if options is not None else meta.get("options", {})
    row = {"trace": str(path), "scheme": scheme, "kind": None, "measured": None,
           "theorem": None, "margin": None, "pass": None, "iterations": None,
           "gd_ratio": None}
    if trace:
        field_ = "f_gap" if trace[0].f_gap is not None and trace[0].f_gap > 0 else "lyap_primary"
        row["iterations"] = iterations_to(trace, REPORT_THRESHOLD, field_)
        rep = _fitted(trace, scheme, constants, options)
        if rep is not None:
            row.update({k: v for k, v in rep.to_json().items() if k != "worst_step"})
    return row


def cmd_report(args) -> int:
    paths = args.traces
    if not paths:
        raise ConfigurationError("report needs at least one trace path")
    schemes = args.scheme or []
    if schemes and len(schemes) not in (1, len(paths)):
        raise ConfigurationError("give one --scheme per trace (or a single one for all)")
    constants = options = None
    if args.config:
        cfg = RunConfig.from_dict(load_json(args.config), args.seed)
        from .solvers.runner import problem_constants
        constants, options = problem_constants(cfg.build_problem()), cfg.options
    rows = []
    for i, p in enumerate(paths):
        sch = schemes[i if len(schemes) > 1 else 0] if schemes else None
        rows.append(_report_row(p, sch, constants, options))
    gd = [r["iterations"] for r in rows if r["scheme"] == "gd" and r["iterations"]]
    if gd:
        for r in rows:
            if r["iterations"]:
                r["gd_ratio"] = gd[0] / r["iterations"]
    print(format_table(rows))
    payload = json.dumps(rows, indent=2, default=float)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(payload + "\n")
    else:
        print(payload)
    return EXIT_OK


def _fmt(v):
    if v is None:
        return "-"
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.6g}"
    return str(v)


def format_table(rows: Sequence[dict]) -> str:
    cols = ("scheme", "kind", "measured", "theorem", "margin", "pass", "iterations", "gd_ratio")
    cells = [[_fmt(r.get(c)) for c in cols] for r in rows]
    widths = [max(len(c), *(len(row[j]) for row in cells)) for j, c in enumerate(cols)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(cols, widths))]
    lines += ["  ".join(v.ljust(w) for v, w in zip(row, widths)) for row in cells]
    return "\n".join(lines)


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vosopt", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", metavar="PATH")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", metavar="PATH")
        sp.add_argument("--format", choices=("csv", "jsonl"), default=None)

    run = sub.add_parser("run", help="run one scheme from a JSON config")
    common(run)
    ver = sub.add_parser("verify", help="run property suites")
    common(ver)
    ver.add_argument("--suite", choices=SUITES, default="all")
    sw = sub.add_parser("sweep", help="run a list of config overrides")
    common(sw)
    sw.add_argument("--jobs", type=int, default=1)
    rep = sub.add_parser("report", help="compare traces with theorem rates")
    common(rep)
    rep.add_argument("traces", nargs="*", metavar="TRACE")
    rep.add_argument("--scheme", action="append", choices=SCHEME_IDS)
    return p


_COMMANDS = {"run": cmd_run, "verify": cmd_verify, "sweep": cmd_sweep, "report": cmd_report}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except DivergenceError as exc:
        print(f"vosopt: diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (ConfigurationError, InputError, CapabilityError) as exc:
        print(f"vosopt: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"vosopt: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except VosError as exc:
        print(f"vosopt: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
