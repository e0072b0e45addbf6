"""Rate fitting, theorem-versus-measured comparison and trace persistence."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, fields
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from .errors import ConfigurationError, FitError, InputError

FIELDS = ("k", "lyap_primary", "lyap_modified", "f_gap", "grad_norm", "dist_to_star",
          "gamma", "epsilon", "alpha", "wall_ns")
_INT_FIELDS = ("k", "wall_ns")
_OPTIONAL = ("lyap_modified", "f_gap", "dist_to_star", "gamma", "epsilon")

FACTOR_RTOL = 0.01
EXPONENT_RTOL = 0.10
FLOOR = 100 * np.finfo(float).eps


@dataclass(frozen=True)
class TraceRecord:
    """One logged iterate. Optional fields are ``None`` when not applicable."""

    k: int
    lyap_primary: float
    lyap_modified: Optional[float]
    f_gap: Optional[float]
    grad_norm: float
    dist_to_star: Optional[float]
    gamma: Optional[float]
    epsilon: Optional[float]
    alpha: float
    wall_ns: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class RateReport:
    """Measured versus theorem rate for one trace.

    ``kind`` is ``"factor"`` (geometric contraction per step) or
    ``"exponent"`` (power law). ``worst_step`` is the largest single-step
    ratio (factors only); it must pass as well as the fit.
    """

    scheme: str
    kind: str
    measured: float
    theorem: float
    margin: float
    passed: bool
    worst_step: Optional[float] = None
    tolerance: float = FACTOR_RTOL

    def to_json(self) -> dict:
        return {"scheme": self.scheme, "measured": self.measured, "theorem": self.theorem,
                "margin": self.margin, "pass": self.passed, "kind": self.kind,
                "worst_step": self.worst_step}


# ---------------------------------------------------------------------------
# Fits

def _truncate(series, burn_in):
    s = np.asarray(series, dtype=float)
    if s.ndim != 1:
        raise FitError("series must be one-dimensional")
    if len(s) < burn_in + 10:
        raise FitError(f"need at least burn_in + 10 = {burn_in + 10} values, got {len(s)}")
    if not np.all(np.isfinite(s)):
        raise FitError("series has non-finite values")
    if s[0] > 0:
        below = np.nonzero(s <= FLOOR * s[0])[0]
        if below.size:
            s = s[:below[0]]
    if len(s) < burn_in + 10:
        raise FitError("series reaches the floating-point floor too early to fit")
    if np.any(s[burn_in:] <= 0):
        raise FitError("nonpositive values after burn-in; truncate at 1e2*eps*E0 first")
    return s


def fit_geometric_rate(series: Sequence[float], burn_in: int = 5):
    """Least-squares contraction factor of `series` and its worst single-step ratio.

    Values at or below ``100 * eps * series[0]`` are cut off before fitting.
    Returns ``(factor, max_step_ratio)``.

    Raises
    ------
    FitError
        Too few points, non-finite or nonpositive values.
    """
    s = _truncate(series, burn_in)
    t = s[burn_in:]
    k = np.arange(t.size, dtype=float)
    slope = np.polyfit(k, np.log(t), 1)[0]
    ratios = t[1:] / t[:-1]
    return float(math.exp(slope)), float(np.max(ratios))


def fit_power_rate(series: Sequence[float], burn_in: int = 5, ks: Optional[Sequence] = None) -> float:
    """Slope of ``log(series)`` against ``log(k)``.

    `ks` gives the abscissae (default ``1, 2, ...``); they must be positive
    after burn-in.
    """
    s = _truncate(series, burn_in)
    k = np.arange(1, len(series) + 1, dtype=float) if ks is None else np.asarray(ks, float)
    k = k[burn_in:len(s)]
    if np.any(k <= 0):
        raise FitError("abscissae must be positive after burn-in")
    return float(np.polyfit(np.log(k), np.log(s[burn_in:]), 1)[0])


# ---------------------------------------------------------------------------
# Theorem comparison

def lyapunov_series(trace: Sequence[TraceRecord], scheme: str) -> np.ndarray:
    """The series the scheme's theorem speaks about (``E^alpha`` where stated)."""
    from .solvers.runner import MODIFIED
    use_mod = scheme in MODIFIED and trace and trace[0].lyap_modified is not None
    return np.array([r.lyap_modified if use_mod else r.lyap_primary for r in trace], float)


def compare_to_theorem(trace: Sequence[TraceRecord], scheme: str,
                       constants: Dict[str, float], burn_in: int = 5,
                       options: Optional[dict] = None) -> RateReport:
    """Fit the trace and compare with the rate of the scheme's theorem.

    Factors pass when both the fitted factor and the worst single-step ratio
    are at most ``theorem * (1 + 1%)``; power-law exponents pass when at most
    ``theorem + 10% |theorem|`` (``homotopy`` fits against the cumulative
    iteration count in ``k``).
    The perturbed scheme is checked against ``factor^k E0 + eps R^2`` with
    ``R`` the largest logged distance to the solution.
    """
    from .solvers.runner import SCHEME_IDS, theorem_rate
    if scheme not in SCHEME_IDS:
        raise ConfigurationError(f"unknown scheme id {scheme!r}")
    opts = dict(options or {})
    if scheme == "perturbed-epc" and "epsilon" not in opts and trace:
        opts["epsilon"] = trace[0].epsilon
    if "alpha" not in opts and scheme in ("ppa", "scaled-ppa") and trace:
        opts["alpha"] = trace[-1].alpha
    theo = theorem_rate(scheme, constants, opts)
    series = lyapunov_series(trace, scheme)
    ks = np.array([r.k for r in trace], float)

    if "exponent" in theo:
        if scheme == "homotopy":
            measured = fit_power_rate(series[1:], burn_in=min(burn_in, 2), ks=ks[1:])
        else:
            measured = fit_power_rate(series, burn_in, ks=ks + 1)
        target = theo["exponent"]
        # decaying at least as fast as the theorem's power passes
        limit = target + EXPONENT_RTOL * abs(target)
        return RateReport(scheme, "exponent", measured, target, limit - measured,
                          measured <= limit, None, EXPONENT_RTOL)

    target = theo["factor"]
    if scheme == "perturbed-epc":
        eps = opts["epsilon"]
        R = max(r.dist_to_star for r in trace)
        bound = series[0] * target ** (ks - ks[0]) + eps * R * R
        ok_bound = bool(np.all(series <= bound * (1 + 1e-10)))
        # effective factor of the excess over the noise floor
        excess = np.maximum(series[1:] - eps * R * R, 0.0)
        n = ks[1:] - ks[0]
        eff = (excess / series[0]) ** (1.0 / n) if series[0] > 0 and n.size else np.zeros(0)
        measured = float(np.max(eff)) if eff.size else 0.0
        margin = target * (1 + FACTOR_RTOL) - measured
        return RateReport(scheme, "factor", measured, target, margin,
                          ok_bound and margin >= 0, measured)
    steps = np.diff(ks)
    if np.any(steps != 1):
        raise FitError("factor comparison needs an undecimated trace (trace_every = 1)")
    measured, worst = fit_geometric_rate(series, burn_in)
    # per-step check over the whole trace, including burn-in, down to the floor
    s = series
    if series[0] > 0:
        below = np.nonzero(series <= FLOOR * series[0])[0]
        s = series[:below[0]] if below.size else series
    if len(s) > 1:
        worst = max(worst, float(np.max(s[1:] / s[:-1])))
    limit = target * (1 + FACTOR_RTOL)
    margin = limit - max(measured, worst)
    return RateReport(scheme, "factor", measured, target, margin,
                      measured <= limit and worst <= limit, worst)


# ---------------------------------------------------------------------------
# Trace I/O

def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return format(float(v), ".17g")


def write_trace(trace: Iterable[TraceRecord], path, fmt: str = "csv") -> None:
    """Write records as CSV (fixed header) or JSON lines with the same keys.

    Raises
    ------
    OSError
        The destination cannot be written; the message names the path.
    """
    if fmt not in ("csv", "jsonl"):
        raise ConfigurationError(f"unknown trace format {fmt!r}")
    try:
        with open(path, "w", newline="") as fh:
            if fmt == "csv":
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(FIELDS)
                for r in trace:
                    w.writerow([_cell(getattr(r, k)) for k in FIELDS])
            else:
                for r in trace:
                    row = {k: getattr(r, k) for k in FIELDS}
                    fh.write(json.dumps(row, allow_nan=False) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write trace to {path}: {exc.strerror or exc}") from exc


def _parse(key, v):
    if v is None or v == "":
        if key in _OPTIONAL:
            return None
        raise InputError(f"missing value for required field {key!r}")
    return int(v) if key in _INT_FIELDS else float(v)


def read_trace(path, fmt: Optional[str] = None) -> List[TraceRecord]:
    """Read a trace written by :func:`write_trace`; the format defaults to the suffix."""
    fmt = fmt or ("jsonl" if str(path).endswith(".jsonl") else "csv")
    out: List[TraceRecord] = []
    try:
        with open(path, newline="") as fh:
            if fmt == "csv":
                rd = csv.reader(fh)
                header = next(rd, None)
                if header is None or tuple(header) != FIELDS:
                    raise InputError(f"{path}: unexpected trace header {header}")
                for row in rd:
                    if len(row) != len(FIELDS):
                        raise InputError(f"{path}: malformed row {row}")
                    out.append(TraceRecord(**{k: _parse(k, v) for k, v in zip(FIELDS, row)}))
            else:
                for line in fh:
                    if line.strip():
                        d = json.loads(line)
                        out.append(TraceRecord(**{k: _parse(k, d.get(k)) for k in FIELDS}))
    except (ValueError, TypeError, KeyError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"{path}: cannot parse trace: {exc}") from exc
    return out


def iterations_to(trace: Sequence[TraceRecord], threshold: float, field: str = "lyap_primary",
                  relative: bool = True) -> Optional[int]:
    """First ``k`` whose `field` drops to ``threshold`` (times the first value if relative)."""
    if not trace:
        return None
    ref = getattr(trace[0], field) if relative else 1.0
    for r in trace:
        v = getattr(r, field)
        if v is not None and v <= threshold * ref:
            return r.k
    return None
