import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vosopt.errors import ConfigurationError, FitError, InputError
from vosopt.harness import (FIELDS, TraceRecord, compare_to_theorem, fit_geometric_rate,
                            fit_power_rate, iterations_to, read_trace, write_trace)
from vosopt.problems import build_least_squares_convex, build_quadratic
from vosopt.solvers import StepSizePolicy, run_scheme


def rec(k, e, **kw):
    base = dict(k=k, lyap_primary=e, lyap_modified=None, f_gap=None, grad_norm=1.0,
                dist_to_star=None, gamma=None, epsilon=None, alpha=0.5)
    base.update(kw)
    return TraceRecord(**base)


def test_geometric_exact():
    f, worst = fit_geometric_rate(0.5 ** np.arange(40), burn_in=0)
    assert abs(f - 0.5) <= 1e-12 and abs(worst - 0.5) <= 1e-12


def test_geometric_constant():
    assert fit_geometric_rate(np.full(20, 3.0))[0] == pytest.approx(1.0, abs=1e-14)


def test_geometric_truncates_floor():
    s = np.concatenate([0.1 ** np.arange(15), [0.0, 0.0]])
    assert fit_geometric_rate(s, burn_in=2)[0] == pytest.approx(0.1, rel=1e-10)


def test_fit_errors():
    with pytest.raises(FitError):
        fit_geometric_rate([1.0, 0.5], burn_in=0)
    with pytest.raises(FitError):
        # a nonpositive value cuts the series; too little is left to fit
        fit_geometric_rate(np.r_[np.ones(4), -1.0, np.ones(12)], burn_in=0)
    with pytest.raises(FitError):
        fit_geometric_rate(np.r_[0.0, np.ones(12)], burn_in=0)
    with pytest.raises(FitError):
        fit_power_rate([1.0, np.nan] * 10)


def test_power_fits():
    k = np.arange(1, 200, dtype=float)
    assert fit_power_rate(1 / k ** 2) == pytest.approx(-2.0, abs=0.01)
    assert fit_power_rate(1 / k) == pytest.approx(-1.0, abs=0.01)


def test_aor_trace_factor():
    q = build_quadratic([1, 100], seed=0, dim=20)
    r = run_scheme("aor-vos", q, max_iter=300)
    f, _ = fit_geometric_rate([t.lyap_modified for t in r.trace])
    assert f <= 1 / (1 + math.sqrt(1 / 99)) + 0.005


def test_scaled_epc_exponent():
    p = build_least_squares_convex(m=20, n=50, seed=0)
    r = run_scheme("scaled-epc", p, max_iter=2000)
    assert fit_power_rate([t.lyap_primary for t in r.trace]) <= -1.9


def test_compare_gd_and_aor():
    q = build_quadratic([1, 100], seed=0, dim=20)
    g = run_scheme("gd", q, max_iter=300)
    rep = compare_to_theorem(g.trace, "gd", g.constants)
    assert rep.theorem == pytest.approx(99 / 101) and rep.passed
    a = run_scheme("aor-vos", q, max_iter=300)
    rep = compare_to_theorem(a.trace, "aor-vos", a.constants)
    assert rep.theorem == pytest.approx(1 / (1 + math.sqrt(1 / 99))) and rep.passed
    assert set(rep.to_json()) >= {"scheme", "measured", "theorem", "margin", "pass"}


def test_compare_homotopy():
    p = build_least_squares_convex(m=20, n=50, seed=0)
    r = run_scheme("homotopy", p)
    rep = compare_to_theorem(r.trace, "homotopy", r.constants)
    assert rep.kind == "exponent" and rep.theorem == -2.0
    assert abs(rep.measured + 2.0) <= 0.2 and rep.passed


def test_compare_catches_single_bad_step():
    consts = {"mu": 1.0, "L": 100.0, "L_F": 99.0}
    series = list((99 / 101) ** np.arange(60) * 0.99)
    series[30] = series[29] * 0.999  # one step barely contracts
    trace = [rec(k, e, alpha=2 / 101) for k, e in enumerate(series)]
    rep = compare_to_theorem(trace, "gd", consts)
    assert rep.measured <= 99 / 101 * 1.01
    assert not rep.passed


def test_compare_unknown_scheme():
    with pytest.raises(ConfigurationError):
        compare_to_theorem([rec(0, 1.0)], "nope", {})


def test_compare_needs_undecimated_trace():
    q = build_quadratic([1, 10], seed=0, dim=5)
    r = run_scheme("gd", q, max_iter=100, trace_every=5)
    with pytest.raises(FitError):
        compare_to_theorem(r.trace, "gd", r.constants)


# -- trace I/O -------------------------------------------------------------------

def test_empty_trace_header_only(tmp_path):
    p = tmp_path / "t.csv"
    write_trace([], p)
    assert p.read_text() == ",".join(FIELDS) + "\n"
    assert read_trace(p) == []


def test_one_row_round_trip_bit_exact(tmp_path):
    r = TraceRecord(3, 0.1 + 0.2, None, 1 / 3, math.pi, None, 1e-300, None, 2 ** -0.5, 17)
    p = tmp_path / "t.csv"
    write_trace([r], p)
    assert read_trace(p) == [r]
    j = tmp_path / "t.jsonl"
    write_trace([r], j, "jsonl")
    assert read_trace(j) == [r]


def test_large_round_trip(tmp_path):
    q = build_quadratic([1, 100], seed=0, dim=10)
    r = run_scheme("epc-vos", q, max_iter=9999)
    assert len(r.trace) == 10000
    p = tmp_path / "big.csv"
    write_trace(r.trace, p)
    assert read_trace(p) == r.trace


@settings(max_examples=100, deadline=None)
@given(st.floats(allow_nan=False, allow_infinity=False),
       st.floats(allow_nan=False, allow_infinity=False))
def test_csv_round_trip_property(tmp_path_factory, a, b):
    p = tmp_path_factory.mktemp("rt") / "t.csv"
    r = TraceRecord(0, a, b, None, abs(a), None, None, None, 1.0, 0)
    write_trace([r], p)
    assert read_trace(p) == [r]


def test_write_error_names_path(tmp_path):
    bad = tmp_path / "missing" / "t.csv"
    with pytest.raises(OSError, match="missing"):
        write_trace([], bad)


def test_read_rejects_bad_header(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(InputError):
        read_trace(p)
    p.write_text(",".join(FIELDS) + "\n1,2\n")
    with pytest.raises(InputError):
        read_trace(p)


def test_unknown_format(tmp_path):
    with pytest.raises(ConfigurationError):
        write_trace([], tmp_path / "t.txt", "xml")


def test_iterations_to():
    tr = [rec(k, 10.0 ** -k) for k in range(12)]
    assert iterations_to(tr, 1e-8) == 8
    assert iterations_to(tr, 1e-20) is None


def test_scaled_ppa_trace_passes():
    p = build_least_squares_convex(m=20, n=50, seed=0)
    r = run_scheme("scaled-ppa", p, StepSizePolicy("fixed", 1.0), max_iter=200)
    assert compare_to_theorem(r.trace, "scaled-ppa", r.constants).passed
