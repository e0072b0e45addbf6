import re

import numpy as np
import pytest

from vosopt.problems import build_least_squares_convex, build_quadratic

_ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion."""

    def record(ac, passed, detail=""):
        # a criterion checked by several tests passes only if all of them do
        if ac in _ACCEPTANCE:
            prev, text = _ACCEPTANCE[ac]
            _ACCEPTANCE[ac] = (prev and bool(passed), f"{text} | {detail}")
        else:
            _ACCEPTANCE[ac] = (bool(passed), detail)
        print(f"{'PASS' if passed else 'FAIL'} {ac} {detail}")

    return record


def _order(ac):
    m = re.search(r"\d+", ac)
    return int(m.group()) if m else 0


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for ac in sorted(_ACCEPTANCE, key=_order):
        passed, detail = _ACCEPTANCE[ac]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} {ac} {detail}")


@pytest.fixture(scope="session")
def quad_1_100():
    return build_quadratic([1, 100], seed=42, dim=20)


@pytest.fixture(scope="session")
def quad_1_10():
    return build_quadratic([1, 10], seed=3, dim=10)


@pytest.fixture(scope="session")
def least_squares():
    return build_least_squares_convex(m=20, n=50, seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
