import contextlib
import time
from fractions import Fraction

import pytest

from castleworks import castles as C
from castleworks.groups import FiniteGroup
from castleworks.words import PeriodicWord, amplify, period_doubling, product_word

DIHEDRAL_K = ((1, 0), (-1, 0), (0, 1))
PRODUCT_K = (((1, 0), 0), ((-1, 0), 0), ((0, 1), 0), ((0, 0), 1))
EPS_LADDER = (Fraction(1, 2), Fraction(1, 4), Fraction(1, 8))


def complete_pd():
    # hole digits 1,0,1,0,... leave no integer unassigned
    return period_doubling(fill=None, holes=(1, 0))


@pytest.fixture(scope="session")
def w_hat():
    return amplify(complete_pd())


@pytest.fixture(scope="session")
def x0():
    return product_word(amplify(complete_pd()), FiniteGroup.cyclic(2))


@pytest.fixture(scope="session")
def dihedral_certs(w_hat):
    return {eps: C.af_in_measure_certificate(w_hat, DIHEDRAL_K, eps, window=1024, depth=256)
            for eps in EPS_LADDER}


@pytest.fixture(scope="session")
def product_certs(x0):
    return {eps: C.af_in_measure_certificate(x0, PRODUCT_K, eps, window=1024, depth=256)
            for eps in EPS_LADDER}


@pytest.fixture(scope="session")
def p12():
    return PeriodicWord("001011010111")


@pytest.fixture
def criterion(request):
    """Record one pass/fail line per acceptance criterion."""
    lines = request.config.__dict__.setdefault("_acceptance", [])

    @contextlib.contextmanager
    def run(number, title):
        t0 = time.perf_counter()
        info = {}
        try:
            yield info
        except BaseException as exc:
            lines.append((number, "FAIL", title, f"{type(exc).__name__}: {str(exc)[:200]}", time.perf_counter() - t0))
            raise
        lines.append((number, "PASS", title, info.get("detail", ""), time.perf_counter() - t0))
        print(f"criterion {number}: PASS {title} {info.get('detail', '')}")
    return run


def pytest_terminal_summary(terminalreporter, config):
    lines = config.__dict__.get("_acceptance")
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for number, status, title, detail, secs in sorted(lines):
        terminalreporter.write_line(f"criterion {number:>2}: {status} {title} ({secs:.1f} s) {detail}".rstrip())
