import math

import numpy as np
import pytest

from refpot import boundstates as bs
from refpot import jost as js
from refpot import phaseshift as ps
from refpot import potential as pt
from refpot import spectral as sp


@pytest.fixture(scope="session")
def xe2():
    return pt.load_config(pt.bundled_config("xe2"))


@pytest.fixture(scope="session")
def free():
    return pt.load_config(pt.bundled_config("free"))


@pytest.fixture(scope="session")
def spectrum_timed(xe2):
    import time
    t = time.perf_counter()
    spec = bs.find_eigenvalues(xe2)
    elapsed = time.perf_counter() - t
    return bs.norming_constants(xe2, spec), elapsed


@pytest.fixture(scope="session")
def spectrum(spectrum_timed):
    return spectrum_timed[0]


@pytest.fixture(scope="session")
def curve(xe2, spectrum):
    return ps.build_curve(xe2, 1e-4, 1e9, 400, n_bound=len(spectrum))


@pytest.fixture(scope="session")
def table(xe2, curve):
    return js.phase_table(xe2, curve, k_a=js.K_A, extra=(math.sqrt(2) * js.K_A,))


@pytest.fixture(scope="session")
def jcurve(xe2, table, spectrum):
    return js.jost_curve(table, spectrum, xe2, E_min=xe2.c_const * (2 * table.k_lo) ** 2,
                         E_max=xe2.c_const * 1e18, n_points=400)


@pytest.fixture(scope="session")
def transform(xe2, table, spectrum):
    return sp.g_transform(table, spectrum, xe2, k_cut=js.K_A)


@pytest.fixture(scope="session")
def transform_2ka(xe2, table, spectrum):
    return sp.g_transform(table, spectrum, xe2, k_cut=2 * js.K_A)


def square_well(depth, width, c_const=1.0):
    """-depth on [0, width], zero outside (two Morse pieces with d = 0)."""
    inner = pt.MorseComponent(v=-depth, d=0.0, alpha=1.0, r0=0.0, k=0)
    outer = pt.MorseComponent(v=0.0, d=0.0, alpha=1.0, r0=0.0, k=1)
    return pt.ReferencePotential((inner, outer), (width,), c_const, require_smooth=False)


@pytest.fixture
def well_factory():
    return square_well


ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """``criterion(number, name, passed, **values)`` records one acceptance line."""
    table = request.config.stash.setdefault(ACCEPTANCE, {})

    def record(number, name, passed, **values):
        table[number] = (name, bool(passed), values)
        return bool(passed)
    return record


def pytest_terminal_summary(terminalreporter, config):
    table = config.stash.get(ACCEPTANCE, {})
    if not table:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(table):
        name, passed, values = table[number]
        detail = ", ".join(f"{k}={v:.3g}" if isinstance(v, float) else f"{k}={v}"
                           for k, v in values.items())
        terminalreporter.write_line(
            f"[{'PASS' if passed else 'FAIL'}] {number:2d} {name}: {detail}")
