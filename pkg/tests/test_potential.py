import copy
import math

import mpmath
import numpy as np
import pytest

from refpot import numerics as nm
from refpot import potential as pt

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib


@pytest.fixture(scope="module")
def cfg():
    with open(pt.bundled_config("xe2"), "rb") as fh:
        return tomllib.load(fh)


def test_reference_model_structure(xe2):
    assert xe2.n_components == 3
    assert xe2.boundaries == (4.0, 6.05149)
    wall = xe2.components[0]
    assert wall.pseudo
    assert xe2.c_const == pytest.approx(4 * wall.d / wall.alpha ** 2, rel=1e-15)
    assert xe2.c_const == pytest.approx(0.03184, rel=1e-6)
    outer = xe2.components[-1]
    assert outer.v + outer.d == 0.0


def test_joins_are_smooth(xe2):
    for dv, dd, v, d in xe2.join_residuals():
        assert abs(dv) <= 1e-12 * max(1.0, v)
        assert abs(dd) <= 1e-12 * max(1.0, d)
    # re-solved parameters stay close to the printed ones
    assert len(xe2.join_report) == 4
    for _, _, printed, solved in xe2.join_report:
        assert abs(printed - solved) <= 1e-5 * max(1.0, abs(printed))


def test_value_at_origin(xe2):
    w = xe2.components[0]
    exact = w.v + w.d * (math.exp(w.alpha * w.r0) - 1) ** 2
    assert xe2.v_zero == pytest.approx(exact, rel=1e-15)
    assert xe2.v_zero == pytest.approx(1.1726172638e7, rel=1e-9)


def _mp_value(c, r):
    y = mpmath.exp(-mpmath.mpf(c.alpha) * (r - mpmath.mpf(c.r0)))
    return mpmath.mpf(c.v) + mpmath.mpf(c.d) * (y - 1) ** 2


@pytest.mark.parametrize("r", [0.0, 2.5, 4.5, 5.0, 9.0, 30.0])
def test_derivatives_against_mpmath(xe2, r):
    c = xe2.components[int(xe2.segment(r))]
    with mpmath.workdps(30):
        for order in (0, 1, 2, 3):
            ref = float(mpmath.diff(lambda x: _mp_value(c, x), mpmath.mpf(r), order))
            assert xe2.eval(r, order) == pytest.approx(ref, rel=1e-12, abs=1e-14)
    with pytest.raises(ValueError):
        xe2.eval(r, 4)


def test_packed_evaluator(xe2):
    r = np.linspace(0.0, 40.0, 101)
    p = xe2.packed()
    assert np.allclose([pt.packed_value(x, p) for x in r], xe2(r), rtol=1e-15, atol=0)
    assert pt.packed_value(3.0, pt.free_potential().packed()) == 0.0


def test_moments_against_quadrature(xe2):
    m = pt.moments(xe2)
    tol = nm.Tolerance(1e-30, 1e-13)
    bp = list(xe2.boundaries) + [20.0]
    quad = lambda f: nm.adaptive_quadrature(f, 0.0, math.inf, tol=tol, breakpoints=bp)
    assert m.W == pytest.approx(quad(xe2), rel=1e-11)
    assert m.U == pytest.approx(quad(lambda r: xe2(r) ** 2), rel=1e-11)
    assert m.T3 == pytest.approx(quad(lambda r: xe2(r) ** 3), rel=1e-11)
    assert m.DW == pytest.approx(quad(lambda r: xe2.eval(r, 1) ** 2), rel=1e-11)
    assert (m.v0, m.v1, m.v2) == (xe2.eval(0.0), xe2.eval(0.0, 1), xe2.eval(0.0, 2))


def test_free_potential(free):
    assert free.n_components == 0
    assert free(np.array([0.0, 1.0, 1e3])).tolist() == [0.0, 0.0, 0.0]
    assert pt.moments(free) == pt.Moments(*([0.0] * 8))


def test_fingerprint(xe2, cfg):
    again = pt.potential_from_dict(copy.deepcopy(cfg))
    assert again.fingerprint() == xe2.fingerprint()
    other = copy.deepcopy(cfg)
    other["components"][1]["d"] = 21.63
    assert pt.potential_from_dict(other).fingerprint() != xe2.fingerprint()


def test_isolated_component(xe2):
    for j, c in enumerate(xe2.components):
        lone = pt.isolated_component(xe2, j)
        assert lone(1e4) == pytest.approx(0.0, abs=1e-15)
        r = np.linspace(0.5, 12.0, 7)
        assert np.allclose(lone(r) - (c.value(r) - (c.v + c.d)), 0.0, atol=1e-9)


@pytest.mark.parametrize("free_pair,rule", [(("v", "r0"), None), (("v", "d"), None),
                                            (("v", "r0"), "-v")])
def test_smooth_join_branches(free_pair, rule):
    left = pt.MorseComponent(v=-20.0, d=25.0, alpha=1.5, r0=4.4)
    X = 5.5
    anchor = pt.MorseComponent(v=0.01, d=-0.01 if rule else 100.0, alpha=0.4, r0=12.0, k=1)
    new = pt.smooth_join(anchor, X, float(left.value(X)), float(left.value(X, 1)), free_pair, rule)
    assert float(new.value(X)) == pytest.approx(float(left.value(X)), rel=1e-13)
    assert float(new.value(X, 1)) == pytest.approx(float(left.value(X, 1)), rel=1e-12)
    if rule:
        assert new.v + new.d == 0.0


def test_smooth_join_failures():
    anchor = pt.MorseComponent(v=0.0, d=1.0, alpha=1.0, r0=0.0)
    with pytest.raises(pt.JoinError):
        pt.smooth_join(anchor, 1.0, 0.0, 5.0, ("v", "r0"))     # disc < 0
    with pytest.raises(ValueError):
        pt.smooth_join(anchor, 1.0, 0.0, 1.0, ("alpha", "r0"))


def test_config_errors(cfg, tmp_path):
    # C is derived from the wall unless given, so the clash needs an explicit C
    bad = copy.deepcopy(cfg)
    bad["c_const"] = 0.0318
    with pytest.raises(pt.ConfigError, match="pseudo-Morse"):
        pt.potential_from_dict(bad)

    bad = copy.deepcopy(cfg)
    bad["components"][2]["r0"] = 20.0
    with pytest.raises(pt.ConfigError, match="printed"):
        pt.potential_from_dict(bad)

    bad = copy.deepcopy(cfg)
    del bad["components"][1]["d"]
    with pytest.raises(pt.ConfigError, match="missing d"):
        pt.potential_from_dict(bad)

    bad = copy.deepcopy(cfg)
    bad["units"]["energy"] = "eV"
    with pytest.raises(pt.ConfigError):
        pt.potential_from_dict(bad)

    bad = copy.deepcopy(cfg)
    bad["components"][1]["kind"] = "lennard-jones"
    with pytest.raises(pt.ConfigError):
        pt.potential_from_dict(bad)

    bad = copy.deepcopy(cfg)
    bad["boundaries"] = [4.0]
    with pytest.raises(pt.ConfigError):
        pt.potential_from_dict(bad)

    bad = copy.deepcopy(cfg)
    bad["components"][1]["alpha"] = "1.5"
    with pytest.raises(pt.ConfigError):
        pt.potential_from_dict(bad)

    path = tmp_path / "broken.cfg"
    path.write_text("boundaries = [4.0,\n")
    with pytest.raises(pt.ConfigError):
        pt.load_config(path)
    with pytest.raises(FileNotFoundError):
        pt.bundled_config("nonexistent")


def test_direct_construction_checks():
    well = pt.MorseComponent(v=-1.0, d=1.0, alpha=1.0, r0=2.0)
    with pytest.raises(pt.ConfigError, match="vanish"):
        pt.ReferencePotential((pt.MorseComponent(v=-1.0, d=0.5, alpha=1.0, r0=2.0),), (), 1.0)
    with pytest.raises(pt.ConfigError):
        pt.ReferencePotential((well,), (), -1.0)
    with pytest.raises(pt.ConfigError):
        pt.ReferencePotential((well, well), (), 1.0)
    kinked = pt.MorseComponent(v=-3.0, d=0.0, alpha=1.0, r0=0.0)
    with pytest.raises(pt.ConfigError, match="residual"):
        pt.ReferencePotential((kinked, well), (1.0,), 1.0)
    with pytest.raises(pt.ConfigError):
        pt.MorseComponent(v=0.0, d=1.0, alpha=0.0, r0=0.0)
    with pytest.raises(pt.ConfigError):
        pt.MorseComponent(v=math.nan, d=1.0, alpha=1.0, r0=0.0)
