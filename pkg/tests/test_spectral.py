import math

import mpmath
import numpy as np
import pytest

from refpot import boundstates as bs
from refpot import jost as js
from refpot import numerics as nm
from refpot import phaseshift as ps
from refpot import spectral as sp

C = 0.031840000005578906


def test_free_spectral_density():
    E = np.array([0.0, 1.0, 4.0])
    assert np.allclose(sp.spectral_density(E), np.sqrt(E) / math.pi, rtol=1e-15)
    assert np.all(sp.dsigma_density(E) == 0.0)
    with pytest.raises(ValueError):
        sp.spectral_density(-1.0)
    with pytest.raises(ValueError):
        sp.spectral_density(np.array([-1.0, 1.0]))


def test_spectral_density_with_modulus(spectrum):
    E, lm = np.array([2.0, 3.0]), np.array([0.1, -0.2])
    rho = sp.spectral_density(E, lm)
    assert np.allclose(rho, np.sqrt(E) / math.pi / np.exp(2 * lm), rtol=1e-14)
    assert np.allclose(sp.dsigma_density(E, lm), rho - np.sqrt(E) / math.pi, rtol=1e-13)
    weights = sp.spectral_density(-1.0, spectrum=spectrum)
    assert len(weights) == 24 and weights[0][0] == spectrum.states[0].energy


def test_g_series_exponentiation():
    a = {2: 0.3, 3: 7.0, 4: -0.05, 6: 0.01}
    b = sp.g_series_coeffs(a, p_max=6)
    assert b[2] == pytest.approx(-2 * 0.3, rel=1e-15)
    assert b[4] == pytest.approx(-2 * -0.05 + 2 * 0.3 ** 2, rel=1e-14)
    k = 9.0
    S = sum(v * k ** -n for n, v in a.items() if n % 2 == 0)
    g = sum(v * k ** -p for p, v in b.items())
    assert g == pytest.approx(math.expm1(-2 * S), rel=1e-12)


@pytest.fixture(scope="module")
def synthetic():
    # g = -1 below k = 1, -1/k^2 above
    t, _ = nm.gauss_legendre(16)
    edges = np.linspace(1.0, 5.0, 9)
    nodes = np.array([0.5 * (a + b) + 0.5 * (b - a) * t for a, b in zip(edges[:-1], edges[1:])])
    return sp.GTransform(1.0, edges, -nodes ** -2.0, 16, {2: -1.0}, 5.0)


@pytest.mark.parametrize("omega", [0.0, 0.3, 2.0, 11.5])
def test_synthetic_transform(synthetic, omega):
    with mpmath.workdps(30):
        f = lambda k: mpmath.cos(omega * k) / k ** 2
        if omega == 0.0:
            ref = -1.0 - 1.0
        else:
            tail = mpmath.quadosc(f, [1, mpmath.inf], omega=omega)
            ref = float(-mpmath.sin(omega) / omega - tail)
    assert synthetic(omega) == pytest.approx(ref, abs=1e-10)
    assert synthetic(-omega) == synthetic(omega)


def test_synthetic_g_interpolation(synthetic):
    k = np.array([0.5, 1.0, 1.37, 2.9, 4.99, 5.0, 40.0])
    assert np.allclose(synthetic.g(k), np.where(k <= 1, -1.0, -k ** -2.0), rtol=1e-12, atol=0)


def test_reference_transform(xe2, transform, table, spectrum):
    k = np.array([0.9 * transform.k_sat, 2.0, 137.0, 5000.0, 60000.0, 2e5])
    g_ref = js.g_function(C * k[:-1] ** 2, table, spectrum)
    g_got = transform.g(k)
    assert np.allclose(g_got[:-1], g_ref, rtol=1e-7, atol=1e-12)
    assert g_got[-1] == pytest.approx(float(js.g_function(C * k[-1] ** 2, pot=xe2,
                                                            route="asymptotic")), rel=1e-3)
    assert 0.0 < transform.k_sat < math.sqrt(xe2.v_zero / C)
    with pytest.raises(ValueError):
        sp.g_transform(table, spectrum, xe2, k_cut=1e4)


def test_free_kernel_is_zero(free):
    T = sp.g_transform(None, None, free)
    grid = sp.kernel_matrix(np.linspace(0.5, 10.0, 3), T, bs.BoundSpectrum(()))
    assert grid.G.shape == (3, 3) and np.all(grid.G == 0.0)


def test_single_bound_state_closed_form():
    g, cn = 1.3, 0.7
    one = bs.BoundSpectrum((bs.BoundState(0, -C * g * g, g, math.log(cn)),))
    r = np.linspace(0.5, 10.0, 7)
    G = sp.kernel_matrix(r, None, one).G
    exact = cn / (4 * g * g) * np.outer(np.sinh(g * r), np.sinh(g * r))
    assert np.max(np.abs(G / exact - 1)) <= 1e-14


def test_bound_kernel_log_branch():
    # sinh overflows and C_n underflows: the term comes from logs
    g, log_c = 80.0, -1500.0
    state = bs.BoundState(0, -C * g * g, g, log_c)
    got = sp.bound_kernel(9.0, 9.5, [state])
    with mpmath.workdps(30):
        ref = mpmath.exp(log_c) / (4 * g * g) * mpmath.sinh(g * 9.0) * mpmath.sinh(g * 9.5)
    assert got == pytest.approx(float(ref), rel=1e-12)
    assert sp.bound_kernel(0.0, 1.0, [state]) == 0.0


def test_kernel_symmetry_and_cut(transform, transform_2ka, spectrum):
    g1 = sp.gl_kernel(4.0, 4.5, transform, spectrum)
    assert sp.gl_kernel(4.5, 4.0, transform, spectrum) == pytest.approx(g1, rel=1e-10)
    g2 = sp.gl_kernel(4.0, 4.5, transform_2ka, spectrum)
    assert abs(g2 / g1 - 1) <= 1e-6


def test_export_round_trip(transform, spectrum, tmp_path):
    r = np.linspace(3.5, 5.0, 4)
    grid = sp.kernel_matrix(r, transform, spectrum, {"label": "test"})
    assert grid.asymmetry == 0.0
    path = tmp_path / "g.txt"
    sp.export_kernel(grid, path)
    back = sp.read_kernel(path)
    assert np.allclose(back.G, grid.G, rtol=1e-11) and np.allclose(back.r, r)
    assert back.meta["label"] == "test" and back.meta["n"] == 4
    assert back.meta["n_bound"] == 24
    again = tmp_path / "again.txt"
    sp.export_kernel(sp.kernel_matrix(r, transform, spectrum, {"label": "test"}), again)
    assert again.read_bytes() == path.read_bytes()


def test_export_empty_and_free(free, tmp_path):
    empty = sp.kernel_matrix(np.zeros(0))
    path = tmp_path / "empty.txt"
    sp.export_kernel(empty, path)
    assert len(path.read_text().splitlines()) == 1
    assert sp.read_kernel(path).G.shape == (0, 0)
    T = sp.g_transform(None, None, free)
    sp.export_kernel(sp.kernel_matrix(np.linspace(0.5, 10.0, 3), T), path)
    assert np.all(sp.read_kernel(path).G == 0.0)


def test_parallel_kernel_identical(transform, spectrum, monkeypatch):
    r = np.linspace(3.8, 4.6, 3)
    serial = sp.kernel_matrix(r, transform, spectrum).G
    monkeypatch.setenv("REFPOT_THREADS", "2")
    assert np.array_equal(sp.kernel_matrix(r, transform, spectrum).G, serial)
