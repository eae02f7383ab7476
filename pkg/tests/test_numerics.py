import math

import mpmath
import numba
import numpy as np
import pytest

from refpot import numerics as nm


def test_tolerance_validation():
    with pytest.raises(ValueError):
        nm.Tolerance(abs_tol=0.0)
    with pytest.raises(ValueError):
        nm.Tolerance(max_evals=0)
    t = nm.Tolerance().replace(rel_tol=1e-6)
    assert t.rel_tol == 1e-6 and t.abs_tol == nm.DEFAULT_TOL.abs_tol


@numba.njit
def _decay_rhs(r, y, p, out):
    out[0] = -p[0] * r * y[0]


def test_ode_jitted_and_python_rhs_agree_with_exact():
    exact = math.exp(-1.5 * 4.0)
    res = nm.integrate_ode(_decay_rhs, [1.0], 0.0, 2.0, params=np.array([3.0]),
                           tol=nm.Tolerance(1e-14, 1e-13))
    assert res.y[0] == pytest.approx(exact, rel=1e-11)
    res_py = nm.integrate_ode(lambda r, y: -3.0 * r * y, [1.0], 0.0, 2.0,
                              tol=nm.Tolerance(1e-14, 1e-13))
    assert res_py.y[0] == pytest.approx(exact, rel=1e-11)


def test_ode_backward_and_dense_points():
    r_eval = np.linspace(2.0, 0.0, 9)
    res = nm.integrate_ode(lambda r, y: np.array([y[1], -y[0]]), [math.sin(2.0), math.cos(2.0)],
                           2.0, 0.0, tol=nm.Tolerance(1e-14, 1e-13), r_eval=r_eval)
    assert np.allclose(res.y_eval[:, 0], np.sin(r_eval), atol=1e-12)


def test_ode_order_of_convergence():
    # fixed steps: an error budget that never rejects a step
    loose = nm.Tolerance(1e6, 1e6)
    errs = []
    for h in (0.2, 0.1):
        res = nm.integrate_ode(lambda r, y: -y * y, [1.0], 0.0, 4.0, tol=loose, h0=h, max_step=h)
        errs.append(abs(res.y[0] - 0.2))
    order = math.log2(errs[0] / errs[1])
    assert order > 7.5


def test_ode_budget_exhausted():
    with pytest.raises(nm.IntegrationError):
        nm.integrate_ode(lambda r, y: -y, [1.0], 0.0, 100.0,
                         tol=nm.Tolerance(1e-14, 1e-14, max_evals=20))


def test_gauss_legendre_exact_for_polynomials():
    c = np.arange(1.0, 21.0)
    f = lambda x: np.polynomial.polynomial.polyval(x, c)       # degree 19
    exact = sum(ci * (2.0 ** (i + 1) - (-1.0) ** (i + 1)) / (i + 1) for i, ci in enumerate(c))
    assert nm.fixed_quadrature(f, [-1.0, 2.0], n=10) == pytest.approx(exact, rel=1e-13)


def test_composite_gauss_order():
    errs = []
    for m in (4, 8):
        edges = np.linspace(0.0, 3.0, m + 1)
        errs.append(abs(nm.fixed_quadrature(np.exp, edges, n=2) - (math.e ** 3 - 1)))
    assert math.log2(errs[0] / errs[1]) == pytest.approx(4.0, abs=0.15)


def test_adaptive_quadrature():
    assert nm.adaptive_quadrature(lambda x: np.exp(-x), 0.0, math.inf) == pytest.approx(1.0, abs=1e-12)
    assert nm.adaptive_quadrature(np.sin, 0.0, math.pi) == pytest.approx(2.0, abs=1e-12)
    kink = nm.adaptive_quadrature(np.abs, -1.0, 2.0, breakpoints=[0.0])
    assert kink == pytest.approx(2.5, abs=1e-13)
    assert nm.adaptive_quadrature(np.sin, math.pi, 0.0) == pytest.approx(-2.0, abs=1e-12)


def test_principal_value():
    pv = nm.principal_value(lambda x: x, 1.0, 0.0, 3.0)
    assert pv == pytest.approx(3.0 + math.log(2.0), abs=1e-12)
    with pytest.raises(ValueError):
        nm.principal_value(lambda x: x, 3.0, 0.0, 3.0)


@pytest.mark.parametrize("omega,k,p", [(0.1, 2.0, 2), (1.0, 30.0, 4), (2.0, 30.0, 10),
                                       (3.7, 75000.0, 2), (3.7, 75000.0, 6),
                                       (0.01, 75000.0, 12), (12.0, 18000.0, 8)])
def test_cos_power_tail_against_incomplete_gamma(omega, k, p):
    with mpmath.workdps(60):
        w, kk = mpmath.mpf(omega), mpmath.mpf(k)
        ref = mpmath.re(mpmath.power(1j, 1 - p) * mpmath.gammainc(1 - p, -1j * w * kk)) * w ** (p - 1)
    got = nm.cos_power_tail(omega, k, p)
    # the phase omega*k is itself rounded: allow eps*x times the amplitude
    amp = 1.0 / (omega * k ** p)
    assert abs(got - float(ref)) <= 1e-10 * float(abs(ref)) + 8e-16 * omega * k * amp


def test_cos_power_tail_limits():
    assert nm.cos_power_tail(0.0, 2.0, 3) == pytest.approx(2.0 ** -2 / 2)
    assert nm.cos_power_tail(-1.0, 2.0, 3) == nm.cos_power_tail(1.0, 2.0, 3)
    with pytest.raises(ValueError):
        nm.cos_power_tail(1.0, 2.0, 1)


@pytest.mark.parametrize("omega", [0.0, 0.3, 7.0, 1e4])
def test_filon_exact_for_polynomial_envelope(omega):
    g = lambda k: k * k
    edges = np.linspace(0.0, 10.0, 4)
    got = nm.oscillatory_integral(g, omega, edges, tail=0.0, n=8)
    with mpmath.workdps(30):
        if omega == 0.0:
            ref = mpmath.mpf(1000) / 3
        else:
            # antiderivative of k^2 cos(w k)
            w, b = mpmath.mpf(omega), mpmath.mpf(10)
            ref = (b * b / w - 2 / w ** 3) * mpmath.sin(w * b) + 2 * b / w ** 2 * mpmath.cos(w * b)
    assert got == pytest.approx(float(ref), rel=1e-12, abs=1e-12)


def test_filon_with_tail_matches_direct():
    # g = 1/k^2 on [1, inf): Filon on [1, 5] plus the closed-form tail
    omega = 2.5
    got = nm.oscillatory_integral(lambda k: k ** -2.0, omega, np.linspace(1.0, 5.0, 41),
                                  tail=lambda w: nm.cos_power_tail(w, 5.0, 2), n=16)
    ref = float(mpmath.quadosc(lambda k: mpmath.cos(omega * k) / k ** 2, [1, mpmath.inf],
                               omega=omega))
    assert got == pytest.approx(ref, abs=1e-13)
    with pytest.raises(ValueError):
        nm.oscillatory_integral(np.cos, 1.0, [0.0, 1.0], tail=None)


def test_find_root():
    assert nm.find_root(lambda x: x * x - 2.0, 0.0, 2.0) == pytest.approx(math.sqrt(2.0), abs=1e-12)
    assert nm.find_root(lambda x: x - 1.0, 1.0, 3.0) == 1.0
    with pytest.raises(ValueError):
        nm.find_root(lambda x: x * x + 1.0, -1.0, 1.0)


class _Harmonic:
    c_const = 1.0

    def __call__(self, r):
        return np.zeros_like(np.asarray(r, dtype=float))


def test_numerov_fourth_order():
    errs = []
    for h in (0.02, 0.01):
        r = np.arange(0.0, 10.0 + h / 2, h)
        u = nm.numerov(_Harmonic(), 1.0, r)
        errs.append(np.max(np.abs(u - np.sin(r))))
    assert math.log2(errs[0] / errs[1]) == pytest.approx(4.0, abs=0.2)


def test_numerov_scaled_handles_deep_tunnelling():
    # u'' = 400 u, outward growth exp(20 r) overflows without scaling
    r = np.arange(0.0, 60.0, 1e-3)
    u, s = nm.numerov_scaled(_Harmonic(), -400.0, r)
    log_u = np.log(np.abs(u[-1])) + s[-1]
    assert log_u == pytest.approx(20 * r[-1] - math.log(40.0), rel=1e-9)


def test_numerov_inward_decays():
    r = np.linspace(0.0, 10.0, 5001)
    u = nm.numerov(_Harmonic(), -4.0, r, direction="inward")
    ratio = u[2000] / u[2500]
    assert ratio == pytest.approx(math.exp(2 * (r[2500] - r[2000])), rel=1e-6)


def test_numerov_input_checks():
    with pytest.raises(ValueError):
        nm.numerov(_Harmonic(), 1.0, np.array([0.0, 0.1, 0.3]))
    with pytest.raises(ValueError):
        nm.numerov(_Harmonic(), 1e4, np.linspace(0.0, 1.0, 11))
    with pytest.raises(ValueError):
        nm.numerov(_Harmonic(), 1.0, np.linspace(1.0, 2.0, 101))
    with pytest.raises(ValueError):
        nm.numerov(_Harmonic(), 1.0, np.linspace(0.0, 2.0, 101), direction="sideways")
