"""Jost function: modulus from the dispersion relation, g(k), asymptotics.

``ln|F(E)| = sum_n ln(1 - E_n/E) - (1/pi) PV int_0^inf delta(E')/(E' - E) dE'``.

|F| reaches ``exp(1e4)`` at low energy for a hard repulsive core, so
everything is carried as ``ln|F|`` and ``g = |F|^-2 - 1`` is formed with
``expm1``. The phase shift enters through a `PhaseTable`: values at
Gauss-Legendre nodes on panels in ln k, interpolated by the panel's Legendre
expansion. Beyond the top of the table the odd power series of delta is
integrated term by term in closed form.
"""
from dataclasses import dataclass, field
import cmath
import math

import numpy as np
from numpy.polynomial import legendre as L
from scipy import integrate

from . import numerics
from .numerics import Tolerance
from .phaseshift import (delta_asymptotic, phase_shift, parallel_map,
                         series_coefficients, SERIES_ORDER)
from .potential import moments

__all__ = [
    "PhaseTable", "phase_table", "dispersion_integral", "log_jost_modulus",
    "jost_modulus", "g_function", "g_from_log", "JostModulusCurve", "jost_curve",
    "JostAsymptotics", "asymptotics_from_potential", "asymptotics_from_phase",
    "JostValue", "jost_direct", "format_from_log", "CoverageError",
]

K_A = 75000.0


class CoverageError(ValueError):
    """Energy outside the range covered by the phase table."""


# ---------------------------------------------------------------------------
# phase table

@dataclass
class PhaseTable:
    """delta(k) sampled for quadrature and spectral interpolation.

    ``edges`` are panel edges in ln k, ``delta[p, i]`` the phase at node i of
    panel p. Below ``k_lo`` the low-energy law ``N pi - arctan(k R0)`` holds;
    at and above ``k_switch`` the odd power series is used.
    """

    edges: np.ndarray
    n: int
    k_nodes: np.ndarray
    delta: np.ndarray
    n_bound: int
    R0: float
    coeffs: dict
    k_switch: float
    c_const: float
    fingerprint: str = ""

    @property
    def k_lo(self):
        return math.exp(self.edges[0])

    @property
    def k_top(self):
        return math.exp(self.edges[-1])

    def low(self, k):
        return self.n_bound * math.pi - np.arctan(np.asarray(k, dtype=float) * self.R0)

    def _coef(self):
        t, w = numerics.gauss_legendre(self.n)
        m = np.arange(self.n)
        P = L.legvander(t, self.n - 1)
        proj = (2 * m[:, None] + 1) / 2.0 * (P.T * w[None, :])
        return self.delta @ proj.T

    def __call__(self, k, deriv=False):
        """delta(k), or d delta / d ln k with ``deriv=True``."""
        k = np.atleast_1d(np.asarray(k, dtype=float))
        out = np.empty_like(k)
        u = np.log(k)
        coef = self._coef()
        lo = k < self.k_lo
        hi = k >= self.k_top
        if deriv:
            out[lo] = -k[lo] * self.R0 / (1 + (k[lo] * self.R0) ** 2)
            n_odd = [n for n in self.coeffs if n % 2]
            out[hi] = sum(-n * self.coeffs[n] / k[hi] ** n for n in n_odd)
        else:
            out[lo] = self.low(k[lo])
            out[hi] = delta_asymptotic(k[hi], self.coeffs) if hi.any() else 0.0
        mid = ~(lo | hi)
        if mid.any():
            p = np.clip(np.searchsorted(self.edges, u[mid], side="right") - 1,
                        0, len(self.edges) - 2)
            a, b = self.edges[p], self.edges[p + 1]
            t = (2 * u[mid] - a - b) / (b - a)
            vals = np.empty(len(t))
            for j in np.unique(p):
                s = p == j
                c = coef[j]
                if deriv:
                    c = L.legder(c) * 2 / (self.edges[j + 1] - self.edges[j])
                vals[s] = L.legval(t[s], c)
            out[mid] = vals
        return out

    def nodes_and_weights(self, k_max=None):
        """Flattened (k, delta, w_lnk) for the panels below `k_max`."""
        t, w = numerics.gauss_legendre(self.n)
        h = 0.5 * np.diff(self.edges)
        keep = np.ones(len(h), dtype=bool)
        if k_max is not None:
            top = math.log(k_max)
            keep = self.edges[1:] <= top * (1 + 1e-15) + 1e-15
            if not np.any(np.isclose(self.edges, top, rtol=0, atol=1e-12)):
                raise CoverageError(f"k = {k_max} is not a panel edge of the table")
        return (self.k_nodes[keep].ravel(), self.delta[keep].ravel(),
                (h[keep, None] * w[None, :]).ravel())


def _pinned_edges(k_lo, k_top, pins, width):
    """Edges in ln k with at most `width` spacing and every pin an edge."""
    pts = sorted({math.log(k_lo), math.log(k_top),
                  *[math.log(x) for x in pins if k_lo < x < k_top]})
    edges = [pts[0]]
    for a, b in zip(pts[:-1], pts[1:]):
        m = max(1, int(math.ceil((b - a) / width - 1e-9)))
        edges.extend(np.linspace(a, b, m + 1)[1:])
    return np.array(edges)


def _tail_size(vals, proj):
    c = proj @ vals
    return abs(c[-1]) + abs(c[-2])


def phase_table(pot, curve, k_a=K_A, extra=(), width=0.5, n=16, coef_tol=1e-9,
                coef_rtol=5e-9, min_width=1e-3, tol=None):
    """Sample delta on Gauss-Legendre panels from the curve's low end to `k_a`.

    Panels start `width` wide in ln k and are halved until the last two
    Legendre coefficients of delta on the panel are below
    ``coef_tol + coef_rtol * max|delta|`` (the relative part keeps the test
    above the integration noise), so the steep stretch near
    ``k = sqrt(V(0)/C)`` is resolved automatically.

    Parameters
    ----------
    curve : PhaseShiftCurve
        Supplies N, the switch point and the series coefficients; R0 comes
        from its low-energy fit.
    k_a : float
        Top of the table; closed-form tail integrals take over above it.
    extra : sequence of float
        Further wavenumbers that must be panel edges (e.g. ``sqrt(2) k_a``
        for the invariance check; the table then extends to the largest).
    """
    from .phaseshift import scattering_length
    R0 = scattering_length(curve)[0] if pot.components else 0.0
    k_lo = float(curve.k[0])
    k_top = max([k_a, *extra])
    k_sw = min(curve.k_switch, k_top)
    edges = _pinned_edges(k_lo, k_top, [k_sw, k_a, *extra], width)
    t, w = numerics.gauss_legendre(n)
    m = np.arange(n)
    proj = (2 * m[:, None] + 1) / 2.0 * (L.legvander(t, n - 1).T * w[None, :])

    def sample(panels):
        ks = np.exp(np.array([0.5 * (a + b) + 0.5 * (b - a) * t for a, b in panels]))
        flat = ks.ravel()
        d = np.zeros_like(flat)
        if pot.components:
            ode = flat < k_sw
            d[ode] = parallel_map(lambda k: phase_shift(pot, k, tol), flat[ode])
            d[~ode] = delta_asymptotic(flat[~ode], curve.coeffs)
        return ks, d.reshape(ks.shape)

    todo = list(zip(edges[:-1], edges[1:]))
    done = []
    while todo:
        ks, d = sample(todo)
        nxt = []
        for (a, b), kk, dd in zip(todo, ks, d):
            lim = coef_tol + coef_rtol * np.max(np.abs(dd))
            if _tail_size(dd, proj) > lim and b - a > 2 * min_width:
                c = 0.5 * (a + b)
                nxt += [(a, c), (c, b)]
            else:
                done.append((a, b, kk, dd))
        todo = nxt
    done.sort(key=lambda x: x[0])
    edges = np.array([x[0] for x in done] + [done[-1][1]])
    k_nodes = np.array([x[2] for x in done])
    delta = np.array([x[3] for x in done])
    return PhaseTable(edges, n, k_nodes, delta, curve.n_bound, R0, curve.coeffs,
                      k_sw, pot.c_const, pot.fingerprint())


# ---------------------------------------------------------------------------
# dispersion integral

def _tail_T(n, k, kt):
    """PV of ``int_kt^inf 2 q^(1-n) / (q^2 - k^2) dq`` for odd n."""
    m = (n - 1) // 2
    if k < 0.5 * kt:
        s = (k / kt) ** 2
        tot, j = 0.0, 0
        while True:
            term = s ** j / (2 * (m + j) + 1)
            tot += term
            if term < 1e-17 * tot:
                break
            j += 1
        return 2 * tot / kt ** (2 * m + 1)
    s = k * k
    Lk = math.log(abs((kt + k) / (kt - k))) / (2 * k)
    acc = math.fsum(s ** (j - 1) * kt ** (1 - 2 * j) / (2 * j - 1) for j in range(1, m + 1))
    return 2 * (Lk - acc) / s ** m


def _tail_integral(coeffs, k, kt):
    return math.fsum(a * _tail_T(n, k, kt) for n, a in coeffs.items() if n % 2 and a != 0)


def dispersion_integral(table, E):
    """``PV int_0^inf delta(E') / (E' - E) dE'`` for energies in the table range.

    Subtraction of delta(E) on the tabulated part, Gauss-Legendre in k on
    the low-energy piece, closed forms for the series tail.
    """
    E = np.atleast_1d(np.asarray(E, dtype=float))
    C = table.c_const
    k = np.sqrt(E / C)
    if np.any(k < 1.5 * table.k_lo):
        raise CoverageError("energy too close to the low end of the phase table")
    if np.any(np.abs(k / table.k_top - 1) < 1e-9):
        raise CoverageError("energy at the top edge of the phase table")
    kn, dn, wn = table.nodes_and_weights()
    En = C * kn * kn
    E_lo, E_top = C * table.k_lo ** 2, C * table.k_top ** 2
    d_at = table(k)
    dprime = table(k, deriv=True)   # d delta / d ln k
    tq, wq = numerics.gauss_legendre(24)
    q = 0.5 * table.k_lo * (tq + 1)
    wq = 0.5 * table.k_lo * wq
    d_low = table.low(q)
    out = np.empty(len(E))
    for i, (e, kk, d0) in enumerate(zip(E, k, d_at)):
        inside = kk < table.k_top
        diff = En - e
        if inside:
            with np.errstate(divide="ignore", invalid="ignore"):
                f = (dn - d0) * 2 * En / diff
            near = np.abs(diff) < 1e-12 * e
            # removable point: (delta' / (2E)) * 2E = d delta / d ln k
            f[near] = dprime[i]
            main = math.fsum(wn * f)
            low = math.fsum(wq * (d_low - d0) * 2 * C * q / (C * q * q - e))
            total = main + low + d0 * math.log((E_top - e) / e)
        else:
            main = math.fsum(wn * dn * 2 * En / diff)
            low = math.fsum(wq * d_low * 2 * C * q / (C * q * q - e))
            total = main + low
        out[i] = total + _tail_integral(table.coeffs, kk, table.k_top)
    return out


def log_jost_modulus(E, table, spectrum=None):
    """``ln|F(E)|`` for E > 0 by the dispersion relation."""
    E = np.atleast_1d(np.asarray(E, dtype=float))
    if np.any(E <= 0):
        raise ValueError("E must be positive")
    bound = np.zeros(len(E))
    if spectrum is not None:
        for s in spectrum.states:
            bound += np.log1p(-s.energy / E)
    return bound - dispersion_integral(table, E) / math.pi


def jost_modulus(E, table, spectrum=None):
    """|F(E)| (overflows to inf where ln|F| > 709; use `log_jost_modulus`)."""
    with np.errstate(over="ignore"):
        return np.exp(log_jost_modulus(E, table, spectrum))


def g_from_log(log_mod):
    """``g = |F|^-2 - 1`` from ``ln|F|``."""
    return np.expm1(-2.0 * np.asarray(log_mod, dtype=float))


def g_function(E, table=None, spectrum=None, pot=None, route="dispersion"):
    """g at energies E.

    ``route="dispersion"`` uses the phase table; ``route="asymptotic"``
    uses the two-term large-E form
    ``g = -V(0)/(2E) - (V(0)^2 - C V''(0))/(8 E^2)``
    and needs `pot`.
    """
    E = np.asarray(E, dtype=float)
    if route == "dispersion":
        return g_from_log(log_jost_modulus(E, table, spectrum))
    if route == "asymptotic":
        if not pot.components:
            return np.zeros_like(E)
        v0, v2 = pot.v_zero, float(pot.eval(0.0, 2))
        return -v0 / (2 * E) - (v0 * v0 - pot.c_const * v2) / (8 * E * E)
    raise ValueError("route must be 'dispersion' or 'asymptotic'")


def format_from_log(log_value, digits=12):
    """Decimal string of ``exp(log_value)`` that does not overflow."""
    if not math.isfinite(log_value):
        return "inf" if log_value > 0 else "0"
    x = log_value / math.log(10)
    e = math.floor(x)
    m = 10 ** (x - e)
    if round(m, digits - 1) >= 10:
        m, e = m / 10, e + 1
    return f"{m:.{digits - 1}f}e{e:+03d}"


@dataclass
class JostModulusCurve:
    """ln|F| and g on a log-spaced energy grid.

    ``route`` per point: ``"dispersion"`` below `E_series`, ``"series"``
    above it (even power series of ln|F|).
    """

    E: np.ndarray
    log_modulus: np.ndarray
    g: np.ndarray
    route: list
    k_a: float
    c_const: float
    fingerprint: str = ""

    @property
    def E_a(self):
        return self.c_const * self.k_a ** 2

    @property
    def k(self):
        return np.sqrt(self.E / self.c_const)

    @property
    def modulus(self):
        with np.errstate(over="ignore"):
            return np.exp(self.log_modulus)


def log_modulus_series(k, coeffs):
    """Even power series ``sum a_n k^-n`` of ln|F| (n even)."""
    k = np.asarray(k, dtype=float)
    out = np.zeros(k.shape)
    for n in sorted((n for n in coeffs if n % 2 == 0), reverse=True):
        out = out + coeffs[n] / k ** n
    return out


def jost_curve(table, spectrum, pot, E_min=None, E_max=1e13, n_points=300,
               k_a=K_A, series_factor=100.0):
    """|F| and g on a log grid; the dispersion route up to
    ``series_factor * E_a``, the even series of ln|F| beyond."""
    C = pot.c_const
    if E_min is None:
        E_min = C * (2 * table.k_lo) ** 2
    E = np.geomspace(E_min, E_max, n_points)
    E_ser = series_factor * C * k_a ** 2
    disp = E < E_ser
    logm = np.empty(n_points)
    logm[disp] = log_jost_modulus(E[disp], table, spectrum)
    if pot.components:
        coeffs = series_coefficients(pot, SERIES_ORDER)
        logm[~disp] = log_modulus_series(np.sqrt(E[~disp] / C), coeffs)
    else:
        logm[~disp] = 0.0
    route = ["dispersion" if d else "series" for d in disp]
    return JostModulusCurve(E, logm, g_from_log(logm), route, k_a, C, pot.fingerprint())


# ---------------------------------------------------------------------------
# asymptotic coefficients by two routes

@dataclass
class JostAsymptotics:
    """Large-k coefficients of ``ln|F| = a2/k^2 + a4/k^4 + a6/k^6 + ...``."""

    a2: float
    a4: float
    a6: float = math.nan
    route: str = ""
    W: float = math.nan
    U: float = math.nan
    extras: dict = field(default_factory=dict)


def asymptotics_from_potential(pot):
    """a2 = V(0)/(4C), a4 = (2 V(0)^2 - C V''(0))/(16 C^2), plus evaluators.

    ``extras`` holds callables ``re_F(k)``, ``im_F(k)`` (iterated regular
    solution through k^-4) and ``mod_sq(k)`` (their squared modulus after
    the cancellation, through k^-4).
    """
    C = pot.c_const
    if not pot.components:
        one = lambda k: np.ones_like(np.asarray(k, dtype=float))
        zero = lambda k: np.zeros_like(np.asarray(k, dtype=float))
        return JostAsymptotics(0.0, 0.0, 0.0, "potential", 0.0, 0.0,
                               {"re_F": one, "im_F": zero, "mod_sq": one})
    m = moments(pot)
    v0, v1, v2 = m.v0, m.v1, m.v2
    W, U = m.W, m.U
    a2 = v0 / (4 * C)
    a4 = (2 * v0 * v0 - C * v2) / (16 * C * C)

    def re_F(k):
        k = np.asarray(k, dtype=float)
        return (1 + v0 / (4 * C * k ** 2) - W ** 2 / (8 * C ** 2 * k ** 2)
                - v2 / (16 * C * k ** 4)
                + (5 * v0 ** 2 - 2 * v1 * W) / (32 * C ** 2 * k ** 4)
                - (v0 * W ** 2 + 2 * U * W) / (32 * C ** 3 * k ** 4)
                + W ** 4 / (384 * C ** 4 * k ** 4))

    def im_F(k):
        k = np.asarray(k, dtype=float)
        return (W / (2 * C * k) + v1 / (8 * C * k ** 3)
                + (v0 * W + U) / (8 * C ** 2 * k ** 3) - W ** 3 / (48 * C ** 3 * k ** 3))

    def mod_sq(k):
        k = np.asarray(k, dtype=float)
        return 1 + v0 / (2 * C * k ** 2) + 3 * v0 ** 2 / (8 * C ** 2 * k ** 4) \
            - v2 / (8 * C * k ** 4)

    return JostAsymptotics(a2, a4, math.nan, "potential", W, U,
                           {"re_F": re_F, "im_F": im_F, "mod_sq": mod_sq})


def asymptotics_from_phase(table, spectrum, k_a=K_A, p_max=3):
    """a2, a4, a6 from moments of delta below ``E_a = C k_a^2``.

    ``a_2p = -(2/pi) sum_n a_n k_a^(2q-1)/(2q-1)
    + C^-p [ (1/pi) int_0^E_a delta E^(p-1) dE - (1/p) sum E_n^p ]``
    with ``q = p - (n-1)/2`` over all odd series coefficients a_n.
    """
    C = table.c_const
    kn, dn, wn = table.nodes_and_weights(k_max=k_a)
    En = C * kn * kn
    tq, wq = numerics.gauss_legendre(24)
    q = 0.5 * table.k_lo * (tq + 1)
    wq = 0.5 * table.k_lo * wq
    El = C * q * q
    dl = table.low(q)
    odd = {n: a for n, a in table.coeffs.items() if n % 2}
    res = []
    parts = {}
    for p in range(1, p_max + 1):
        # dE = 2 E d(ln k) on the table, dE = 2 C k dk below it
        integral = math.fsum(wn * dn * En ** (p - 1) * 2 * En) \
            + math.fsum(wq * dl * El ** (p - 1) * 2 * C * q)
        series = math.fsum(a * k_a ** (2 * (p - (n - 1) // 2) - 1)
                           / (2 * (p - (n - 1) // 2) - 1) for n, a in odd.items())
        bsum = spectrum.power_sum(p) if spectrum is not None else 0.0
        val = -2 / math.pi * series + (integral / math.pi - bsum / p) / C ** p
        parts[p] = (integral, series, bsum)
        res.append(val)
    return JostAsymptotics(res[0], res[1], res[2] if p_max >= 3 else math.nan,
                           "phase", extras={"k_a": k_a, "parts": parts})


# ---------------------------------------------------------------------------
# direct Jost function

@dataclass(frozen=True)
class JostValue:
    """F = exp(log_modulus + i arg)."""

    log_modulus: float
    arg: float
    r_max: float = math.nan
    tail_estimate: float = math.nan

    @property
    def value(self):
        return complex(math.exp(self.log_modulus) * math.cos(self.arg),
                       math.exp(self.log_modulus) * math.sin(self.arg))


def _segment_simpson(pot, r, integrand, psi, k, h):
    """Simpson sum split at joins lying on grid nodes.

    A join on a node carries the left limit of V for the panel before it and
    the right limit after it, so jumps in V cost no accuracy.
    """
    cuts = [0]
    left_vals = {}
    for j, X in enumerate(pot.boundaries):
        i = int(round((X - r[0]) / h))
        if 0 < i < len(r) - 1 and abs(r[i] - X) <= 1e-9 * h:
            cuts.append(i)
            left_vals[i] = cmath.exp(1j * k * r[i]) * float(pot.components[j].value(X)) * psi[i]
    cuts.append(len(r) - 1)
    total = 0j
    for a, b in zip(cuts[:-1], cuts[1:]):
        y = integrand[a:b + 1].copy()
        if b in left_vals:
            y[-1] = left_vals[b]
        total += integrate.simpson(y.real, dx=h) + 1j * integrate.simpson(y.imag, dx=h)
    return total


def jost_direct(pot, k, h=None, v_cut=1e-14, rel_tail=1e-10):
    """``F(k) = 1 + (1/C) int exp(i k r) V phi dr`` with the numerical regular
    solution (``phi ~ r`` at the origin).

    The wall is crossed by the Riccati system (which also accumulates the
    integral there); Numerov continues on a uniform grid until
    ``|V| < v_cut`` (meV). Returns a `JostValue` since |F| overflows for a
    hard core.
    """
    from . import boundstates as bs
    if k <= 0:
        raise ValueError("k must be positive")
    if not pot.components:
        return JostValue(0.0, 0.0, 0.0, 0.0)
    C = pot.c_const
    E = C * k * k
    if h is None:
        h = min(1e-3, 0.05 / k)
    # radius beyond which |V| < v_cut on the outer piece
    last = pot.components[-1]
    X = pot.boundaries[-1] if pot.boundaries else 0.0
    zc = v_cut / (2 * abs(last.d)) if last.d else 0.0
    R = X if zc == 0 else max(X, last.r0 - math.log(zc) / last.alpha)
    R = max(R, X) + 1.0
    ws = bs.wall_state(pot, E, h, k)
    r, u, s, ws = bs.regular_solution(pot, E, h, R, k, ws=ws)
    smax = s.max()
    psi = u * np.exp(s - smax)
    V = pot(r)
    integrand = np.exp(1j * k * r) * V * psi
    body = _segment_simpson(pot, r, integrand, psi, k, h)
    tail = abs(V[-1]) * np.max(np.abs(psi[-int(2 * math.pi / (k * h)) - 2:])) / last.alpha
    if tail > rel_tail * abs(body):
        raise numerics.IntegrationError(
            f"truncation tail {tail:.2e} exceeds {rel_tail:.0e} of the integral")
    if ws.r_m == 0.0:
        # no wall: psi is phi itself up to exp(smax)
        M = body * math.exp(smax) / C if smax < 700 else None
        if M is not None:
            F = 1 + M
            return JostValue(math.log(abs(F)), math.atan2(F.imag, F.real), R, tail)
        logm, arg = smax + math.log(abs(body) / C), math.atan2(body.imag, body.real)
        return JostValue(logm, arg, R, tail)
    M = ws.J + body * math.exp(smax)     # times phi(r_m) = exp(L)
    logm = ws.L + math.log(abs(M) / C)
    if logm < 30:
        F = 1 + complex(math.exp(ws.L) * M / C)
        return JostValue(math.log(abs(F)), math.atan2(F.imag, F.real), R, tail)
    return JostValue(logm, math.atan2(M.imag, M.real), R, tail)
