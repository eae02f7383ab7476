"""s-wave phase shift over the whole half-line of k.

The variable-phase equation ``delta' = -V/(C k) sin^2(k r + delta)`` is
integrated from the origin through the inner pieces. Beyond the last join
the potential is a single Morse piece whose exact solutions are known, so
the phase is carried a little further only if needed to keep the residual
tail phase small, then matched exactly onto the Morse solution that behaves
as ``exp(-i k r)`` at infinity. At large k the phase follows the odd power
series ``sum a_n k^-n`` whose coefficients come from a recursion for the
Riccati expansion of the log-derivative.
"""
from dataclasses import dataclass, field
from concurrent.futures import ThreadPoolExecutor
import cmath
import math
import os

import numba
import numpy as np
from numpy.polynomial import polynomial as npoly

from . import numerics
from .numerics import Tolerance, find_root
from .potential import packed_value, poly_integral_terms, moments
from .specfun import kummer_phi

__all__ = [
    "PHASE_TOL", "TailParams", "TailMatch", "tail_params", "integrate_phase",
    "tail_phase", "phase_shift", "riccati_integrals", "series_coefficients",
    "asymptotic_coeffs", "delta_asymptotic", "PhaseShiftCurve", "build_curve",
    "find_switch", "levinson_residual", "scattering_length", "zero_crossing",
    "inflection_energy",
]

PHASE_TOL = Tolerance(abs_tol=1e-13, rel_tol=1e-13, max_evals=400_000_000)
SERIES_ORDER = 25


def n_threads():
    try:
        return max(1, int(os.environ.get("REFPOT_THREADS", "1")))
    except ValueError:
        return 1


def parallel_map(func, items):
    """Ordered map, threaded when REFPOT_THREADS > 1."""
    items = list(items)
    nt = n_threads()
    if nt == 1 or len(items) < 2:
        return [func(x) for x in items]
    with ThreadPoolExecutor(nt) as ex:
        return list(ex.map(func, items))


@numba.njit(nogil=True)
def _phase_rhs(r, y, p, out):
    k = p[0]
    V = packed_value(r, p[2:])
    s = math.sin(k * r + y[0])
    out[0] = -V / (p[1] * k) * s * s


def _params(pot, k):
    return np.concatenate([[k, pot.c_const], pot.packed()])


def integrate_phase(pot, k, r_end=None, tol=None, r_start=0.0, delta_start=0.0,
                    r_eval=None):
    """delta(r_end, k) from the variable-phase equation with delta(0) = 0.

    `r_end` defaults to the last join point. With `r_eval` the function
    returns the phase at those radii instead.
    """
    if k <= 0:
        raise ValueError("k must be positive")
    if not pot.components:
        return 0.0 if r_eval is None else np.zeros(len(r_eval))
    if r_end is None:
        r_end = pot.boundaries[-1] if pot.boundaries else 0.0
    tol = tol or PHASE_TOL
    try:
        res = numerics.integrate_ode(_phase_rhs, [delta_start], r_start, r_end, tol,
                                     params=_params(pot, k), r_eval=r_eval)
    except numerics.IntegrationError as exc:
        raise numerics.IntegrationError(f"phase equation failed at k={k}: {exc}") from None
    if r_eval is not None:
        return res.y_eval[:, 0]
    return float(res.y[0])


# ---------------------------------------------------------------------------
# Morse tail

@dataclass(frozen=True)
class TailParams:
    """Outer Morse piece ``d (z^2 - 2 z)``, ``z = exp(-alpha (r - r0))``.

    ``lam = sqrt(d/C)/alpha`` on the principal branch (imaginary for the
    reversed piece, d < 0). The Kummer argument is ``2 lam z``; for d < 0
    it is purely imaginary with modulus ``2 |lam| z``.
    """

    lam: complex
    alpha: float
    r0: float
    d: float
    start: float

    def z(self, r):
        return math.exp(-self.alpha * (r - self.r0))

    def y_at(self, r):
        """Kummer argument ``2 lam z(r)``."""
        return 2 * self.lam * self.z(r)

    def phase_bound(self, r, k, c_const):
        """Upper bound on the phase the tail beyond r can still add."""
        z = self.z(r)
        return abs(self.d) * (z * z / 2 + 2 * z) / (self.alpha * c_const * k)


def tail_params(pot):
    if not pot.components:
        return None
    c = pot.components[-1]
    lam = cmath.sqrt(complex(c.d / pot.c_const)) / c.alpha
    start = pot.boundaries[-1] if pot.boundaries else 0.0
    return TailParams(lam, c.alpha, c.r0, c.d, start)


def _tail_solution(tp, k, r):
    """f and f' of the solution ~ exp(-i k r) of the outer Morse piece."""
    Y = tp.y_at(r)
    a = 1j * k / tp.alpha + 0.5 - tp.lam
    c = 2j * k / tp.alpha + 1.0
    phi = kummer_phi(a, c, Y)
    dphi = a / c * kummer_phi(a + 1, c + 1, Y) if Y != 0 else a / c
    pref = cmath.exp(-1j * k * r - Y / 2)
    f = pref * phi
    fp = pref * (-1j * k * phi - tp.alpha * Y * (-0.5 * phi + dphi))
    return f, fp


@dataclass(frozen=True)
class TailMatch:
    """Result of matching the phase onto the outer Morse solution."""

    delta: float        # full phase shift
    delta_inner: float  # variable phase at the matching radius
    r_match: float
    b2: float           # delta - delta_inner


def match_radius(tp, k, c_const, bound=math.pi / 4):
    """Smallest r >= start where the tail can add less than `bound`."""
    if tp is None or tp.d == 0.0:
        return tp.start if tp else 0.0
    beta = bound * tp.alpha * c_const * k / abs(tp.d)
    zs = -2 + math.sqrt(4 + 2 * beta)
    return max(tp.start, tp.r0 - math.log(zs) / tp.alpha)


def tail_phase(pot, k, tol=None, method="match", r_match=None):
    """Phase shift from the inner integration plus the outer Morse piece.

    ``method="match"``: integrate to the matching radius (the last join, or
    further out at small k), then match value and slope exactly onto the
    outer solution ``f ~ exp(-i k r)``. The asymptotic phase is
    ``arg(f' sin(theta) - k cos(theta) f)`` modulo pi, ``theta = k r + delta``,
    on the branch nearest the inner phase.

    ``method="argument"``: add the argument of
    ``exp(-Y/2) Phi(i k/alpha + 1/2 - lam, 2 i k/alpha + 1; Y)`` at the last
    join to the inner phase, principal branch. This shortcut neglects the
    amplitude variation of the outer solution and is kept for comparison.
    """
    tp = tail_params(pot)
    if tp is None:
        return TailMatch(0.0, 0.0, 0.0, 0.0)
    if method == "argument":
        rm = tp.start
        d_in = integrate_phase(pot, k, rm, tol)
        Y = tp.y_at(rm)
        a = 1j * k / tp.alpha + 0.5 - tp.lam
        c = 2j * k / tp.alpha + 1.0
        b2 = cmath.phase(cmath.exp(-Y / 2) * kummer_phi(a, c, Y))
        return TailMatch(d_in + b2, d_in, rm, b2)
    if method != "match":
        raise ValueError("method must be 'match' or 'argument'")
    rm = match_radius(tp, k, pot.c_const) if r_match is None else float(r_match)
    d_in = integrate_phase(pot, k, rm, tol)
    if tp.d == 0.0:
        return TailMatch(d_in, d_in, rm, 0.0)
    f, fp = _tail_solution(tp, k, rm)
    th = k * rm + d_in
    w = fp * math.sin(th) - k * math.cos(th) * f
    base = cmath.phase(w)
    n = round((d_in - base) / math.pi)
    delta = base + n * math.pi
    return TailMatch(delta, d_in, rm, delta - d_in)


def phase_shift(pot, k, tol=None):
    """delta(k) by integration plus exact tail matching."""
    return tail_phase(pot, k, tol).delta


# ---------------------------------------------------------------------------
# high-k series

def riccati_integrals(pot, nmax):
    """Non-oscillatory parts of the integrals of the Riccati terms w_n.

    ``w_1 = V/C`` and ``w_n = -w_{n-1}' - sum_{i+j=n-1} w_i w_j``. Each
    ``w_n`` is a polynomial in ``y`` on every piece (``dy/dr = -alpha y``).
    Total derivatives integrate to their value at the origin; jumps at the
    joins only produce oscillating terms and are left out.
    """
    comps = pot.components
    if not comps:
        return {n: 0.0 for n in range(1, nmax + 1)}
    C = pot.c_const
    w = {1: [c.poly() / C for c in comps]}
    out = {1: math.fsum(poly_integral_terms(pot, w[1]))}
    y0 = math.exp(comps[0].alpha * comps[0].r0)
    for n in range(2, nmax + 1):
        prods, wn = [], []
        for s, c in enumerate(comps):
            acc = np.zeros(1)
            for i in range(1, n - 1):
                acc = npoly.polyadd(acc, npoly.polymul(w[i][s], w[n - 1 - i][s]))
            prods.append(acc)
            prev = w[n - 1][s]
            dprev = prev * (-np.arange(len(prev)) * c.alpha)
            wn.append(npoly.polysub(-dprev, acc))
        w[n] = wn
        at_zero = math.fsum(w[n - 1][0][m] * y0 ** m for m in range(len(w[n - 1][0])))
        out[n] = at_zero - math.fsum(poly_integral_terms(pot, prods))
    return out


def series_coefficients(pot, order=SERIES_ORDER):
    """Coefficients of the large-k expansions, ``{n: a_n}`` for n <= order.

    Odd n: ``delta(k) ~ sum a_n k^-n``. Even n: ``ln|F(k)| ~ sum a_n k^-n``
    (F the Jost function).
    """
    I = riccati_integrals(pot, order)
    a = {}
    for n, v in I.items():
        if n % 2:
            m = (n - 1) // 2
            a[n] = -(-1) ** m * v / 2.0 ** n
        else:
            m = n // 2
            a[n] = -(-1) ** m * v / 4.0 ** m
    return a


def asymptotic_coeffs(pot):
    """(a1, a3, a5) from the potential moments.

    ``a1 = -W/(2C)``, ``a3 = -(U + C V'(0))/(8C^2)``,
    ``a5 = -(2 T3 + C DW + 6 C V(0) V'(0) - C^2 V'''(0))/(32 C^3)``.
    """
    if not pot.components:
        return 0.0, 0.0, 0.0
    m = moments(pot)
    C = pot.c_const
    a1 = -m.W / (2 * C)
    a3 = -(m.U + C * m.v1) / (8 * C * C)
    a5 = -(2 * m.T3 + C * m.DW + 6 * C * m.v0 * m.v1 - C * C * m.v3) / (32 * C ** 3)
    return a1, a3, a5


def delta_asymptotic(k, coeffs, order=None):
    """Odd power series ``sum a_n k^-n`` (n odd, n <= order)."""
    k = np.asarray(k, dtype=float)
    if isinstance(coeffs, (tuple, list)):
        coeffs = {2 * i + 1: c for i, c in enumerate(coeffs)}
    order = order or max(coeffs)
    out = np.zeros(k.shape)
    for n in sorted((n for n in coeffs if n % 2 and n <= order), reverse=True):
        out = out + coeffs[n] / k ** n
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# curve

@dataclass
class PhaseShiftCurve:
    """delta(k) on a log grid with per-point provenance.

    ``method`` entries are ``"ode_tail"`` or ``"asymptotic"``.
    ``band`` holds the overlap validation points ``(k, delta_ode, delta_asym)``.
    """

    k: np.ndarray
    delta: np.ndarray
    method: list
    a1: float
    a3: float
    a5: float
    coeffs: dict
    k_switch: float
    band: np.ndarray
    n_bound: int
    c_const: float
    fingerprint: str = ""
    extras: dict = field(default_factory=dict)

    @property
    def energy(self):
        return self.c_const * self.k ** 2

    def asymptotic(self, k, order=None):
        return delta_asymptotic(k, self.coeffs, order)

    @property
    def band_max_diff(self):
        if len(self.band) == 0:
            return 0.0
        return float(np.max(np.abs(self.band[:, 1] - self.band[:, 2])))


def find_switch(pot, coeffs, k_hi=75000.0, k_lo=None, ratio=1.25, limit=1e-5, tol=None):
    """Lowest k of a geometric ladder down from `k_hi` where series and
    integration agree within `limit`, with agreement at every rung above.

    Returns ``(k_switch, band)`` with band rows ``(k, delta_ode, delta_asym)``.
    """
    if k_lo is None:
        k_lo = k_hi / 20
    rows = []
    k = k_hi
    k_sw = None
    while k >= k_lo:
        d_ode = phase_shift(pot, k, tol)
        d_as = delta_asymptotic(k, coeffs)
        if abs(d_ode - d_as) >= limit:
            break
        rows.append((k, d_ode, d_as))
        k_sw = k
        k /= ratio
    if k_sw is None:
        raise RuntimeError(f"series and integration disagree already at k = {k_hi}")
    return k_sw, np.array(rows[::-1])


def build_curve(pot, k_min=1e-4, k_max=1e9, n_points=400, n_bound=None,
                k_switch=None, k_band_top=75000.0, order=SERIES_ORDER, tol=None,
                band_limit=1e-5):
    """Phase shift on a log-spaced k grid.

    Integration plus tail matching below `k_switch`, the odd power series
    above. The switch is found automatically (`find_switch`) unless given;
    the overlap band between the switch and `k_band_top` is recorded.
    The branch is fixed by the integration itself (delta(0, k) = 0), so no
    unwrapping is applied; near k ~ sqrt(V(0)/C) the phase legitimately
    moves by many pi between neighbouring grid points.
    """
    if k_min <= 0 or k_max <= k_min:
        raise ValueError("need 0 < k_min < k_max")
    coeffs = series_coefficients(pot, order) if pot.components else {1: 0.0}
    a1, a3, a5 = asymptotic_coeffs(pot)
    ks = np.geomspace(k_min, k_max, n_points)
    if not pot.components:
        k_sw = k_max if k_switch is None else k_switch
        band = np.zeros((0, 3))
    elif k_switch is None:
        k_sw, band = find_switch(pot, coeffs, min(k_band_top, k_max), tol=tol,
                                 limit=band_limit)
    else:
        k_sw = float(k_switch)
        kb = np.geomspace(k_sw, max(k_sw, min(k_band_top, k_max)), 5)
        band = np.array([(k, phase_shift(pot, k, tol), delta_asymptotic(k, coeffs))
                         for k in kb])
        if np.max(np.abs(band[:, 1] - band[:, 2])) > 1e-4:
            raise RuntimeError("overlap band disagreement above 1e-4 rad")
    low = ks[ks < k_sw]
    d_low = parallel_map(lambda k: phase_shift(pot, k, tol), low)
    d_high = delta_asymptotic(ks[ks >= k_sw], coeffs) if pot.components else \
        np.zeros(np.sum(ks >= k_sw))
    delta = np.concatenate([np.asarray(d_low, dtype=float), np.atleast_1d(d_high)])
    method = ["ode_tail"] * len(low) + ["asymptotic"] * (len(ks) - len(low))
    if n_bound is None:
        n_bound = int(round(delta[0] / math.pi))
    return PhaseShiftCurve(ks, delta, method, a1, a3, a5, coeffs, k_sw, band,
                           int(n_bound), pot.c_const, pot.fingerprint())


def scattering_length(curve, k_window=None, max_kr=0.1, min_points=5):
    """Fit ``delta = N pi - arctan(k R0)`` on the low-k end of the curve.

    The window is the first decade of the grid (or `k_window`), trimmed to
    ``k R0 < max_kr``. Returns ``(R0, max_residual, n_points)``.
    """
    k, d = curve.k, curve.delta
    lo = k[0]
    hi = lo * 10 if k_window is None else k_window[1]
    if k_window is not None:
        lo = k_window[0]
    m = (k >= lo) & (k <= hi)
    N = curve.n_bound
    R0 = 0.0
    for _ in range(3):
        if m.sum() < min_points:
            raise ValueError("scattering-length window has fewer than "
                             f"{min_points} points")
        t = np.tan(N * math.pi - d[m])
        R0 = float(np.dot(k[m], t) / np.dot(k[m], k[m]))
        m2 = m & (k * abs(R0) < max_kr)
        if m2.sum() == m.sum():
            break
        m = m2
    if m.sum() < min_points:
        raise ValueError("scattering-length window empty after k R0 trimming")
    resid = d[m] - (N * math.pi - np.arctan(k[m] * R0))
    return R0, float(np.max(np.abs(resid))), int(m.sum())


def levinson_residual(curve):
    """``delta(0+) - delta(inf) - N pi`` with delta(inf) = 0 from the series.

    delta(0+) is the intercept of the low-k law fitted by
    `scattering_length`. Returns ``(residual, closure)`` where `closure` is
    the largest series/integration mismatch in the overlap band.
    """
    N = curve.n_bound
    if np.all(curve.delta == 0):
        return 0.0, 0.0
    R0, _, _ = scattering_length(curve)
    k, d = curve.k, curve.delta
    m = (k <= k[0] * 10) & (k * abs(R0) < 0.1)
    d0 = float(np.mean(d[m] + np.arctan(k[m] * R0)))
    return d0 - N * math.pi, curve.band_max_diff


def zero_crossing(pot, curve, tol=None):
    """Energy where delta(E) changes sign (refined by root finding)."""
    d = curve.delta
    idx = np.where((d[:-1] > 0) & (d[1:] <= 0))[0]
    if len(idx) == 0:
        raise ValueError("no sign change on the curve")
    i = idx[0]
    k = find_root(lambda q: phase_shift(pot, q, tol), curve.k[i], curve.k[i + 1],
                  Tolerance(1e-12, 1e-12))
    return pot.c_const * k * k


def inflection_energy(curve, e_lo=None, e_hi=None):
    """Energy of the inflection of delta against ln E inside [e_lo, e_hi]."""
    E = curve.energy
    x = np.log(E)
    d2 = np.gradient(np.gradient(curve.delta, x), x)
    m = np.ones_like(E, dtype=bool)
    if e_lo is not None:
        m &= E >= e_lo
    if e_hi is not None:
        m &= E <= e_hi
    idx = np.where(m[:-1] & m[1:] & (np.sign(d2[:-1]) != np.sign(d2[1:])))[0]
    if len(idx) == 0:
        raise ValueError("no inflection in the window")
    i = idx[np.argmax(np.abs(d2[idx] - d2[idx + 1]))]
    t = d2[i] / (d2[i] - d2[i + 1])
    return float(np.exp(x[i] + t * (x[i + 1] - x[i])))
