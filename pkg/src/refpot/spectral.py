"""Spectral density, the measure difference and the Gelfand-Levitan kernel.

``G(r, r') = (2/pi) int_0^inf sin(kr) sin(kr') g(k) dk
+ sum_n C_n/(4 gamma_n^2) sinh(gamma_n r) sinh(gamma_n r')``.

The continuous part is split as ``sin a sin b = (cos(a-b) - cos(a+b))/2``
and each cosine transform ``I(w) = int_0^inf cos(w k) g(k) dk`` is done in
three pieces: ``g = -1`` exactly below the saturation point (|F| is huge
there), Filon-Legendre panels on the tabulated g, and the even power series
of g beyond the cut in closed form.
"""
from dataclasses import dataclass, field
import json
import math

import numpy as np
from numpy.polynomial import legendre as L

from . import numerics
from .jost import CoverageError, log_jost_modulus, g_from_log
from .phaseshift import parallel_map, series_coefficients, SERIES_ORDER

__all__ = [
    "spectral_density", "dsigma_density", "GTransform", "g_transform",
    "g_series_coeffs", "gl_kernel", "kernel_matrix", "GLKernelGrid",
    "export_kernel", "read_kernel", "bound_kernel", "C_N_CONVENTION",
]

C_N_CONVENTION = ("C_n = 1 / int_0^inf phi_n(r)^2 dr with phi_n the regular solution, "
                  "phi_n(r)/r -> 1 as r -> 0; bound term C_n/(4 gamma_n^2) "
                  "sinh(gamma_n r) sinh(gamma_n r')")


def spectral_density(E, log_modulus=None, spectrum=None):
    """``d rho/dE = sqrt(E) |F(E)|^-2 / pi`` for E >= 0.

    For E < 0 the measure is discrete; this returns the list of
    ``(E_n, C_n)`` weights instead (`spectrum` required).
    """
    E = np.asarray(E, dtype=float)
    if E.ndim == 0 and E < 0:
        if spectrum is None:
            raise ValueError("negative energies need the bound spectrum")
        return [(s.energy, s.norming) for s in spectrum.states]
    if np.any(E < 0):
        raise ValueError("continuous density is defined for E >= 0")
    lm = np.zeros_like(E) if log_modulus is None else np.asarray(log_modulus, dtype=float)
    return np.sqrt(E) / math.pi * np.exp(-2.0 * lm)


def dsigma_density(E, log_modulus=None):
    """Continuous part of ``d sigma/dE = sqrt(E) g(E) / pi`` (free density removed)."""
    E = np.asarray(E, dtype=float)
    lm = np.zeros_like(E) if log_modulus is None else np.asarray(log_modulus, dtype=float)
    return np.sqrt(E) / math.pi * g_from_log(lm)


def g_series_coeffs(log_coeffs, p_max=12):
    """Coefficients ``b_2p`` of ``g = exp(-2 S) - 1`` where
    ``S = sum a_2p k^-2p`` (series exponentiation in ``x = k^-2``)."""
    f = np.zeros(p_max + 1)
    for n, a in log_coeffs.items():
        if n % 2 == 0 and 2 <= n <= 2 * p_max:
            f[n // 2] = -2.0 * a
    e = np.zeros(p_max + 1)
    e[0] = 1.0
    for n in range(1, p_max + 1):
        e[n] = sum(j * f[j] * e[n - j] for j in range(1, n + 1)) / n
    return {2 * p: float(e[p]) for p in range(1, p_max + 1)}


@dataclass
class GTransform:
    """Everything needed for ``I(w) = int_0^inf cos(w k) g(k) dk``.

    ``k_sat``: g = -1 (to double precision) on [0, k_sat].
    ``edges``/``values``: Filon panels on [k_sat, k_cut] with g at the
    Gauss nodes. ``tail``: ``{2p: b_2p}`` with g = sum b_2p k^-2p beyond
    ``k_cut``.
    """

    k_sat: float
    edges: np.ndarray
    values: np.ndarray
    n: int
    tail: dict
    k_cut: float
    fingerprint: str = ""

    def __call__(self, omega):
        omega = abs(float(omega))
        if omega == 0.0:
            base = -self.k_sat
        else:
            base = -math.sin(omega * self.k_sat) / omega
        if len(self.edges) < 2:
            mid = 0.0
        else:
            mid = numerics.oscillatory_integral(None, omega, self.edges, 0.0, self.n,
                                                values=self.values)
        tail = math.fsum(b * numerics.cos_power_tail(omega, self.k_cut, p)
                         for p, b in self.tail.items() if b != 0.0)
        return base + mid + tail

    def g(self, k):
        """g at arbitrary k from the panels (Legendre interpolation) and tail."""
        k = np.atleast_1d(np.asarray(k, dtype=float))
        out = np.empty_like(k)
        out[k <= self.k_sat] = -1.0
        hi = k >= self.k_cut
        out[hi] = sum(b * k[hi] ** (-p) for p, b in self.tail.items())
        mid = (k > self.k_sat) & ~hi
        if mid.any():
            coef = self.values @ _projector(self.n).T
            j = np.clip(np.searchsorted(self.edges, k[mid], side="right") - 1,
                        0, len(self.edges) - 2)
            a, b = self.edges[j], self.edges[j + 1]
            x = (2 * k[mid] - a - b) / (b - a)
            out[mid] = [L.legval(xi, coef[ji]) for xi, ji in zip(x, j)]
        return out


def _saturation_point(table, spectrum, k_hi, level=20.0, n_scan=400):
    """Largest k with ln|F| > `level` everywhere below it on a log scan."""
    C = table.c_const
    ks = np.geomspace(2 * table.k_lo, k_hi, n_scan)
    lm = log_jost_modulus(C * ks ** 2, table, spectrum)
    below = np.where(lm <= level)[0]
    if len(below) == 0:
        raise CoverageError("g never leaves -1 in the tabulated range")
    i = below[0]
    if i == 0:
        return 0.0
    return float(ks[i - 1])


def g_transform(table, spectrum, pot, k_cut=75000.0, k_series=75000.0, n=16,
                width=None, g_tol=1e-9, min_width=0.05, max_panels=20000):
    """Tabulate g for the cosine transforms (see `GTransform`).

    g comes from the dispersion relation below `k_series` and from the
    exponentiated even series above it, so the function itself does not
    depend on `k_cut`; the cut only moves the split between Filon panels and
    the closed-form tail. Panels on [k_sat, k_cut] are halved until the last
    two Legendre coefficients of g fall below `g_tol` or they reach
    `min_width` (the dispersion g carries noise-level kinks where the phase
    table panels meet; chasing them gains nothing).
    """
    if not pot.components:
        return GTransform(0.0, np.zeros(0), np.zeros((0, n)), n, {}, k_cut,
                          pot.fingerprint())
    if k_cut < k_series:
        raise ValueError("k_cut must not lie below k_series")
    C = pot.c_const
    tail = g_series_coeffs(series_coefficients(pot, SERIES_ORDER))
    p_last = max(tail)
    last = tail[p_last] * k_series ** (-p_last)
    # first omitted term, extrapolated from the ratio of the last two
    nxt = last * last / (tail[p_last - 2] * k_series ** (2 - p_last))
    if abs(nxt) > 1e-16 * abs(sum(b * k_series ** (-p) for p, b in tail.items())):
        raise CoverageError("even series not converged at k_series = %g" % k_series)
    k_sat = _saturation_point(table, spectrum, k_series)
    if k_sat == 0.0:
        raise CoverageError("g is not saturated at the low end; the transform "
                            "needs g down to k = 0")

    def g_of(k):
        out = np.empty_like(k)
        lo = k < k_series
        out[lo] = g_from_log(log_jost_modulus(C * k[lo] ** 2, table, spectrum))
        out[~lo] = sum(b * k[~lo] ** (-p) for p, b in tail.items())
        return out

    width = width or (k_series - k_sat) / 64
    # the two stretches are refined separately so that the dispersion part
    # is laid out the same way whatever the cut
    pieces = [_refine(g_of, k_sat, k_series, width, n, g_tol, min_width, max_panels)]
    if k_cut > k_series:
        pieces.append(_refine(g_of, k_series, k_cut, width, n, g_tol, min_width,
                              max_panels))
    edges = np.concatenate([pc[0][:-1] for pc in pieces] + [pieces[-1][0][-1:]])
    values = np.concatenate([pc[1] for pc in pieces])
    return GTransform(k_sat, edges, values, n, tail, k_cut, pot.fingerprint())


def _refine(f, a, b, width, n, tol, min_width, max_panels):
    """Halve Gauss-Legendre panels of [a, b] until f's Legendre tail is small."""
    t, _ = numerics.gauss_legendre(n)
    proj = _projector(n)
    nb = max(1, int(math.ceil((b - a) / width)))
    x = np.linspace(a, b, nb + 1)
    todo = list(zip(x[:-1], x[1:]))
    done = []
    while todo:
        ks = np.array([0.5 * (lo + hi) + 0.5 * (hi - lo) * t for lo, hi in todo])
        fv = f(ks.ravel()).reshape(ks.shape)
        nxt = []
        for (lo, hi), ff in zip(todo, fv):
            c = proj @ ff
            if abs(c[-1]) + abs(c[-2]) > tol and hi - lo > 2 * min_width:
                mid = 0.5 * (lo + hi)
                nxt += [(lo, mid), (mid, hi)]
            else:
                done.append((lo, hi, ff))
        if len(done) + len(nxt) > max_panels:
            raise CoverageError("panel budget exhausted refining g on [%g, %g]" % (a, b))
        todo = nxt
    done.sort(key=lambda d: d[0])
    edges = np.array([d[0] for d in done] + [done[-1][1]])
    return edges, np.array([d[2] for d in done])


def _projector(n):
    """Matrix taking values at n Gauss nodes to Legendre coefficients."""
    t, w = numerics.gauss_legendre(n)
    m = np.arange(n)
    return (2 * m[:, None] + 1) / 2.0 * (L.legvander(t, n - 1).T * w[None, :])


def _log_sinh(x):
    return x + math.log1p(-math.exp(-2 * x)) - math.log(2.0)


def bound_kernel(r1, r2, states):
    """``sum_n C_n/(4 gamma_n^2) sinh(gamma_n r1) sinh(gamma_n r2)``.

    Plain arithmetic when it cannot overflow, otherwise each term is built
    from ``ln C_n`` and log-sinh values.
    """
    terms = []
    for s in states:
        g = s.gamma
        x1, x2 = g * r1, g * r2
        if x1 == 0 or x2 == 0:
            continue
        lt = s.log_norming - math.log(4 * g * g) + _log_sinh(x1) + _log_sinh(x2)
        if max(x1, x2) < 700 and s.log_norming > -700 and abs(lt) < 700:
            terms.append(s.norming / (4 * g * g) * math.sinh(x1) * math.sinh(x2))
        else:
            terms.append(math.exp(lt) if lt > -745 else 0.0)
    return math.fsum(terms)


def gl_kernel(r1, r2, transform=None, spectrum=None):
    """G(r1, r2); `transform` None means g = 0 (no continuous part)."""
    cont = 0.0
    if transform is not None:
        cont = (transform(r1 - r2) - transform(r1 + r2)) / math.pi
    bound = bound_kernel(r1, r2, spectrum.states) if spectrum is not None else 0.0
    return cont + bound


@dataclass
class GLKernelGrid:
    r: np.ndarray
    G: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def asymmetry(self):
        if self.G.size == 0:
            return 0.0
        scale = np.maximum(np.abs(self.G), np.abs(self.G.T))
        d = np.abs(self.G - self.G.T)
        with np.errstate(invalid="ignore", divide="ignore"):
            rel = np.where(scale > 0, d / scale, 0.0)
        return float(rel.max())


def kernel_matrix(r, transform=None, spectrum=None, meta=None):
    """G on ``r x r``: upper triangle filled in parallel, then mirrored."""
    r = np.asarray(r, dtype=float)
    n = len(r)
    G = np.zeros((n, n))
    pairs = [(i, j) for i in range(n) for j in range(i, n)]
    vals = parallel_map(lambda ij: gl_kernel(r[ij[0]], r[ij[1]], transform, spectrum), pairs)
    for (i, j), v in zip(pairs, vals):
        G[i, j] = G[j, i] = v
    info = dict(meta or {})
    if transform is not None:
        info.setdefault("k_sat", transform.k_sat)
        info.setdefault("k_cut", transform.k_cut)
        info.setdefault("panels", int(max(len(transform.edges) - 1, 0)))
        info.setdefault("nodes_per_panel", transform.n)
        info.setdefault("tail_terms", len(transform.tail))
    info.setdefault("C_n_convention", C_N_CONVENTION)
    if spectrum is not None:
        info.setdefault("spectrum_fingerprint", spectrum.fingerprint)
        info.setdefault("n_bound", len(spectrum))
    return GLKernelGrid(r, G, info)


def export_kernel(grid, path):
    """Write ``# {json metadata}``, ``# r ...`` and the matrix rows (12 significant digits)."""
    meta = dict(grid.meta)
    meta["n"] = int(len(grid.r))
    with open(path, "w") as fh:
        fh.write("# " + json.dumps(meta, sort_keys=True) + "\n")
        if len(grid.r):
            fh.write("# r_angstrom " + " ".join(f"{x:.12g}" for x in grid.r) + "\n")
            for row in grid.G:
                fh.write(" ".join(f"{x:.12g}" for x in row) + "\n")


def read_kernel(path):
    """Inverse of `export_kernel`."""
    with open(path) as fh:
        meta = json.loads(fh.readline()[2:])
        line = fh.readline()
        if not line:
            return GLKernelGrid(np.zeros(0), np.zeros((0, 0)), meta)
        r = np.array([float(x) for x in line.split()[2:]])
        G = np.loadtxt(fh, ndmin=2)
    return GLKernelGrid(r, G, meta)
