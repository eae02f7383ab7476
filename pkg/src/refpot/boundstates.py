"""Discrete spectrum of the radial equation ``-C u'' + V u = E u``.

The regular solution ``phi`` (``phi(r)/r -> 1`` at the origin) grows by
thousands of e-folds through the repulsive wall, so it is carried in log
form there: a Riccati system for ``u = phi'/phi`` and ``L = ln phi`` is
integrated from the origin to a point ``r_m`` inside the wall, then a
Numerov recursion on a uniform grid takes over. Eigenvalues are bracketed
by Sturm node counting and refined on the Wronskian of the outward and
inward solutions at the outermost turning point.
"""
from dataclasses import dataclass, field, replace
import csv
import math

import numba
import numpy as np

from . import numerics
from .numerics import Tolerance, find_root
from .potential import packed_value

__all__ = [
    "BoundState", "BoundSpectrum", "WallState", "wall_state", "wall_radius",
    "regular_solution", "count_nodes", "find_eigenvalues", "norming_constants",
    "eigenfunction", "export_csv", "MissedLevelError",
]

WALL_TOL = Tolerance(1e-13, 1e-12, 50_000_000)
KAPPA_WALL = 30.0   # 1/angstrom at the hand-over point


class MissedLevelError(RuntimeError):
    """Node counting and Wronskian refinement disagree."""


@dataclass(frozen=True)
class BoundState:
    """One level: energy (meV), gamma = sqrt(-E/C) (1/angstrom) and
    ``log_norming = ln C_n`` with ``C_n = 1/int phi^2`` for the regular
    solution normalized as ``phi ~ r`` at the origin."""

    n: int
    energy: float
    gamma: float
    log_norming: float = math.nan
    nodes: int = -1

    @property
    def norming(self):
        """C_n as a float (underflows to 0 for very deep walls)."""
        return math.exp(self.log_norming) if self.log_norming > -745 else 0.0


@dataclass(frozen=True)
class BoundSpectrum:
    states: tuple
    fingerprint: str = ""
    scan_count: int = 0

    @property
    def energies(self):
        return np.array([s.energy for s in self.states])

    @property
    def gammas(self):
        return np.array([s.gamma for s in self.states])

    def __len__(self):
        return len(self.states)

    def power_sum(self, m):
        """sum_n E_n**m (compensated)."""
        return math.fsum(s.energy ** m for s in self.states)


# ---------------------------------------------------------------------------
# wall: Riccati system

@numba.njit(nogil=True)
def _wall_rhs(r, y, p, out):
    # y = [u, L, S, Jre, Jim]; p = [E, k, C, packed...]
    V = packed_value(r, p[3:])
    q = (V - p[0]) / p[2]
    u = y[0]
    out[0] = q - u * u
    out[1] = u
    out[2] = 1.0 - 2.0 * u * y[2]
    c = math.cos(p[1] * r)
    s = math.sin(p[1] * r)
    out[3] = c * V - u * y[3]
    out[4] = s * V - u * y[4]


@dataclass(frozen=True)
class WallState:
    """Regular solution data at the hand-over radius ``r_m``.

    ``u = phi'/phi``, ``L = ln phi``, ``S = int_0^r_m phi^2 / phi(r_m)^2``,
    ``J = int_0^r_m exp(i k r) V phi / phi(r_m)``; ``ratio = phi(r_m+h)/phi(r_m)``.
    """

    r_m: float
    u: float
    L: float
    S: float
    J: complex
    ratio: float


def wall_radius(pot, E, kappa=KAPPA_WALL):
    """Radius inside the wall where ``(V - E)/C = kappa**2`` (0 if none)."""
    target = E + kappa * kappa * pot.c_const
    if not pot.components or pot.v_zero <= target:
        return 0.0
    # V decreases from the origin into the well; find the first crossing
    r = np.linspace(0.0, max(pot.boundaries + (10.0,)), 20001)
    v = pot(r)
    idx = np.where(v <= target)[0]
    if len(idx) == 0:
        return 0.0
    i = idx[0]
    return find_root(lambda x: float(pot(x)) - target, r[i - 1], r[i],
                     Tolerance(1e-14, 1e-14))


def wall_state(pot, E, h, k=0.0, r_m=None, tol=None):
    """Integrate the Riccati system from the origin to ``r_m`` (and r_m+h)."""
    if r_m is None:
        r_m = wall_radius(pot, E)
    C = pot.c_const
    q0 = (pot.v_zero - E) / C
    if r_m == 0.0:
        return WallState(0.0, math.inf, -math.inf, 0.0, 0j, math.nan)
    rho = min(1e-3 / math.sqrt(abs(q0)) if q0 != 0 else 1e-6, 1e-6)
    phi = rho + q0 * rho ** 3 / 6
    dphi = 1 + q0 * rho ** 2 / 2
    v0 = pot.v_zero
    y0 = [dphi / phi, math.log(phi), rho / 3, v0 * rho / 2, 0.0]
    p = np.concatenate([[E, k, C], pot.packed()])
    res = numerics.integrate_ode(_wall_rhs, y0, rho, r_m + h, tol or WALL_TOL,
                                 params=p, r_eval=[r_m, r_m + h])
    a, b = res.y_eval
    return WallState(r_m, a[0], a[1], a[2], complex(a[3], a[4]), math.exp(b[1] - a[1]))


# ---------------------------------------------------------------------------
# shooting

def _wkb_wall(pot, E, h):
    """Cheap wall state for node counting: WKB growth ratio at ``r_m``."""
    r_m = wall_radius(pot, E)
    if r_m == 0.0:
        return WallState(0.0, math.inf, -math.inf, 0.0, 0j, math.nan)
    q = (float(pot(r_m)) - E) / pot.c_const
    return WallState(r_m, math.sqrt(q), math.nan, math.nan, complex(math.nan),
                     math.exp(math.sqrt(q) * h))


def regular_solution(pot, E, h, r_max, k=0.0, ws=None):
    """Regular solution on ``r_m + h*i`` up to `r_max` in scaled form.

    Returns ``(r, u, s, ws)``: ``phi(r) = exp(ws.L) * u * exp(s)`` when the
    wall is present, ``phi = u * exp(s)`` otherwise.
    """
    if ws is None:
        ws = wall_state(pot, E, h, k)
    n = int(math.ceil((r_max - ws.r_m) / h)) + 1
    r = ws.r_m + h * np.arange(n)
    if ws.r_m == 0.0:
        u, s = numerics.numerov_scaled(pot, E, r, "outward", check=False)
    else:
        u, s = numerics.numerov_scaled(pot, E, r, "outward", start=(1.0, ws.ratio),
                                       check=False)
    return r, u, s, ws


@numba.njit(cache=True)
def _sign_changes(u):
    n = 0
    last = 0.0
    for x in u:
        if x != 0.0:
            if last != 0.0 and (x > 0) != (last > 0):
                n += 1
            last = x
    return n


def count_nodes(pot, E, h=1e-3, r_max=150.0):
    """Sign changes of the regular solution on (0, r_max)."""
    r, u, s, _ = regular_solution(pot, E, h, r_max, ws=_wkb_wall(pot, E, h))
    return _sign_changes(u)


def _outer_turning(pot, E, r_max):
    r = np.linspace(0.0, r_max, int(r_max * 200) + 1)
    allowed = np.where(pot(r) < E)[0]
    if len(allowed) == 0:
        raise ValueError(f"no classically allowed region at E={E}")
    return r[allowed[-1]]


def _mismatch_factory(pot, h, r_c, r_max, k=0.0):
    def mismatch(E):
        r, uo, so, _ = regular_solution(pot, E, h, r_c + 2 * h, k)
        i = len(r) - 2
        gamma = math.sqrt(max(-E, 1e-300) / pot.c_const)
        n_in = int(math.ceil((r_max - r[0]) / h)) + 1
        rin = r[0] + h * np.arange(n_in)
        ui, si = numerics.numerov_scaled(
            pot, E, rin, "inward", start=(1e-200, 1e-200 * math.exp(gamma * h)),
            check=False)
        a0 = uo[i]
        a1 = uo[i + 1] * math.exp(so[i + 1] - so[i])
        b0 = ui[i]
        b1 = ui[i + 1] * math.exp(si[i + 1] - si[i])
        return (a1 * b0 - a0 * b1) / (math.hypot(a0, a1) * math.hypot(b0, b1))
    return mismatch


def find_eigenvalues(pot, window=None, h=1e-3, r_max=150.0, tail_lengths=40.0,
                     tol=None):
    """All bound states with energies in ``window = (E_lo, E_hi)``.

    Parameters
    ----------
    window : (float, float), optional
        Defaults to (min V - 1, 0). ``E_lo`` must lie below the potential
        minimum.
    h : float
        Numerov step.
    r_max : float
        Box radius used for node counting.
    tail_lengths : float
        Each level is refined on a grid reaching ``tail_lengths/gamma``
        beyond its outer turning point.

    Returns
    -------
    BoundSpectrum

    Raises
    ------
    MissedLevelError
        If a bracket from node counting does not contain exactly one
        Wronskian sign change.
    """
    rr = np.linspace(0.0, r_max, 200001)
    vmin = float(np.min(pot(rr)))
    if window is None:
        window = (vmin - 1.0, 0.0)
    e_lo, e_hi = window
    if e_lo >= vmin:
        raise ValueError("window must start below the potential minimum")
    if not pot.components or vmin >= 0:
        return BoundSpectrum((), pot.fingerprint(), 0)
    n_lo = count_nodes(pot, e_lo, h, r_max)
    n_hi = count_nodes(pot, e_hi, h, r_max)
    if n_hi <= n_lo:
        return BoundSpectrum((), pot.fingerprint(), 0)
    # thresholds T_n: lowest E with more than n nodes; every count is
    # shared between all thresholds
    seen = {e_lo: n_lo, e_hi: n_hi}
    thresholds = []
    for n in range(n_lo, n_hi):
        a = max(e for e, c in seen.items() if c <= n)
        b = min(e for e, c in seen.items() if c > n)
        while b - a > 1e-6 * abs(b) + 1e-12:
            m = 0.5 * (a + b)
            seen[m] = c = count_nodes(pot, m, h, r_max)
            if c > n:
                b = m
            else:
                a = m
        thresholds.append(0.5 * (a + b))
    states = []
    tol = tol or Tolerance(1e-13, 1e-13)
    for j, n in enumerate(range(n_lo, n_hi)):
        T = thresholds[j]
        lo = e_lo if j == 0 else 0.5 * (thresholds[j - 1] + T)
        hi = e_hi if j == len(thresholds) - 1 else 0.5 * (T + thresholds[j + 1])
        hi = min(hi, -1e-12)
        gamma = math.sqrt(-T / pot.c_const)
        r_c = _outer_turning(pot, T, r_max)
        r_out = r_c + tail_lengths / gamma
        f = _mismatch_factory(pot, h, r_c, r_out)
        fa, fb = f(lo), f(hi)
        if fa * fb > 0:
            raise MissedLevelError(
                f"level {n}: no Wronskian sign change in [{lo}, {hi}] "
                f"(node threshold {T})")
        E = find_root(f, lo, hi, tol)
        states.append(BoundState(n, E, math.sqrt(-E / pot.c_const), nodes=n))
    energies = [s.energy for s in states]
    if any(b <= a for a, b in zip(energies[:-1], energies[1:])):
        raise MissedLevelError("eigenvalues not strictly increasing")
    return BoundSpectrum(tuple(states), pot.fingerprint(), n_hi - n_lo)


def _eigen_arrays(pot, E, h, tail_lengths=40.0, r_max=400.0, r_m=None, r_end=None):
    """Eigenfunction pieces: grid, log-scaled values, wall data, gamma."""
    gamma = math.sqrt(-E / pot.c_const)
    r_c = _outer_turning(pot, E, r_max)
    R = r_c + tail_lengths / gamma if r_end is None else r_end
    ws = wall_state(pot, E, h, r_m=r_m) if r_m is not None else None
    r, uo, so, ws = regular_solution(pot, E, h, r_c + 2 * h, ws=ws)
    i = len(r) - 2
    n_in = int(math.ceil((R - r[0]) / h)) + 1
    rin = r[0] + h * np.arange(n_in)
    ui, si = numerics.numerov_scaled(pot, E, rin, "inward",
                                     start=(1e-200, 1e-200 * math.exp(gamma * h)),
                                     check=False)
    # log|psi| on the full grid, psi(r_m) = 1 (or phi itself with no wall)
    lo = np.log(np.abs(uo[: i + 1]) + 1e-300) + so[: i + 1]
    sgn_o = np.sign(uo[: i + 1])
    scale = math.log(abs(uo[i])) + so[i] - (math.log(abs(ui[i])) + si[i])
    sgn_m = np.sign(uo[i]) * np.sign(ui[i])
    li = np.log(np.abs(ui[i + 1:]) + 1e-300) + si[i + 1:] + scale
    sgn_i = np.sign(ui[i + 1:]) * sgn_m
    logabs = np.concatenate([lo, li])
    sign = np.concatenate([sgn_o, sgn_i])
    return rin, logabs, sign, ws, gamma


def _simpson(y, h):
    n = len(y)
    if n % 2 == 0:
        # Simpson on the first n-1 points, 3/8 rule on the last four
        return _simpson(y[:-3], h) + 3 * h / 8 * (y[-4] + 3 * y[-3] + 3 * y[-2] + y[-1])
    return h / 3 * (y[0] + y[-1] + 4 * y[1:-1:2].sum() + 2 * y[2:-1:2].sum())


def norming_constants(pot, spectrum, h=1e-3, tail_lengths=40.0):
    """Fill ``log_norming = -ln int phi^2`` for each level.

    The integral is the wall part from the Riccati system plus Simpson
    quadrature of the Numerov solution and the analytic exponential tail
    ``psi(R)^2/(2 gamma)`` beyond the grid.
    """
    out = []
    for st in spectrum.states:
        r, logabs, sign, ws, gamma = _eigen_arrays(pot, st.energy, h, tail_lengths)
        top = logabs.max()
        w = np.exp(2 * (logabs - top))
        integral = _simpson(w, h) + w[-1] / (2 * gamma)
        tail_rel = w[-1] / (2 * gamma) / integral
        if tail_rel > 1e-8:
            raise numerics.IntegrationError(
                f"level {st.n}: normalization tail {tail_rel:.2e} too large; extend the grid")
        # int phi^2 = exp(2 L) * (S + int psi^2), psi = phi/phi(r_m)
        if ws.r_m == 0.0:
            log_norm = math.log(integral) + 2 * top
        else:
            log_norm = 2 * ws.L + math.log(ws.S + integral * math.exp(2 * top)) \
                if top < 300 else 2 * ws.L + 2 * top + math.log(integral + ws.S * math.exp(-2 * top))
        out.append(replace(st, log_norming=-log_norm))
    return replace(spectrum, states=tuple(out))


def eigenfunction(pot, state, h=1e-3, tail_lengths=40.0, r_start=None, r_end=None):
    """Unit-normalized eigenfunction samples ``(r, psi)``.

    The grid runs from the wall radius (or `r_start`, which must lie deep in
    the wall) to `tail_lengths` decay lengths past the outer turning point
    (or `r_end`). Passing both gives several levels a common grid.
    """
    r, logabs, sign, ws, gamma = _eigen_arrays(pot, state.energy, h, tail_lengths,
                                               r_m=r_start, r_end=r_end)
    top = logabs.max()
    w = sign * np.exp(logabs - top)
    norm = math.sqrt(_simpson(w * w, h) + w[-1] ** 2 / (2 * gamma))
    return r, w / norm


def export_csv(spectrum, path):
    """Write n, E_n (meV), gamma (1/angstrom), C_n and ln C_n."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["n", "E_meV", "gamma_per_angstrom", "C_n", "ln_C_n"])
        for s in spectrum.states:
            wr.writerow([s.n, f"{s.energy:.12g}", f"{s.gamma:.12g}",
                         f"{s.norming:.12g}", f"{s.log_norming:.12g}"])
