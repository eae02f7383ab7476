"""Piecewise Morse reference potential.

Each piece is ``V_k(r) = v + d*(exp(-alpha*(r - r0)) - 1)**2`` on
``[X_k, X_{k+1})`` with ``X_0 = 0`` and ``X_K = inf``. Neighbouring pieces
join with continuous value and slope. The innermost piece may be a
pseudo-Morse wall whose depth sits at the critical value ``C*alpha**2/4``
below which a Morse well loses its last bound state (``C = hbar**2/2m``).
"""
from dataclasses import dataclass, field, replace
import hashlib
import json
import math
import os

import numpy as np
import numba

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

__all__ = [
    "MorseComponent", "ReferencePotential", "Moments", "ConfigError",
    "JoinError", "evaluate", "moments", "smooth_join", "load_config",
    "potential_from_dict", "bundled_config", "free_potential", "isolated_component",
]

JOIN_TOL = 1e-9
ASYMPTOTE_TOL = 1e-12
PSEUDO_TOL = 1e-12


class ConfigError(ValueError):
    """Invalid potential definition."""


class JoinError(ValueError):
    """Continuity equations without a real solution."""


@dataclass(frozen=True)
class MorseComponent:
    """One Morse piece ``v + d*(exp(-alpha*(r-r0)) - 1)**2``.

    ``d`` may be negative (a reversed piece: a barrier instead of a well).
    ``pseudo`` marks the critical-depth wall.
    """

    v: float
    d: float
    alpha: float
    r0: float
    k: int = 0
    pseudo: bool = False

    def __post_init__(self):
        vals = (self.v, self.d, self.alpha, self.r0)
        if not all(math.isfinite(x) for x in vals):
            raise ConfigError(f"component {self.k}: non-finite parameter {vals}")
        if not self.alpha > 0:
            raise ConfigError(f"component {self.k}: alpha must be positive")

    def y(self, r):
        return np.exp(-self.alpha * (np.asarray(r, dtype=float) - self.r0))

    def value(self, r, order=0):
        """V or its derivative of the given order (analytic)."""
        y = self.y(r)
        if order == 0:
            return self.v + self.d * (y - 1.0) ** 2
        return self.d * (-self.alpha) ** order * (2.0 ** order * y * y - 2.0 * y)

    def poly(self):
        """Coefficients (A, B, D) of ``V = A + B*y + D*y**2``."""
        return np.array([self.v + self.d, -2.0 * self.d, self.d])

    @property
    def params(self):
        return dict(v=self.v, d=self.d, alpha=self.alpha, r0=self.r0)


@dataclass(frozen=True)
class ReferencePotential:
    """Ordered Morse pieces, their join points and ``C = hbar**2/2m``.

    Parameters
    ----------
    components : sequence of MorseComponent
        May be empty (free particle, V = 0).
    boundaries : sequence of float
        ``len(components) - 1`` increasing join points.
    c_const : float
        ``hbar**2/2m`` in meV*angstrom**2.
    require_smooth : bool
        Enforce value/slope continuity at the joins. Disable only for
        deliberately discontinuous test potentials (square wells).
    """

    components: tuple
    boundaries: tuple
    c_const: float
    require_smooth: bool = True
    join_report: tuple = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "boundaries", tuple(float(x) for x in self.boundaries))
        comps, bnd = self.components, self.boundaries
        if not self.c_const > 0:
            raise ConfigError("c_const must be positive")
        if comps and len(bnd) != len(comps) - 1:
            raise ConfigError("need exactly one boundary between consecutive components")
        if not comps and bnd:
            raise ConfigError("boundaries given without components")
        if any(b <= a for a, b in zip(bnd[:-1], bnd[1:])) or (bnd and bnd[0] <= 0):
            raise ConfigError("boundaries must be positive and increasing")
        for c in comps:
            if c.pseudo:
                dev = abs(c.d - self.c_const * c.alpha ** 2 / 4) / abs(c.d)
                if dev > PSEUDO_TOL:
                    raise ConfigError(
                        f"component {c.k}: pseudo-Morse constraint d = C*alpha^2/4 "
                        f"violated (relative deviation {dev:.3e})")
        if comps:
            last = comps[-1]
            if abs(last.v + last.d) > ASYMPTOTE_TOL:
                raise ConfigError(
                    f"outer component must vanish at infinity: v + d = {last.v + last.d:.3e}")
        if self.require_smooth:
            for j, res in enumerate(self.join_residuals()):
                for name, val, scale in zip(("value", "slope"), res[:2], res[2:]):
                    if abs(val) > JOIN_TOL * max(1.0, scale):
                        raise ConfigError(
                            f"join at X_{j + 1} = {bnd[j]}: {name} residual {val:.3e}")

    # -- evaluation -----------------------------------------------------

    @property
    def n_components(self):
        return len(self.components)

    def segment(self, r):
        """Index of the component governing each r."""
        return np.searchsorted(np.asarray(self.boundaries), r, side="right")

    def eval(self, r, order=0):
        """V(r) or its derivative (order 0..3), vectorized."""
        if order not in (0, 1, 2, 3):
            raise ValueError("order must be 0, 1, 2 or 3")
        r = np.asarray(r, dtype=float)
        out = np.zeros(r.shape)
        if not self.components:
            return out if out.ndim else float(out)
        seg = self.segment(r)
        for j, c in enumerate(self.components):
            m = seg == j
            if np.any(m):
                out[m] = c.value(r[m], order)
        return out if out.ndim else float(out)

    def __call__(self, r):
        return self.eval(r, 0)

    def join_residuals(self):
        """(dV, dV', |V|, |V'|) at each boundary, left minus right piece."""
        out = []
        for j, x in enumerate(self.boundaries):
            a, b = self.components[j], self.components[j + 1]
            va, vb = float(a.value(x)), float(b.value(x))
            da, db = float(a.value(x, 1)), float(b.value(x, 1))
            out.append((va - vb, da - db, abs(vb), abs(db)))
        return out

    def segments(self):
        """List of ``(lo, hi, component)`` covering [0, inf)."""
        edges = (0.0,) + self.boundaries + (math.inf,)
        return [(edges[j], edges[j + 1], c) for j, c in enumerate(self.components)]

    def packed(self):
        """Flat parameter array for the compiled evaluators.

        Layout ``[K, X_1..X_{K-1}, (v, d, alpha, r0) * K]``.
        """
        K = len(self.components)
        arr = [float(K)] + list(self.boundaries)
        for c in self.components:
            arr += [c.v, c.d, c.alpha, c.r0]
        return np.array(arr)

    def fingerprint(self):
        """Short hash of all parameters."""
        blob = json.dumps(dict(
            c=repr(self.c_const), x=[repr(x) for x in self.boundaries],
            comps=[[repr(getattr(c, f)) for f in ("v", "d", "alpha", "r0")]
                   for c in self.components]), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    @property
    def v_zero(self):
        return float(self.eval(0.0))


def evaluate(pot, r, order=0):
    """V(r), V'(r), V''(r) or V'''(r) of `pot`."""
    return pot.eval(r, order)


def free_potential(c_const=1.0):
    """V = 0 everywhere."""
    return ReferencePotential((), (), c_const)


def isolated_component(pot, j):
    """Component `j` alone, shifted by a constant so it vanishes at infinity."""
    c = pot.components[j]
    lone = MorseComponent(v=-c.d, d=c.d, alpha=c.alpha, r0=c.r0, k=c.k, pseudo=c.pseudo)
    return ReferencePotential((lone,), (), pot.c_const, require_smooth=False)


# ---------------------------------------------------------------------------
# compiled evaluators (layout of ReferencePotential.packed)

@numba.njit(cache=True)
def packed_value(r, p):
    K = int(p[0])
    if K == 0:
        return 0.0
    j = 0
    while j < K - 1 and r >= p[1 + j]:
        j += 1
    b = K + 4 * j
    y = math.exp(-p[b + 2] * (r - p[b + 3]))
    return p[b] + p[b + 1] * (y - 1.0) ** 2


# ---------------------------------------------------------------------------
# moments

@dataclass(frozen=True)
class Moments:
    """Integrals over (0, inf) and derivatives at the origin."""

    W: float
    U: float
    T3: float
    DW: float
    v0: float
    v1: float
    v2: float
    v3: float


def _ypow_integral(c, lo, hi, m):
    """Integral of y**m over [lo, hi] for the component's y (m >= 1)."""
    ya = math.exp(-m * c.alpha * (lo - c.r0))
    yb = 0.0 if math.isinf(hi) else math.exp(-m * c.alpha * (hi - c.r0))
    return (ya - yb) / (m * c.alpha)


def poly_integral_terms(pot, polys):
    """Terms of the integral of ``sum_m P[m] y**m`` summed over segments.

    `polys` is a list, per component, of y-polynomial coefficient arrays.
    Returns the individual terms so callers can use compensated summation.
    """
    terms = []
    for (lo, hi, c), P in zip(pot.segments(), polys):
        for m, coef in enumerate(P):
            if coef == 0.0:
                continue
            if m == 0:
                if math.isinf(hi):
                    raise ValueError("constant term on the unbounded segment")
                terms.append(coef * (hi - lo))
            else:
                terms.append(coef * _ypow_integral(c, lo, hi, m))
    return terms


def moments(pot):
    """Closed-form W, U, T3, DW and the derivatives of V at r = 0.

    On each piece ``V = A + B y + D y**2`` and ``dy/dr = -alpha y``, so all
    integrands are polynomials in y with elementary antiderivatives.
    """
    if not pot.components:
        return Moments(*([0.0] * 8))
    P = np.polynomial.polynomial
    base = [c.poly() for c in pot.components]
    # V' = -alpha (B y + 2 D y^2)
    dpoly = [-c.alpha * np.array([0.0, c.poly()[1], 2 * c.poly()[2]]) for c in pot.components]
    W = math.fsum(poly_integral_terms(pot, base))
    U = math.fsum(poly_integral_terms(pot, [P.polymul(b, b) for b in base]))
    T3 = math.fsum(poly_integral_terms(pot, [P.polymul(P.polymul(b, b), b) for b in base]))
    DW = math.fsum(poly_integral_terms(pot, [P.polymul(d, d) for d in dpoly]))
    ders = [float(pot.eval(0.0, n)) for n in range(4)]
    return Moments(W, U, T3, DW, *ders)


# ---------------------------------------------------------------------------
# joins

def smooth_join(anchor, boundary, value, slope, free=("v", "r0"), d_rule=None):
    """Solve two parameters of `anchor` so it matches V and V' at `boundary`.

    Parameters
    ----------
    anchor : MorseComponent
        Template; its non-free parameters are kept and its free ones pick
        the branch when two real solutions exist.
    boundary : float
    value, slope : float
        Target V(X) and V'(X) from the neighbouring piece.
    free : tuple of str
        ``("v", "r0")`` or ``("v", "d")``.
    d_rule : {None, "-v"}
        With ``"-v"`` the depth is tied to the offset (``d = -v``), which
        makes the piece vanish at infinity.

    Returns
    -------
    MorseComponent

    Raises
    ------
    JoinError
    """
    X = float(boundary)
    a = anchor.alpha
    free = tuple(sorted(free))
    if free == ("r0", "v") and d_rule == "-v":
        if value == 0.0:
            raise JoinError("zero value cannot be matched with d = -v")
        rho = slope / value
        den = 2 * a + rho
        y = 2 * (rho + a) / den if den != 0 else -1.0
        if not (y > 0 and y != 2):
            raise JoinError(f"no real join: y = {y}")
        v = value / (y * (2 - y))
        return replace(anchor, v=v, d=-v, r0=X + math.log(y) / a)
    if free == ("r0", "v"):
        d = anchor.d
        if d == 0:
            raise JoinError("cannot place a flat piece by its centre")
        disc = 1 - 2 * slope / (a * d)
        if disc < 0:
            raise JoinError(f"no real join: discriminant {disc:.3e}")
        roots = [(1 + s * math.sqrt(disc)) / 2 for s in (1, -1)]
        roots = [y for y in roots if y > 0]
        if not roots:
            raise JoinError("no positive y root")
        y_ref = math.exp(-a * (X - anchor.r0))
        y = min(roots, key=lambda t: abs(t - y_ref))
        v = value - d * (y - 1) ** 2
        return replace(anchor, v=v, r0=X + math.log(y) / a)
    if free == ("d", "v"):
        y = math.exp(-a * (X - anchor.r0))
        den = -2 * a * y * (y - 1)
        if den == 0:
            if slope != 0:
                raise JoinError("slope cannot be matched at the piece centre")
            d = anchor.d
        else:
            d = slope / den
        return replace(anchor, v=value - d * (y - 1) ** 2, d=d)
    raise ValueError(f"unsupported free pair {free}")


# ---------------------------------------------------------------------------
# configuration

def _num(x, what):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ConfigError(f"{what}: expected a number, got {x!r}")
    return float(x)


def potential_from_dict(cfg):
    """Build a ReferencePotential from a parsed configuration mapping.

    Pieces listing ``solve = [..]`` are re-derived from their already
    fixed neighbour by `smooth_join`; the printed values of solved
    parameters are kept only for comparison in ``join_report``.
    """
    units = cfg.get("units", {})
    if units.get("energy", "meV") != "meV" or units.get("length", "angstrom") != "angstrom":
        raise ConfigError("only meV / angstrom units are supported")
    raw = cfg.get("components", [])
    bnd = [_num(x, "boundaries") for x in cfg.get("boundaries", [])]
    if raw and len(bnd) != len(raw) - 1:
        raise ConfigError("need exactly one boundary between consecutive components")
    raw = sorted(raw, key=lambda c: c.get("k", 0))
    if [c.get("k", i) for i, c in enumerate(raw)] != list(range(len(raw))):
        raise ConfigError("component indices must be 0..K-1")
    c_const = cfg.get("c_const")
    c_const = None if c_const is None else _num(c_const, "c_const")
    # C from the pseudo-Morse piece when not given
    for c in raw:
        if c.get("kind") == "pseudo-morse" and c_const is None:
            c_const = 4 * _num(c["d"], "d") / _num(c["alpha"], "alpha") ** 2
    if c_const is None:
        c_const = _num(cfg.get("c_const_default", 1.0), "c_const_default")

    comps = [None] * len(raw)
    printed = {}
    for i, c in enumerate(raw):
        kind = c.get("kind", "morse")
        if kind not in ("morse", "pseudo-morse"):
            raise ConfigError(f"component {i}: unknown kind {kind!r}")
        alpha = _num(c.get("alpha"), f"component {i} alpha")
        v = _num(c.get("v", 0.0), f"component {i} v")
        r0 = _num(c.get("r0", 0.0), f"component {i} r0")
        d = c.get("d")
        rule = None
        if kind == "pseudo-morse":
            d_fixed = c_const * alpha ** 2 / 4
            if d is not None and abs(_num(d, "d") - d_fixed) > PSEUDO_TOL * abs(d_fixed):
                raise ConfigError(
                    f"component {i}: pseudo-Morse constraint d = C*alpha^2/4 violated "
                    f"(d = {d}, C*alpha^2/4 = {d_fixed!r})")
            d = d_fixed
        elif d == "-v":
            rule = "-v"
            d = -v
        elif d is None:
            raise ConfigError(f"component {i}: missing d")
        else:
            d = _num(d, f"component {i} d")
        solve = tuple(c.get("solve", ()))
        comps[i] = (MorseComponent(v, d, alpha, r0, i, kind == "pseudo-morse"), solve, rule)
        printed[i] = dict(v=v, d=d, alpha=alpha, r0=r0)

    fixed = [not s for _, s, _ in comps]
    if comps and not any(fixed):
        raise ConfigError("at least one component must be fully specified")
    report = []
    changed = True
    while changed:
        changed = False
        for i in range(len(comps)):
            if fixed[i]:
                continue
            for nb, x in ((i - 1, i - 1), (i + 1, i)):
                if 0 <= nb < len(comps) and fixed[nb]:
                    X = bnd[x]
                    other = comps[nb][0]
                    comp, solve, rule = comps[i]
                    try:
                        new = smooth_join(comp, X, float(other.value(X)),
                                          float(other.value(X, 1)), solve, rule)
                    except JoinError as exc:
                        raise ConfigError(f"component {i}: {exc}") from None
                    comps[i] = (new, solve, rule)
                    fixed[i] = changed = True
                    for name in solve:
                        report.append((i, name, printed[i][name], new.params[name]))
                    break
    out = [c for c, _, _ in comps]
    for i, name, was, now in report:
        if abs(now - was) > 1e-3 * max(1.0, abs(was)):
            raise ConfigError(
                f"component {i}: printed {name} = {was!r} far from the joined value {now!r}")
    return ReferencePotential(out, bnd, c_const, bool(cfg.get("require_smooth", True)),
                              tuple(report))


def load_config(path):
    """Read a TOML potential definition (see ``data/xe2.cfg``)."""
    try:
        with open(path, "rb") as fh:
            cfg = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return potential_from_dict(cfg)


def bundled_config(name="xe2"):
    """Path of a configuration shipped with the package."""
    path = os.path.join(os.path.dirname(__file__), "data", f"{name}.cfg")
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    return path
