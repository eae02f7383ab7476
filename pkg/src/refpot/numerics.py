"""Shared numerical plumbing.

Adaptive ODE integration (8th order embedded Runge-Kutta pair compiled with
numba), Gauss-Legendre based adaptive and principal-value quadrature,
Filon-type oscillatory quadrature, bracketed root refinement and a Numerov
integrator for second order linear equations.
"""
from dataclasses import dataclass
import heapq
import math

import mpmath
import numpy as np
import numba
from scipy import optimize, special
from scipy.integrate._ivp import dop853_coefficients as _dop

__all__ = [
    "Tolerance", "IntegrationError", "ODEResult", "integrate_ode",
    "gauss_legendre", "fixed_quadrature", "adaptive_quadrature",
    "principal_value", "oscillatory_integral", "cos_power_tail",
    "find_root", "numerov", "numerov_scaled",
]


@dataclass(frozen=True)
class Tolerance:
    """Absolute/relative tolerance pair plus an evaluation budget."""

    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_evals: int = 20_000_000

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_evals < 1:
            raise ValueError("max_evals must be positive")

    def replace(self, **kw):
        d = dict(abs_tol=self.abs_tol, rel_tol=self.rel_tol, max_evals=self.max_evals)
        d.update(kw)
        return Tolerance(**d)


DEFAULT_TOL = Tolerance()


class IntegrationError(RuntimeError):
    """Raised when an integrator cannot meet its tolerance."""


# ---------------------------------------------------------------------------
# DOP853 core

_A = np.ascontiguousarray(_dop.A[:_dop.N_STAGES, :_dop.N_STAGES])
_B = np.ascontiguousarray(_dop.B)
_C = np.ascontiguousarray(_dop.C[:_dop.N_STAGES])
_E3 = np.ascontiguousarray(_dop.E3)
_E5 = np.ascontiguousarray(_dop.E5)
_NS = _dop.N_STAGES


@numba.njit(cache=True)
def _rms_err(K, h, y, y_new, atol, rtol, E3, E5):
    n = y.shape[0]
    e5 = 0.0
    e3 = 0.0
    for i in range(n):
        sc = atol + rtol * max(abs(y[i]), abs(y_new[i]))
        s5 = 0.0
        s3 = 0.0
        for j in range(K.shape[0]):
            s5 += K[j, i] * E5[j]
            s3 += K[j, i] * E3[j]
        e5 += (s5 / sc) ** 2
        e3 += (s3 / sc) ** 2
    if e5 == 0.0 and e3 == 0.0:
        return 0.0
    return abs(h) * e5 / math.sqrt((e5 + 0.01 * e3) * n)


def _dop853_impl(rhs, y0, r0, r1, p, atol, rtol, h0, hmax, max_steps, r_eval,
                 A, B, C, E3, E5):
    ns = B.shape[0]
    n = y0.shape[0]
    direction = 1.0 if r1 >= r0 else -1.0
    y = y0.copy()
    y_new = np.empty(n)
    ytmp = np.empty(n)
    K = np.zeros((ns + 1, n))
    f0 = np.empty(n)
    out_eval = np.empty((r_eval.shape[0], n))
    ie = 0
    r = r0
    while ie < r_eval.shape[0] and (r_eval[ie] - r0) * direction <= 0.0:
        out_eval[ie, :] = y
        ie += 1
    rhs(r, y, p, f0)
    if h0 <= 0.0:
        # crude initial step from the derivative scale
        d0 = 0.0
        d1 = 0.0
        for i in range(n):
            sc = atol + rtol * abs(y[i])
            d0 += (y[i] / sc) ** 2
            d1 += (f0[i] / sc) ** 2
        d0 = math.sqrt(d0 / n)
        d1 = math.sqrt(d1 / n)
        if d0 < 1e-5 or d1 < 1e-5:
            h0 = 1e-6
        else:
            h0 = 0.01 * d0 / d1
        h0 = min(h0, abs(r1 - r0), hmax)
    h = h0
    nsteps = 0
    nrej = 0
    status = 0
    if r1 == r0:
        return y, out_eval, 0, 0, 0
    while (r1 - r) * direction > 0.0:
        if nsteps + nrej >= max_steps:
            status = 1
            break
        min_step = 10.0 * abs(np.nextafter(r, direction * np.inf) - r)
        if h < min_step:
            status = 2
            break
        h = min(h, hmax)
        target = r1
        if ie < r_eval.shape[0]:
            target = r_eval[ie]
        clipped = False
        if h >= abs(target - r):
            h_use = target - r
            clipped = True
        else:
            h_use = h * direction
        for i in range(n):
            K[0, i] = f0[i]
        for s in range(1, ns):
            for i in range(n):
                acc = 0.0
                for j in range(s):
                    acc += A[s, j] * K[j, i]
                ytmp[i] = y[i] + h_use * acc
            rhs(r + C[s] * h_use, ytmp, p, K[s])
        for i in range(n):
            acc = 0.0
            for j in range(ns):
                acc += B[j] * K[j, i]
            y_new[i] = y[i] + h_use * acc
        r_new = target if clipped else r + h_use
        rhs(r_new, y_new, p, K[ns])
        err = _rms_err(K, h_use, y, y_new, atol, rtol, E3, E5)
        if err <= 1.0:
            if err == 0.0:
                fac = 10.0
            else:
                fac = min(10.0, 0.9 * err ** (-1.0 / 8.0))
            if not clipped:
                h = abs(h_use) * fac
            else:
                h = max(h, abs(h_use) * fac)
            r = r_new
            for i in range(n):
                y[i] = y_new[i]
                f0[i] = K[ns, i]
            nsteps += 1
            while ie < r_eval.shape[0] and (r_eval[ie] - r) * direction <= 0.0:
                out_eval[ie, :] = y
                ie += 1
        else:
            nrej += 1
            h = abs(h_use) * max(0.2, 0.9 * err ** (-1.0 / 8.0))
    return y, out_eval, nsteps, nrej, status


_dop853_jit = numba.njit(cache=False)(_dop853_impl)


@dataclass
class ODEResult:
    """Solution of an initial value problem.

    Attributes
    ----------
    y : ndarray
        State at the end point.
    r_eval, y_eval : ndarray
        Requested output abscissae and the states there.
    n_steps, n_rejected : int
        Step counters.
    """

    y: np.ndarray
    r_eval: np.ndarray
    y_eval: np.ndarray
    n_steps: int
    n_rejected: int


def integrate_ode(rhs, y0, r0, r1, tol=None, params=None, r_eval=None,
                  h0=0.0, max_step=np.inf):
    """Integrate ``y' = rhs(r, y)`` from `r0` to `r1`.

    Uses the Dormand-Prince 8(5,3) embedded pair with step-size control on
    the mixed error norm ``abs_tol + rel_tol*|y|``.

    Parameters
    ----------
    rhs : callable
        Either a numba-jitted ``rhs(r, y, p, out)`` writing the derivative
        into `out`, or a plain Python ``rhs(r, y)`` returning it.
    y0 : array_like
        Initial state.
    r0, r1 : float
        Integration interval (either direction).
    tol : Tolerance, optional
    params : ndarray, optional
        Parameter vector passed as `p` to a jitted rhs.
    r_eval : array_like, optional
        Monotone points where the state is recorded. Steps are clipped to
        land on them exactly.
    h0 : float
        Initial step, automatic when zero.
    max_step : float

    Returns
    -------
    ODEResult

    Raises
    ------
    IntegrationError
        On step-size underflow or exhausted evaluation budget.
    """
    tol = tol or DEFAULT_TOL
    y0 = np.atleast_1d(np.asarray(y0, dtype=float)).copy()
    p = np.zeros(1) if params is None else np.ascontiguousarray(params, dtype=float)
    re = np.zeros(0) if r_eval is None else np.ascontiguousarray(r_eval, dtype=float)
    max_steps = max(1, tol.max_evals // 13)
    args = (y0, float(r0), float(r1), p, tol.abs_tol, tol.rel_tol, float(h0),
            float(max_step), max_steps, re, _A, _B, _C, _E3, _E5)
    if isinstance(rhs, numba.core.registry.CPUDispatcher):
        y, ye, ns, nr, status = _dop853_jit(rhs, *args)
    else:
        def wrapped(r, y, p, out):
            out[:] = rhs(r, y)
        y, ye, ns, nr, status = _dop853_impl(wrapped, *args)
    if status == 1:
        raise IntegrationError(f"evaluation budget exhausted near r1={r1}")
    if status == 2:
        raise IntegrationError(f"step size underflow between {r0} and {r1}")
    return ODEResult(y, re, ye, int(ns), int(nr))


# ---------------------------------------------------------------------------
# Quadrature

_GL_CACHE = {}


def gauss_legendre(n):
    """Gauss-Legendre nodes and weights on [-1, 1] (cached)."""
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def fixed_quadrature(f, edges, n=20):
    """Composite n-point Gauss-Legendre rule over panels given by `edges`.

    `f` must accept an array of abscissae.
    """
    edges = np.asarray(edges, dtype=float)
    t, w = gauss_legendre(n)
    c = 0.5 * (edges[1:] + edges[:-1])
    h = 0.5 * (edges[1:] - edges[:-1])
    x = c[:, None] + h[:, None] * t[None, :]
    vals = np.asarray(f(x.ravel()), dtype=float).reshape(x.shape)
    return math.fsum((h[:, None] * w[None, :] * vals).ravel())


def _adaptive_gl(f, edges, tol, n):
    """Globally adaptive panel bisection; returns (value, error estimate)."""
    t, w = gauss_legendre(n)

    def panel(a, b):
        c, h = 0.5 * (a + b), 0.5 * (b - a)
        xs = np.concatenate([c + h * t, 0.5 * (a + c) + 0.5 * h * t,
                             0.5 * (c + b) + 0.5 * h * t])
        v = np.asarray(f(xs), dtype=float)
        coarse = h * np.dot(w, v[:n])
        fine = 0.5 * h * (np.dot(w, v[n:2 * n]) + np.dot(w, v[2 * n:]))
        return fine, abs(fine - coarse)

    heap = []
    evals = 0
    for a, b in zip(edges[:-1], edges[1:]):
        val, err = panel(a, b)
        evals += 3 * n
        heapq.heappush(heap, (-err, a, b, val))
    while True:
        total = math.fsum(item[3] for item in heap)
        err_total = sum(-item[0] for item in heap)
        if err_total <= max(tol.abs_tol, tol.rel_tol * abs(total)):
            return total, err_total
        if evals >= tol.max_evals:
            raise IntegrationError(
                f"quadrature did not converge: value {total}, error {err_total}")
        _, a, b, _ = heapq.heappop(heap)
        m = 0.5 * (a + b)
        if not (a < m < b):
            raise IntegrationError("quadrature panel underflow")
        for lo, hi in ((a, m), (m, b)):
            val, err = panel(lo, hi)
            evals += 3 * n
            heapq.heappush(heap, (-err, lo, hi, val))


def adaptive_quadrature(f, a, b, tol=None, breakpoints=None, n=10):
    """Adaptive Gauss-Legendre quadrature of a vectorized integrand.

    An infinite upper limit is mapped to [0, 1) by ``x = a + t/(1-t)``.
    Optional interior `breakpoints` seed the panel partition.

    Returns
    -------
    float
    """
    tol = tol or DEFAULT_TOL
    if b < a:
        return -adaptive_quadrature(f, b, a, tol, breakpoints, n)
    if math.isinf(b):
        def g(t):
            x = a + t / (1.0 - t)
            return f(x) / (1.0 - t) ** 2
        pts = [] if breakpoints is None else [
            (x - a) / (1.0 + x - a) for x in breakpoints if a < x]
        edges = np.unique(np.concatenate([[0.0], pts, [1.0]]))
        return _adaptive_gl(g, edges, tol, n)[0]
    pts = [] if breakpoints is None else [x for x in breakpoints if a < x < b]
    edges = np.unique(np.concatenate([[a], pts, [b]]))
    return _adaptive_gl(f, edges, tol, n)[0]


def principal_value(f, pole, a, b, tol=None, breakpoints=None, tail=None, n=10):
    """Cauchy principal value of ``f(x)/(x - pole)`` over [a, b].

    Subtraction method: the smooth quotient ``(f(x) - f(pole))/(x - pole)``
    is integrated adaptively with the pole as a panel edge (Gauss nodes
    never touch it) and ``f(pole) ln|(b-pole)/(pole-a)|`` is added back.
    `tail`, if given, is a callable returning the principal value over the
    remaining semi-infinite range for the same pole.
    """
    tol = tol or DEFAULT_TOL
    if not a < pole < b:
        raise ValueError(f"pole {pole} must lie strictly inside ({a}, {b})")
    fp = float(np.asarray(f(np.array([pole])), dtype=float)[0])

    def q(x):
        return (np.asarray(f(x), dtype=float) - fp) / (x - pole)

    pts = [pole] + ([] if breakpoints is None else list(breakpoints))
    val = adaptive_quadrature(q, a, b, tol, pts, n)
    val += fp * math.log((b - pole) / (pole - a))
    if tail is not None:
        val += tail(pole)
    return val


def cos_power_tail(omega, k_a, power):
    """Closed form of the integral of ``cos(omega k) k**-power`` over [k_a, inf).

    Valid for integer ``power >= 2``. Small ``omega*k_a`` goes through the
    incomplete gamma function; large values use the integration-by-parts
    series, which converges there without cancellation.
    """
    if power < 2:
        raise ValueError("power must be at least 2")
    omega = abs(float(omega))
    if omega == 0.0:
        return k_a ** (1 - power) / (power - 1)
    x = omega * k_a
    if x < power + 60.0:
        # omega^(p-1) Re[i^(1-p) Gamma(1-p, -i x)] at raised precision
        with mpmath.workdps(40):
            z = mpmath.gammainc(1 - power, -1j * mpmath.mpf(x))
            val = mpmath.re(mpmath.power(1j, 1 - power) * z) * mpmath.mpf(omega) ** (power - 1)
        return float(val)
    # integration by parts, I_p = i e^{ix}/(w k^p) - (i p/w) I_{p+1}; the
    # terms shrink like (p+j)/x so the sum stops far below rounding
    # (upward recursion from Ci/Si cancels catastrophically here)
    term = 1j * complex(math.cos(x), math.sin(x)) / (omega * k_a ** power)
    total = term
    for j in range(int(x)):
        term *= -1j * (power + j) / x
        total += term
        if abs(term) < 1e-18 * abs(total):
            break
    return total.real


def oscillatory_integral(g, omega, edges, tail, n=16, values=None):
    """Integral of ``g(k) cos(omega k)`` over [edges[0], inf).

    Filon-Legendre product rule on each panel: the envelope is expanded in
    Legendre polynomials from its values at n Gauss nodes and each moment
    ``int P_m(t) exp(i theta t) dt = 2 i^m j_m(theta)`` is taken exactly, so
    the rule is exact for envelopes that are polynomials of degree < n per
    panel, whatever the frequency.

    Parameters
    ----------
    g : callable
        Vectorized envelope.
    omega : float
    edges : array_like
        Panel edges; the last one is the cut beyond which `tail` applies.
    tail : callable or float
        ``tail(omega)`` giving the integral beyond the cut (0 for a
        compactly supported envelope).
    values : ndarray, optional
        Envelope already sampled at the Gauss nodes, shape (panels, n);
        `g` is not called then.

    Returns
    -------
    float
    """
    if tail is None:
        raise ValueError("an analytic tail beyond the last panel is required")
    edges = np.asarray(edges, dtype=float)
    t, w = gauss_legendre(n)
    m = np.arange(n)
    P = np.polynomial.legendre.legvander(t, n - 1)          # (n, n)
    proj = (2 * m[:, None] + 1) / 2.0 * (P.T * w[None, :])  # coeffs = proj @ g
    c = 0.5 * (edges[1:] + edges[:-1])
    h = 0.5 * (edges[1:] - edges[:-1])
    if values is None:
        vals = np.asarray(g((c[:, None] + h[:, None] * t[None, :]).ravel()),
                          dtype=float).reshape(len(c), n)
    else:
        vals = np.asarray(values, dtype=float)
    coef = vals @ proj.T                                      # (panels, n)
    theta = omega * h
    jn = special.spherical_jn(m[None, :], theta[:, None])
    mom = 2.0 * (1j ** m)[None, :] * jn
    pan = h * np.exp(1j * omega * c) * np.sum(coef * mom, axis=1)
    tail_val = tail(omega) if callable(tail) else float(tail)
    return math.fsum(pan.real) + tail_val


# ---------------------------------------------------------------------------
# Roots

def find_root(f, x1, x2, tol=None):
    """Bracketed root refinement (Brent's method).

    Raises
    ------
    ValueError
        If ``f(x1)`` and ``f(x2)`` do not have opposite signs.
    """
    tol = tol or DEFAULT_TOL
    f1, f2 = f(x1), f(x2)
    if f1 == 0.0:
        return float(x1)
    if f2 == 0.0:
        return float(x2)
    if np.sign(f1) == np.sign(f2):
        raise ValueError(f"invalid bracket [{x1}, {x2}]: f = {f1}, {f2}")
    return optimize.brentq(f, x1, x2, xtol=tol.abs_tol,
                           rtol=max(tol.rel_tol, 4 * np.finfo(float).eps),
                           maxiter=500)


# ---------------------------------------------------------------------------
# Numerov

@numba.njit(cache=True)
def _numerov_kernel(q, h, y0, y1, qm, dj, jump):
    # y'' = q y on a uniform grid; values are kept as y*exp(-scale).
    # q holds the limit ahead (in the integration direction), qm the limit
    # behind and dj the jump of dq/dx; jump flags nodes where they differ.
    n = q.shape[0]
    y = np.empty(n)
    scale = np.zeros(n)
    y[0] = y0
    y[1] = y1
    h12 = h * h / 12.0
    s = 0.0
    for i in range(1, n - 1):
        if jump[i]:
            # three-point relation across a discontinuity of q or q'
            dy = (y[i] - y[i - 1]) / h + 0.5 * h * qm[i] * y[i]
            d3 = (q[i] - qm[i]) * dy + dj[i] * y[i]
            a = (2.0 + 5.0 * h12 * (q[i] + qm[i])) * y[i] \
                - (1.0 - h12 * q[i - 1]) * y[i - 1] + h * h12 * d3
        else:
            a = 2.0 * (1.0 + 5.0 * h12 * q[i]) * y[i] - (1.0 - h12 * q[i - 1]) * y[i - 1]
        y[i + 1] = a / (1.0 - h12 * qm[i + 1])
        scale[i + 1] = s
        big = abs(y[i + 1])
        if big > 1e100:
            y[i] /= big
            y[i + 1] /= big
            s += math.log(big)
            scale[i + 1] = s
            # y[i] now lives on the new scale as well
            scale[i] = s
    return y, scale


def _q_values(potential, E, r, c_const):
    if c_const is None:
        c_const = potential.c_const
    return (np.asarray(potential(r), dtype=float) - E) / c_const


def _one_sided(potential, E, r, q, c_const):
    """Left limits of q and the jumps of q, q' at nodes on a boundary."""
    qleft = q.copy()
    dj = np.zeros_like(q)
    jump = np.zeros(len(q), dtype=np.bool_)
    comps = getattr(potential, "components", None)
    bounds = getattr(potential, "boundaries", ())
    if not comps or not bounds:
        return qleft, dj, jump
    if c_const is None:
        c_const = potential.c_const
    h = abs(r[1] - r[0])
    for j, X in enumerate(bounds):
        i = int(np.argmin(np.abs(r - X)))
        if abs(r[i] - X) > 1e-9 * h:
            continue
        left, right = comps[j], comps[j + 1]
        qleft[i] = (left.value(X) - E) / c_const
        q[i] = (right.value(X) - E) / c_const
        dj[i] = (right.value(X, 1) - left.value(X, 1)) / c_const
        jump[i] = q[i] != qleft[i] or dj[i] != 0.0
    return qleft, dj, jump


def numerov_scaled(potential, E, r, direction="outward", start=None, c_const=None,
                   check=True):
    """Numerov solution of ``-C u'' + V u = E u`` in log-scaled form.

    Returns ``(u, log_scale)`` with the solution equal to
    ``u * exp(log_scale)`` pointwise, so deep tunnelling regions do not
    overflow.

    Parameters
    ----------
    potential : callable
        ``V(r)`` vectorized; its ``c_const`` attribute is used unless
        `c_const` is given.
    E : float
    r : ndarray
        Uniform grid.
    direction : {"outward", "inward"}
    start : (float, float), optional
        Values at the first two points in the integration direction. The
        default outward start is the regular solution ``u ~ r`` when
        ``r[0] == 0``; the default inward start is a decaying exponential.
    check : bool
        Enforce ``h*sqrt(|q|) < 0.5`` on the grid.
    """
    r = np.asarray(r, dtype=float)
    h = r[1] - r[0]
    if not np.allclose(np.diff(r), h, rtol=1e-9, atol=1e-12 * max(1.0, abs(r[-1]))):
        raise ValueError("numerov needs a uniform grid")
    q = _q_values(potential, E, r, c_const)
    if check and h * math.sqrt(np.max(np.abs(q))) >= 0.5:
        raise ValueError("grid too coarse: h*k_local >= 0.5")
    qleft, dj, jump = _one_sided(potential, E, r, q, c_const)
    if direction == "outward":
        if start is None:
            if r[0] != 0.0:
                raise ValueError("default outward start needs r[0] == 0")
            start = (0.0, h + q[0] * h ** 3 / 6.0)
        u, s = _numerov_kernel(np.ascontiguousarray(q), abs(h), float(start[0]),
                               float(start[1]), qleft, dj, jump)
        return u, s
    if direction == "inward":
        # reflected coordinate: the limit ahead is the left one, q' flips sign
        qa = np.ascontiguousarray(qleft[::-1])
        qb = np.ascontiguousarray(q[::-1])
        if start is None:
            kap = math.sqrt(max(qa[0], 1e-300))
            start = (1e-30, 1e-30 * math.exp(kap * abs(h)))
        u, s = _numerov_kernel(qa, abs(h), float(start[0]), float(start[1]),
                               qb, np.ascontiguousarray(dj[::-1]),
                               np.ascontiguousarray(jump[::-1]))
        return u[::-1].copy(), s[::-1].copy()
    raise ValueError("direction must be 'outward' or 'inward'")


def numerov(potential, E, r, direction="outward", start=None, c_const=None,
            check=True):
    """Numerov wavefunction samples on a uniform grid (see `numerov_scaled`)."""
    u, s = numerov_scaled(potential, E, r, direction, start, c_const, check)
    return u * np.exp(s)
