"""Special functions for Morse-type pieces.

Kummer's confluent hypergeometric function, the large-argument expansions
of the two pseudo-Morse solutions, the regular combination of those
solutions near the origin, the phase of ``Gamma(2i mu)/Gamma(i mu)`` by two
routes, and the amplitude/phase series of the oscillating solution.

Notation: for a pseudo-Morse piece ``y = exp(-alpha (r - r0))`` and
``mu = sqrt((E - v)/d - 1)/2``.
"""
from fractions import Fraction
from functools import lru_cache
import cmath
import math

import mpmath
import numpy as np

__all__ = [
    "ConvergenceError", "ValidityError", "kummer_phi", "tricomi_u_asymptotic",
    "tricomi_psi_asymptotic", "regular_mixture", "MixtureRatio",
    "bernoulli", "integral_I", "arg_gamma_ratio", "phi0",
    "amplitude_phase_A0B0", "mu_of_energy", "pseudo_morse_regular_wave",
]

EPS = np.finfo(float).eps


class ConvergenceError(ArithmeticError):
    """A series did not reach its stopping criterion."""


class ValidityError(ValueError):
    """Argument outside the validity window of an expansion."""


# ---------------------------------------------------------------------------
# Kummer function

def _kummer_series(a, c, x, max_terms):
    s = 1.0 + 0.0j
    t = 1.0 + 0.0j
    big = 1.0
    small = 0
    for n in range(max_terms):
        t *= (a + n) / (c + n) * x / (n + 1)
        s += t
        at = abs(t)
        big = max(big, at)
        if at < 1e-16 * abs(s):
            small += 1
            if small == 3:
                return s, big
        else:
            small = 0
    raise ConvergenceError(f"Kummer series not converged after {max_terms} terms")


def kummer_phi(a, c, x, max_terms=20000, rtol=1e-13, extended=True):
    """Confluent hypergeometric function Phi(a, c; x) = 1F1(a; c; x).

    Summed as a power series with the term-ratio recurrence, stopping when
    three consecutive terms fall below 1e-16 of the partial sum. When the
    largest term exceeds the result by so much that rounding would spoil
    `rtol`, the sum is redone in extended precision (`extended=True`) or a
    ConvergenceError is raised.
    """
    a, c, x = complex(a), complex(c), complex(x)
    if c.imag == 0 and c.real <= 0 and c.real == int(c.real):
        raise ValueError("c must not be a non-positive integer")
    if x == 0:
        return 1.0 + 0.0j
    s, big = _kummer_series(a, c, x, max_terms)
    cond = big / max(abs(s), 1e-300)
    if cond * 64 * EPS <= rtol:
        return s
    if not extended:
        raise ConvergenceError(f"cancellation: largest term / sum = {cond:.3e}")
    dps = int(20 + math.log10(cond) - math.log10(rtol))
    with mpmath.workdps(dps):
        val = mpmath.hyp1f1(mpmath.mpc(a), mpmath.mpc(c), mpmath.mpc(x), maxterms=10 ** 6)
    return complex(val)


# ---------------------------------------------------------------------------
# pseudo-Morse solutions

def mu_of_energy(E, v, d):
    """mu = sqrt((E - v)/d - 1)/2 (requires E > v + d)."""
    q = (E - v) / d - 1.0
    if q < 0:
        raise ValidityError("energy below the pseudo-Morse threshold v + d")
    return 0.5 * math.sqrt(q)


def tricomi_u_asymptotic(mu0, y0, parity):
    """Optimally truncated large-y series of the two pseudo-Morse solutions.

    parity ``"-"``: decaying solution, ``exp(-y/2) * S_-(y)`` with
    ``S_- = sum_n prod_{j<n}(j^2 + mu^2) / (n! (-y)^n)``.

    parity ``"+"``: growing solution, ``exp(y/2)/y * S_+(y)`` with
    ``S_+ = sum_n prod_{j=1..n}(j^2 + mu^2) / (n! y^n)``.

    Returns ``(S, err)``: the bracketed sum and the magnitude of the first
    omitted term. Summation stops before terms start to grow.
    """
    if y0 <= 0:
        raise ValidityError("y0 must be positive")
    if mu0 * mu0 / y0 >= 0.1:
        raise ValidityError(f"mu0^2/y0 = {mu0 * mu0 / y0:.3g} outside the window (< 0.1)")
    if parity not in ("+", "-"):
        raise ValueError("parity must be '+' or '-'")
    m2 = mu0 * mu0
    s = 1.0
    t = 1.0
    for n in range(1, 400):
        if parity == "-":
            nxt = -t * ((n - 1) ** 2 + m2) / (n * y0)
        else:
            nxt = t * (n * n + m2) / (n * y0)
        if abs(nxt) >= abs(t) and n > 1:
            return s, abs(nxt)
        if nxt == 0.0 or abs(nxt) < 1e-18 * abs(s):
            return s + nxt, abs(nxt)
        s += nxt
        t = nxt
    return s, abs(t)


def tricomi_psi_asymptotic(mu0, y0, parity):
    """Alias of `tricomi_u_asymptotic` under the Tricomi-function name."""
    return tricomi_u_asymptotic(mu0, y0, parity)


class MixtureRatio:
    """Real number ``sign * exp(log_abs)`` kept in log form."""

    __slots__ = ("sign", "log_abs")

    def __init__(self, sign, log_abs):
        self.sign = sign
        self.log_abs = log_abs

    @property
    def value(self):
        return self.sign * math.exp(self.log_abs) if self.log_abs > -745 else 0.0 * self.sign

    def __repr__(self):
        return f"MixtureRatio(sign={self.sign:+d}, log_abs={self.log_abs!r})"


def regular_mixture(mu0, y0_at_zero, form="exact"):
    """Ratio N2/N1 making ``N1 psi_- + N2 psi_+`` vanish at r = 0.

    With ``psi_- = exp(-y/2) S_-`` and ``psi_+ = exp(y/2) S_+ / y``,
    ``N2/N1 = -y(0) exp(-y(0)) S_-(y(0)) / S_+(y(0))``.

    ``form="printed"`` returns the variant that treats the growing solution
    as ``exp(y/2)`` times the sign-flipped series of the decaying one,
    ``-exp(-y(0)) S_-(y(0)) / S_-(-y(0))``. That variant is not a solution
    of the Morse equation and is kept only for comparison.
    """
    y = float(y0_at_zero)
    sm, _ = tricomi_u_asymptotic(mu0, y, "-")
    if form == "exact":
        sp, _ = tricomi_u_asymptotic(mu0, y, "+")
        log_abs = -y + math.log(y) + math.log(abs(sm / sp))
    elif form == "printed":
        m2 = mu0 * mu0
        sp, t = 1.0, 1.0
        for n in range(1, 400):
            nxt = t * ((n - 1) ** 2 + m2) / (n * y)
            if abs(nxt) >= abs(t) and n > 1 or abs(nxt) < 1e-18:
                break
            sp += nxt
            t = nxt
        log_abs = -y + math.log(abs(sm / sp))
    else:
        raise ValueError("form must be 'exact' or 'printed'")
    sign = -1 if sm * (1 if form == "printed" else sp) > 0 else 1
    return MixtureRatio(sign, log_abs)


# ---------------------------------------------------------------------------
# Bernoulli numbers (all-positive convention: B_1 = 1/6, B_2 = 1/30, ...)

BERNOULLI_CAP = 60


@lru_cache(maxsize=None)
def _bernoulli_modern(m):
    # B_0..B_m with B_1 = -1/2 via sum_{j<=m} C(m+1, j) B_j = 0
    B = [Fraction(1)]
    for n in range(1, m + 1):
        acc = Fraction(0)
        for j in range(n):
            acc += math.comb(n + 1, j) * B[j]
        B.append(-acc / (n + 1))
    return tuple(B)


def bernoulli(n, exact=False):
    """Bernoulli number in the all-positive convention, ``|B_{2n}|``."""
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError("n must be a positive integer")
    if n > BERNOULLI_CAP:
        raise ValueError(f"n above the cap {BERNOULLI_CAP}")
    b = abs(_bernoulli_modern(2 * n)[2 * n])
    return b if exact else float(b)


# ---------------------------------------------------------------------------
# arg Gamma

def _h(s):
    # (coth s - 1/s)/s, smooth with h(0) = 1/3
    s = np.asarray(s, dtype=float)
    out = np.empty_like(s)
    small = s < 0.05
    x = s[small] ** 2
    out[small] = 1 / 3 - x / 45 + 2 * x * x / 945 - x ** 3 / 4725
    big = ~small
    sb = s[big]
    out[big] = (1.0 / np.tanh(sb) - 1.0 / sb) / sb
    return out


def _I_quadrature(mu0):
    T = math.pi / (2 * mu0)
    # panels of width <= 1 on (0, T), 24 Gauss nodes each
    npan = max(1, math.ceil(T))
    edges = np.linspace(0.0, T, npan + 1)
    t, w = np.polynomial.legendre.leggauss(24)
    c = 0.5 * (edges[1:] + edges[:-1])
    hw = 0.5 * (edges[1:] - edges[:-1])
    x = (c[:, None] + hw[:, None] * t[None, :]).ravel()
    wx = (hw[:, None] * w[None, :]).ravel()
    f = np.zeros_like(x)
    j = 0
    while True:
        term = (-1) ** j * math.exp(-j * T) * _h(x + j * T)
        f += term
        j += 1
        if np.max(np.abs(term)) < 1e-18 * np.max(np.abs(f)) or j > 10 ** 6:
            break
    return math.fsum(wx * np.exp(-x) * np.sin(np.pi * x / T) * f)


def _I_bernoulli(mu0):
    # terms (-1)^{n-1} 2^{2n} B_n/(2n(2n-1)) * Im[(1 - 2i mu)^{-(2n-1)}]
    z = 1.0 - 2.0j * mu0
    terms = []
    for n in range(1, BERNOULLI_CAP + 1):
        t = ((-1) ** (n - 1) * 4.0 ** n * bernoulli(n) / (2 * n * (2 * n - 1))
             * (z ** (-(2 * n - 1))).imag)
        terms.append(t)
    mags = np.abs(terms)
    k = int(np.argmin(mags))
    return math.fsum(terms[:k]), float(mags[k])


def integral_I(mu0, method="quadrature"):
    """The integral of ``(coth t - 1/t) exp(-t) sin(2 mu t) / t`` over (0, inf).

    ``method="quadrature"``: the finite-range form with the alternating
    kernel series, integrated by fixed Gauss-Legendre panels. Returns a
    float.

    ``method="bernoulli"``: the Bernoulli-number series. It is an
    asymptotic (Stirling-type) series, so it is optimally truncated and
    ``(value, error_estimate)`` is returned; it is accurate only for
    ``mu0`` of a few units or more.
    """
    if mu0 < 0:
        return -integral_I(-mu0, method) if method == "quadrature" else \
            tuple(x * s for x, s in zip(integral_I(-mu0, method), (-1, 1)))
    if mu0 == 0:
        return 0.0 if method == "quadrature" else (0.0, 0.0)
    if method == "quadrature":
        return _I_quadrature(mu0)
    if method == "bernoulli":
        return _I_bernoulli(mu0)
    raise ValueError("method must be 'quadrature' or 'bernoulli'")


def arg_gamma_half(mu0):
    """arg Gamma(1/2 + i mu0) on the continuous branch through 0."""
    I = integral_I(mu0)
    return mu0 * (0.5 * math.log1p(4 * mu0 * mu0) - 1 - math.log(2)) - 0.5 * I


def arg_gamma_ratio(mu0, check=True):
    """Continuous phase of ``Gamma(2i mu0)/Gamma(i mu0)``.

    By the duplication formula the ratio equals
    ``2^(2i mu - 1) Gamma(1/2 + i mu)/sqrt(pi)``, so its phase is
    ``2 mu ln 2 + arg Gamma(1/2 + i mu)``.

    With `check`, the Bernoulli series is compared wherever its own error
    estimate is below 1e-12 and a disagreement above 1e-10 raises.
    """
    if mu0 <= 0:
        raise ValueError("mu0 must be positive")
    I = integral_I(mu0)
    if check:
        Ib, err = integral_I(mu0, "bernoulli")
        if err < 1e-12 and abs(Ib - I) > 1e-10:
            raise ConvergenceError(f"integral routes disagree at mu0={mu0}: {I} vs {Ib}")
    return mu0 * (math.log(2) + 0.5 * math.log1p(4 * mu0 * mu0) - 1) - 0.5 * I


def phi0(mu0, alpha0, r0):
    """Phase parameter ``alpha0 mu0 r0 - arg[Gamma(2i mu0)/Gamma(i mu0)]``."""
    if mu0 <= 0:
        raise ValueError("mu0 must be positive")
    I = integral_I(mu0)
    return mu0 * (alpha0 * r0 + 1 - math.log(2) - 0.5 * math.log1p(4 * mu0 * mu0)) + 0.5 * I


def amplitude_phase_A0B0(mu0, y0, max_terms=500, y_guard=60.0):
    """Modulus A0 and argument B0 of ``exp(-y/2) Phi(i mu, 2i mu + 1; y)``.

    Uses the pairwise series
    ``sum_n (y^2/16)^n / ((b)_n n!) * (1 - (y/4)/(b + n))``, ``b = i mu + 1/2``.
    The series is entire but loses accuracy to cancellation for large y;
    `y_guard` caps the argument.
    """
    if y0 < 0 or y0 > y_guard:
        raise ValidityError(f"y0 = {y0} outside [0, {y_guard}]")
    b = complex(0.5, mu0)
    q = y0 * y0 / 16.0
    s = 0.0j
    t = 1.0 + 0.0j
    small = 0
    for n in range(max_terms):
        term = t * (1 - (y0 / 4) / (b + n))
        s += term
        if abs(term) < 1e-17 * abs(s):
            small += 1
            if small == 2:
                return abs(s), cmath.phase(s)
        else:
            small = 0
        t *= q / ((b + n) * (n + 1))
    raise ConvergenceError("amplitude/phase series not converged")


def pseudo_morse_regular_wave(mu0, alpha0, r0, r):
    """Decaying pseudo-Morse solution in amplitude/phase form.

    ``2 |G| A0(y) cos(B0(y) + phi0 - alpha0 mu0 r)`` with
    ``G = Gamma(2i mu)/Gamma(i mu)``; equals
    ``exp(-y/2) y^(i mu) U(i mu, 2i mu + 1; y)``.
    """
    y = math.exp(-alpha0 * (r - r0))
    A, B = amplitude_phase_A0B0(mu0, y)
    # |Gamma(2i mu)/Gamma(i mu)|^2 = sinh(pi mu) / (2 sinh(2 pi mu))
    #                              = 1/(4 cosh(pi mu))
    g = 0.5 / math.sqrt(math.cosh(math.pi * mu0))
    return 2 * g * A * math.cos(B + phi0(mu0, alpha0, r0) - alpha0 * mu0 * r)
