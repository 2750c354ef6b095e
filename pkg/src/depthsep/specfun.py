"""Special functions: log-Gamma, Bessel J of real order, unit-ball radius.

Bessel J_nu(x) is evaluated with three branches chosen per argument:

* the ascending power series for small x,
* Miller's backward recurrence (normalised by the Neumann sum
  ``(x/2)**mu = sum_k (mu+2k) Gamma(mu+k)/k! J_{mu+2k}(x)``) in the middle,
* the Hankel large-argument expansion once ``x >= switch * max(nu, 1)``.

All three are accurate to roughly 1e-13 absolute, so the evaluator is
continuous across branch boundaries.  The one-term Krasikov form is provided
separately by :func:`krasikov_terms` / :func:`krasikov_approx`; it is an
envelope statement (error ``x**-1.5``), not an evaluation method.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "SpecFunConfig",
    "KrasikovTerms",
    "log_gamma",
    "unit_ball_radius",
    "unit_sphere_area",
    "bessel_j",
    "bessel_j_series",
    "bessel_j_series_mp",
    "bessel_j_hankel",
    "bessel_j_over_power",
    "krasikov_terms",
    "krasikov_approx",
]


@dataclass(frozen=True)
class SpecFunConfig:
    series_terms: int = 60
    asymptotic_switch: float = 30.0
    abs_tol: float = 1e-12

    def __post_init__(self):
        if self.series_terms < 10:
            raise ValueError("series_terms must be >= 10")
        if self.asymptotic_switch < 1:
            raise ValueError("asymptotic_switch must be >= 1")
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be positive")


DEFAULT_CONFIG = SpecFunConfig()


class KrasikovTerms(NamedTuple):
    c_dx: float
    f_dx: float
    envelope: float


# ---------------------------------------------------------------------------
# log-Gamma
# ---------------------------------------------------------------------------

# Stirling series coefficients B_{2k} / (2k (2k-1)).
_STIRLING = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_STIRLING_MIN = 15.0


def _log_gamma_scalar(z: float) -> float:
    if not z > 0 or math.isinf(z):
        raise ValueError(f"log_gamma requires a finite positive argument, got {z!r}")
    shift = 0.0
    if z < _STIRLING_MIN:
        # Gamma(z) = Gamma(z + n) / (z (z+1) ... (z+n-1))
        prod = 1.0
        while z < _STIRLING_MIN:
            prod *= z
            z += 1.0
        shift = -math.log(prod)
    inv = 1.0 / z
    inv2 = inv * inv
    corr = 0.0
    p = inv
    for c in _STIRLING:
        corr += c * p
        p *= inv2
    return (z - 0.5) * math.log(z) - z + _HALF_LOG_2PI + corr + shift


def log_gamma(z):
    """Natural log of the Gamma function for positive real arguments.

    Accepts a scalar or an array.  Uses the Stirling series after shifting the
    argument above 15, which keeps the absolute error near 1e-14 on
    ``[0.5, 200]``.

    Raises
    ------
    ValueError
        If any argument is non-positive.
    """
    if np.ndim(z) == 0:
        return _log_gamma_scalar(float(z))
    arr = np.asarray(z, dtype=float)
    return np.array([_log_gamma_scalar(v) for v in arr.ravel()]).reshape(arr.shape)


# ---------------------------------------------------------------------------
# Unit ball
# ---------------------------------------------------------------------------


def unit_ball_radius(d: int) -> float:
    """Radius R_d of the d-dimensional Euclidean ball of volume one.

    ``R_d = pi**-0.5 * Gamma(d/2 + 1)**(1/d)``; log space once Gamma would
    overflow.
    """
    if int(d) != d or d < 1:
        raise ValueError(f"dimension must be a positive integer, got {d!r}")
    if d <= 300:
        # Gamma(d/2+1) is (d/2)! for even d and d!! sqrt(pi) / 2^((d+1)/2) for
        # odd d; keeping the integer part exact pins R_1 = 1/2 to the last bit
        if d % 2 == 0:
            return float(math.factorial(d // 2)) ** (1.0 / d) / math.sqrt(math.pi)
        q = math.prod(range(1, d + 1, 2)) / 2.0 ** ((d + 1) // 2)
        return q ** (1.0 / d) * math.pi ** ((1.0 - d) / (2.0 * d))
    return math.exp(log_gamma(d / 2.0 + 1.0) / d) / math.sqrt(math.pi)


def unit_sphere_area(d: int) -> float:
    """Surface area A_d = d pi^(d/2) / Gamma(d/2 + 1) of the unit sphere in R^d."""
    if int(d) != d or d < 1:
        raise ValueError(f"dimension must be a positive integer, got {d!r}")
    if d <= 300:
        return d * math.pi ** (0.5 * d) / math.gamma(d / 2.0 + 1.0)
    return d * math.exp(0.5 * d * math.log(math.pi) - log_gamma(d / 2.0 + 1.0))


# ---------------------------------------------------------------------------
# Bessel J
# ---------------------------------------------------------------------------


def _check_order(nu: float) -> float:
    nu = float(nu)
    if not nu >= 0 or math.isinf(nu):
        raise ValueError(f"Bessel order must be finite and >= 0, got {nu!r}")
    return nu


def _series_limit(nu: float) -> float:
    # Beyond this the alternating series loses more than ~2 digits to cancellation.
    return max(2.0, math.sqrt(nu + 1.0))


def bessel_j_series(nu: float, x, terms: int = 60):
    """Ascending power series for J_nu(x) in double precision.

    Sums ``(-1)^m (x/2)^(2m+nu) / (m! Gamma(m+nu+1))`` for at most ``terms``
    terms, stopping early once a term drops below 1e-18 of the partial sum.
    Accurate only while cancellation is mild (``x`` up to roughly
    ``2 + sqrt(nu)``); :func:`bessel_j` handles larger arguments.
    """
    nu = _check_order(nu)
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    if np.any(x < 0):
        raise ValueError("Bessel argument must be >= 0")
    half = 0.5 * x
    out = np.zeros_like(x)
    pos = half > 0
    if nu == 0:
        out[~pos] = 1.0
    term = np.zeros_like(x)
    if nu < 150.0:
        # direct power keeps the leading term within an ulp or two
        with np.errstate(under="ignore"):
            term[pos] = half[pos] ** nu / math.gamma(nu + 1.0)
    redo = pos & ~(term > 0)
    if redo.any():
        term[redo] = np.exp(nu * np.log(half[redo]) - log_gamma(nu + 1.0))
    total = term.copy()
    q = -half * half
    for m in range(1, terms):
        term = term * q / (m * (m + nu))
        total += term
        if np.all(np.abs(term) <= 1e-18 * np.abs(total)):
            break
    out[pos] = total[pos]
    return float(out[0]) if scalar else out


def bessel_j_series_mp(nu: float, x: float, extra_digits: int = 20) -> float:
    """Power series for J_nu(x) summed in extended precision.

    The working precision is raised by the number of decimal digits lost to
    cancellation (about ``x / ln 10``), so the result is correct to double
    precision for any moderate ``x``.  Slow; intended as an independent
    reference for the fast evaluator.
    """
    import mpmath

    nu = _check_order(nu)
    if x < 0:
        raise ValueError("Bessel argument must be >= 0")
    if x == 0:
        return 1.0 if nu == 0 else 0.0
    dps = int(x / math.log(10.0)) + extra_digits + 16
    with mpmath.workdps(dps):
        h = mpmath.mpf(x) / 2
        q = -h * h
        n = mpmath.mpf(nu)
        term = mpmath.power(h, n) / mpmath.gamma(n + 1)
        total = term
        m = 0
        eps = mpmath.mpf(10) ** (-(dps - 2))
        while True:
            m += 1
            term = term * q / (m * (m + n))
            total += term
            if m > h and abs(term) < eps * max(abs(total), mpmath.mpf(10) ** -300):
                break
        return float(total)


def bessel_j_hankel(nu: float, x, max_terms: int = 80):
    """Hankel asymptotic expansion of J_nu(x) for large x.

    ``J = sqrt(2/(pi x)) (P cos w - Q sin w)`` with ``w = x - nu pi/2 - pi/4``.
    Terms are added until they fall below 1e-17 or start to grow (the series
    is asymptotic).  For half-integer ``nu`` it terminates and is exact.
    """
    nu = _check_order(nu)
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    if np.any(x <= 0):
        raise ValueError("Hankel expansion needs x > 0")
    flat_x = x.ravel()
    out = np.empty_like(flat_x)
    coeffs = _hankel_coeffs(nu, max_terms)
    # chunks by magnitude so large arguments use fewer terms
    order = np.argsort(flat_x)
    for block in np.array_split(order, max(1, flat_x.size // 200_000 + 1)):
        if block.size == 0:
            continue
        xb = flat_x[block]
        y = 1.0 / xb
        ymax = float(y.max())
        n_terms = _hankel_term_count(coeffs, ymax)
        # Horner in y: P uses even k, Q odd k, signs folded into coeffs
        p = np.full_like(xb, coeffs[n_terms - 1 - ((n_terms - 1) % 2)])
        for k in range(n_terms - 1 - ((n_terms - 1) % 2) - 2, -1, -2):
            p *= y * y
            p += coeffs[k]
        last_odd = n_terms - 1 if (n_terms - 1) % 2 else n_terms - 2
        if last_odd >= 1:
            q = np.full_like(xb, coeffs[last_odd])
            for k in range(last_odd - 2, 0, -2):
                q *= y * y
                q += coeffs[k]
            q *= y
        else:
            q = np.zeros_like(xb)
        w = xb - (0.5 * nu + 0.25) * math.pi
        res = p * np.cos(w)
        res -= q * np.sin(w)
        res *= np.sqrt(y * (2.0 / math.pi))
        out[block] = res
    out = out.reshape(x.shape)
    return float(out.reshape(-1)[0]) if scalar else out


def _hankel_coeffs(nu: float, max_terms: int) -> np.ndarray:
    """Signed coefficients of 1/x^k in P (even k) and Q (odd k)."""
    mu4 = 4.0 * nu * nu
    a = np.zeros(max_terms)
    a[0] = 1.0
    for k in range(1, max_terms):
        a[k] = a[k - 1] * (mu4 - (2 * k - 1) ** 2) / (8.0 * k)
        if a[k] == 0.0:
            break
    signs = np.array([-1.0 if (k // 2) % 2 else 1.0 for k in range(max_terms)])
    return a * signs


def _hankel_term_count(coeffs: np.ndarray, ymax: float) -> int:
    mags = np.abs(coeffs) * ymax ** np.arange(coeffs.size)
    below = np.nonzero(mags < 1e-17)[0]
    if below.size == 0:
        return coeffs.size
    # a terminating series (half-integer order) has an exact zero
    first = int(below[0])
    if coeffs[first] == 0.0:
        return max(first, 1)
    # ensure we are past the initial growth for large orders
    later = below[below >= np.argmax(mags)]
    return int(later[0]) + 1 if later.size else coeffs.size


def _neumann_coeffs(mu: float, count: int) -> np.ndarray:
    """Coefficients (mu+2k) Gamma(mu+k) / k!, k = 0..count-1 (k=0 -> Gamma(mu+1))."""
    c = np.empty(count)
    c[0] = math.exp(log_gamma(mu + 1.0))
    for k in range(1, count):
        c[k] = (mu + 2 * k) * math.exp(log_gamma(mu + k) - log_gamma(k + 1.0))
    return c


def _bessel_miller(nu: float, x: np.ndarray) -> np.ndarray:
    """Backward recurrence for J_nu on a block of positive arguments."""
    mu = nu - math.floor(nu)
    n = int(round(nu - mu))
    xmax = float(x.max())
    start = int(max(nu, xmax) + 25 + 12 * xmax ** (1.0 / 3.0))
    start += start % 2  # orders mu + start, mu + start - 2, ... hit mu
    coeff = _neumann_coeffs(mu, start // 2 + 1)
    f_next = np.zeros_like(x)
    f_cur = np.full_like(x, 1e-30)
    total = np.zeros_like(x)
    target = np.zeros_like(x)
    two_over_x = 2.0 / x
    if start == n:
        target = f_cur.copy()
    total += coeff[start // 2] * f_cur
    for k in range(start, 0, -1):
        f_prev = (mu + k) * two_over_x * f_cur - f_next
        f_next, f_cur = f_cur, f_prev
        order = k - 1
        if order % 2 == 0:
            total += coeff[order // 2] * f_cur
        if order == n:
            target = f_cur.copy()
        big = np.abs(f_cur) > 1e200
        if big.any():
            s = np.where(big, 1e-200, 1.0)
            f_cur *= s
            f_next *= s
            total *= s
            target *= s
    scale = np.exp(mu * np.log(0.5 * x))
    return target * scale / total


def bessel_j(nu: float, x, cfg: SpecFunConfig | None = None):
    """Bessel function of the first kind J_nu(x) for nu >= 0, x >= 0.

    Vectorised over ``x``.  Returns a float for scalar input.

    Parameters
    ----------
    nu : float
        Order (any non-negative real; the construction only needs integer and
        half-integer orders).
    x : float or array_like
        Non-negative argument(s).
    cfg : SpecFunConfig, optional
        Series truncation and branch switch.
    """
    cfg = cfg or DEFAULT_CONFIG
    nu = _check_order(nu)
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    if np.any(~(x >= 0)) or np.any(np.isinf(x)):
        raise ValueError("Bessel argument must be finite and >= 0")
    out = np.empty_like(x)
    flat_x = x.ravel()
    flat = out.ravel()
    switch = cfg.asymptotic_switch * max(nu, 1.0)
    large = (flat_x >= switch) & (flat_x >= 2.0 * nu)
    small = (flat_x <= _series_limit(nu)) & ~large
    mid = ~(large | small)
    if small.any():
        flat[small] = bessel_j_series(nu, flat_x[small], cfg.series_terms)
    if large.any():
        flat[large] = bessel_j_hankel(nu, flat_x[large])
    if mid.any():
        idx = np.nonzero(mid)[0]
        order = idx[np.argsort(flat_x[idx])]
        # blocks of similar magnitude keep the recurrence start index tight
        for block in np.array_split(order, max(1, len(order) // 4096 + 1)):
            if block.size:
                flat[block] = _bessel_miller(nu, flat_x[block])
    out = flat.reshape(x.shape)
    return float(out.reshape(-1)[0]) if scalar else out


def bessel_j_over_power(nu: float, z, cfg: SpecFunConfig | None = None):
    """J_nu(z) / z**nu, an entire function of z (value 2^-nu/Gamma(nu+1) at 0)."""
    nu = _check_order(nu)
    z = np.asarray(z, dtype=float)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    out = np.empty_like(z)
    tiny = z < 1.0
    if tiny.any():
        zt = z[tiny]
        q = -0.25 * zt * zt
        term = np.full_like(zt, math.exp(-nu * math.log(2.0) - log_gamma(nu + 1.0)))
        total = term.copy()
        for m in range(1, 30):
            term = term * q / (m * (m + nu))
            total += term
        out[tiny] = total
    if (~tiny).any():
        zr = z[~tiny]
        out[~tiny] = bessel_j(nu, zr, cfg) / zr**nu
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# Krasikov-type approximation of J_{d/2}
# ---------------------------------------------------------------------------


def krasikov_terms(d: int, x: float) -> KrasikovTerms:
    """Amplitude and phase factors of the one-term approximation of J_{d/2}(x).

    ``c = sqrt(1 - (d^2-1)/(4x^2))``, ``f = c + s arcsin(s)`` with
    ``s = sqrt(d^2-1)/(2x)``; the approximation error is at most ``x**-1.5``
    for ``d >= 2`` and ``x >= d``.
    """
    if d < 2:
        raise ValueError("krasikov_terms needs d >= 2")
    if not x >= d:
        raise ValueError(f"krasikov_terms needs x >= d (got d={d}, x={x})")
    s = math.sqrt(d * d - 1.0) / (2.0 * x)
    c = math.sqrt(1.0 - s * s)
    f = c + s * math.asin(s)
    return KrasikovTerms(c, f, x**-1.5)


def krasikov_approx(d: int, x):
    """``sqrt(2/(pi c x)) cos(-(d+1) pi/4 + f x)`` (vectorised, x >= d >= 2)."""
    if d < 2:
        raise ValueError("krasikov_approx needs d >= 2")
    x = np.asarray(x, dtype=float)
    if np.any(x < d):
        raise ValueError("krasikov_approx needs x >= d")
    s = np.sqrt(d * d - 1.0) / (2.0 * x)
    c = np.sqrt(1.0 - s * s)
    f = c + s * np.arcsin(s)
    val = np.sqrt(2.0 / (math.pi * c * x)) * np.cos(-(d + 1) * math.pi / 4.0 + f * x)
    return float(val) if val.ndim == 0 else val
