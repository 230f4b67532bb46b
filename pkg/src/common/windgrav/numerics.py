"""
Special functions, quadrature and root finding

Spherical Bessel functions of the first kind, Legendre polynomials, fully normalized real
spherical harmonics, Gauss-Legendre rules and the table of Bessel zeros every other module
builds on. All functions accept scalars or numpy arrays and return the same kind.
"""

import logging
import math
from functools import lru_cache
from typing import Callable, Union

import numpy as np
from scipy.optimize import brentq

from core_types.basis import QuadratureRule, ZeroTable
from windgrav.errors import BasisIndexError, DomainError, ZeroSearchError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

_SERIES_LIMIT = 1.0
_SERIES_TERMS = 30
_RESCALE = 1e200
_MAX_QUADRATURE_ORDER = 4096
_ROOT_XTOL = 1e-14


def _prepare(x: ArrayLike):
    values = np.asarray(x, dtype=float)
    return np.atleast_1d(values), values.ndim == 0


def _finish(values: np.ndarray, scalar: bool) -> ArrayLike:
    return float(values[0]) if scalar else values


# ---------------------------------------------------------------------------
# Spherical Bessel functions
# ---------------------------------------------------------------------------


def _double_factorial(k: int) -> float:
    return float(math.prod(range(k, 0, -2))) if k > 0 else 1.0


def _series(n: int, x: np.ndarray) -> np.ndarray:
    """Power series of j_n, accurate for x < 1"""
    h = -0.5 * x * x
    term = np.ones_like(x)
    total = np.ones_like(x)
    for k in range(1, _SERIES_TERMS + 1):
        term = term * h / (k * (2 * n + 2 * k + 1))
        total = total + term
    return x**n / _double_factorial(2 * n + 1) * total


def _upward(n: int, x: np.ndarray) -> np.ndarray:
    j_prev = np.sin(x) / x
    j_curr = (j_prev - np.cos(x)) / x
    for k in range(1, n):
        j_prev, j_curr = j_curr, (2 * k + 1) / x * j_curr - j_prev
    return j_curr


def _miller(n: int, x: np.ndarray) -> np.ndarray:
    """Downward recurrence from above n, normalized against j_0 or j_1"""
    start = n + int(math.sqrt(40.0 * n)) + 10
    f_above = np.zeros_like(x)
    f_here = np.ones_like(x)
    target = np.zeros_like(x)
    for k in range(start, 0, -1):
        f_above, f_here = f_here, (2 * k + 1) / x * f_here - f_above
        if k - 1 == n:
            target = f_here.copy()
        big = np.abs(f_here) > _RESCALE
        if np.any(big):
            f_here[big] /= _RESCALE
            f_above[big] /= _RESCALE
            target[big] /= _RESCALE
    j0 = np.sin(x) / x
    j1 = (j0 - np.cos(x)) / x
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(np.abs(j0) >= np.abs(j1), j0 / f_here, j1 / f_above)
    return target * scale


def sph_bessel_j(n: int, x: ArrayLike) -> ArrayLike:
    """
    Spherical Bessel function of the first kind j_n(x)

    Closed trigonometric forms for n <= 1, upward recurrence for x >= n and Miller's downward
    recurrence below, with the power series for x < 1.

    Args:
        n: order, n >= -1 (j_{-1}(x) = cos(x)/x)
        x: argument(s), x >= 0 (x > 0 when n = -1)

    Returns:
        j_n(x), scalar or array matching x

    Raises:
        DomainError: if n < -1 or x is outside the domain
    """
    if n < -1:
        raise DomainError(f"Spherical Bessel order must be >= -1, got {n}")
    xa, scalar = _prepare(x)
    if n == -1:
        if np.any(xa <= 0.0):
            raise DomainError("j_{-1}(x) = cos(x)/x is singular for x <= 0")
        return _finish(np.cos(xa) / xa, scalar)
    if np.any(xa < 0.0):
        raise DomainError(f"j_{n}(x) is evaluated for x >= 0 only")

    out = np.empty_like(xa)
    small = xa < _SERIES_LIMIT
    if np.any(small):
        out[small] = _series(n, xa[small])
    large = ~small
    if np.any(large):
        xl = xa[large]
        if n == 0:
            out[large] = np.sin(xl) / xl
        elif n == 1:
            out[large] = (np.sin(xl) / xl - np.cos(xl)) / xl
        else:
            values = np.empty_like(xl)
            up = xl >= n
            if np.any(up):
                values[up] = _upward(n, xl[up])
            if np.any(~up):
                values[~up] = _miller(n, xl[~up])
            out[large] = values
    return _finish(out, scalar)


def sph_bessel_j_prime(n: int, x: ArrayLike) -> ArrayLike:
    """
    Derivative j_n'(x) = j_{n-1}(x) - (n+1)/x j_n(x)

    At x = 0 the limit is used (1/3 for n = 1, 0 otherwise).
    """
    if n < 0:
        raise DomainError(f"Derivative order must be >= 0, got {n}")
    xa, scalar = _prepare(x)
    if np.any(xa < 0.0):
        raise DomainError("j_n'(x) is evaluated for x >= 0 only")
    out = np.zeros_like(xa)
    at_origin = xa == 0.0
    if n == 1:
        out[at_origin] = 1.0 / 3.0
    inner = ~at_origin
    if np.any(inner):
        xi = xa[inner]
        if n == 0:
            out[inner] = -np.asarray(sph_bessel_j(1, xi))
        else:
            out[inner] = sph_bessel_j(n - 1, xi) - (n + 1) / xi * sph_bessel_j(n, xi)
    return _finish(out, scalar)


def sph_bessel_j_second(n: int, x: ArrayLike) -> ArrayLike:
    """Second derivative j_n''(x) obtained by differentiating the recurrence once more"""
    xa, scalar = _prepare(x)
    if np.any(xa <= 0.0):
        raise DomainError("j_n''(x) is evaluated for x > 0 only")
    jn = np.asarray(sph_bessel_j(n, xa))
    jn_prime = np.asarray(sph_bessel_j_prime(n, xa))
    if n == 0:
        lower_prime = -(np.asarray(sph_bessel_j(0, xa)) - 2.0 / xa * sph_bessel_j(1, xa))
        out = lower_prime
    else:
        lower_prime = np.asarray(sph_bessel_j_prime(n - 1, xa))
        out = lower_prime + (n + 1) / xa**2 * jn - (n + 1) / xa * jn_prime
    return _finish(out, scalar)


# ---------------------------------------------------------------------------
# Legendre polynomials and spherical harmonics
# ---------------------------------------------------------------------------


def legendre_table(n_max: int, t: ArrayLike) -> np.ndarray:
    """P_0..P_{n_max} at t by the three-term recurrence, shape (n_max + 1, len(t))"""
    ta = np.atleast_1d(np.asarray(t, dtype=float))
    table = np.empty((n_max + 1, ta.size))
    table[0] = 1.0
    if n_max >= 1:
        table[1] = ta
    for k in range(1, n_max):
        table[k + 1] = ((2 * k + 1) * ta * table[k] - k * table[k - 1]) / (k + 1)
    return table


def legendre_p(n: int, t: ArrayLike) -> ArrayLike:
    """Legendre polynomial P_n(t) for t in [-1, 1]"""
    if n < 0:
        raise DomainError(f"Legendre degree must be >= 0, got {n}")
    ta, scalar = _prepare(t)
    if np.any(np.abs(ta) > 1.0 + 1e-14):
        raise DomainError("Legendre argument must lie in [-1, 1]")
    return _finish(legendre_table(n, ta)[n], scalar)


def _normalized_associated(n: int, order: int, t: np.ndarray) -> np.ndarray:
    """sqrt((2n+1)/(4 pi) (n-k)!/(n+k)!) P_{n,k}(t), geodesy sign convention"""
    s = np.sqrt(np.clip(1.0 - t * t, 0.0, None))
    diag = np.full_like(t, 1.0 / math.sqrt(4.0 * math.pi))
    for k in range(1, order + 1):
        diag = math.sqrt((2 * k + 1) / (2 * k)) * s * diag
    if n == order:
        return diag
    prev, curr = diag, math.sqrt(2 * order + 3) * t * diag
    for k in range(order + 2, n + 1):
        a = math.sqrt((4 * k * k - 1) / (k * k - order * order))
        b = math.sqrt(((k - 1) ** 2 - order * order) / (4 * (k - 1) ** 2 - 1))
        prev, curr = curr, a * (t * curr - b * prev)
    return curr


def sph_harmonic(n: int, j: int, phi: ArrayLike, t: ArrayLike) -> ArrayLike:
    """
    Fully normalized real spherical harmonic Y_{n,j}(phi, t)

    Uses sin(j phi) for j > 0 and cos(j phi) for j <= 0, with t = cos(colatitude).

    Raises:
        BasisIndexError: if |j| > n
    """
    if n < 0 or abs(j) > n:
        raise BasisIndexError(f"Spherical harmonic index requires |j| <= n, got n={n}, j={j}")
    ta, scalar_t = _prepare(t)
    pa, scalar_p = _prepare(phi)
    order = abs(j)
    radial = _normalized_associated(n, order, ta)
    if order:
        radial = math.sqrt(2.0) * radial
    trig = np.sin(j * pa) if j > 0 else np.cos(j * pa)
    return _finish(radial * trig, scalar_t and scalar_p)


def zonal_harmonic_table(n_max: int, t: ArrayLike) -> np.ndarray:
    """Y_{n,0}(t) = sqrt((2n+1)/(4 pi)) P_n(t) for n = 0..n_max"""
    factors = np.sqrt((2.0 * np.arange(n_max + 1) + 1.0) / (4.0 * math.pi))
    return factors[:, None] * legendre_table(n_max, t)


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------


@lru_cache(maxsize=32)
def gauss_legendre(order: int) -> QuadratureRule:
    """
    Gauss-Legendre rule of the given order on [-1, 1]

    Nodes are Legendre roots from Newton iteration started at the asymptotic guesses
    cos(pi (k - 1/4) / (order + 1/2)); weights 2 / ((1 - x^2) P_order'(x)^2).
    """
    if not 1 <= order <= _MAX_QUADRATURE_ORDER:
        raise DomainError(
            f"Quadrature order must lie in [1, {_MAX_QUADRATURE_ORDER}], got {order}"
        )
    k = np.arange(1, order + 1)
    x = np.cos(np.pi * (k - 0.25) / (order + 0.5))
    converged = 0
    for _ in range(100):
        p_prev = np.ones_like(x)
        p = x.copy()
        for i in range(1, order):
            p_prev, p = p, ((2 * i + 1) * x * p - i * p_prev) / (i + 1)
        dp = order * (x * p - p_prev) / (x * x - 1.0)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) < 1e-15:
            converged += 1
            if converged > 1:
                break
    weights = 2.0 / ((1.0 - x * x) * dp * dp)
    x, weights = x[::-1], weights[::-1]
    nodes = 0.5 * (x - x[::-1])
    weights = 0.5 * (weights + weights[::-1])
    return QuadratureRule(nodes=nodes, weights=weights)


# ---------------------------------------------------------------------------
# Zeros of j_{n-1}
# ---------------------------------------------------------------------------


def _count_sign_changes(f: Callable[[np.ndarray], np.ndarray], lo: float, hi: float) -> int:
    samples = np.asarray(f(np.linspace(lo, hi, 33)))
    signs = np.sign(samples)
    signs = signs[signs != 0]
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


def _refine_zero(order: int, lo: float, hi: float, guess: float) -> float:
    """Zero of j_order in (lo, hi): bracket check, Brent bisection, Newton polish"""

    def f(x):
        return sph_bessel_j(order, x)

    if _count_sign_changes(f, lo, hi) != 1:
        raise ZeroSearchError(
            f"Bracket ({lo:.12g}, {hi:.12g}) for a zero of j_{order} does not contain "
            f"exactly one sign change",
            {"order": order, "lo": lo, "hi": hi},
        )
    a, b = lo, hi
    half = 0.5 * math.pi
    if lo < guess - half and guess + half < hi and f(guess - half) * f(guess + half) < 0.0:
        a, b = guess - half, guess + half
    root = brentq(f, a, b, xtol=_ROOT_XTOL, rtol=4.0 * np.finfo(float).eps, maxiter=200)
    for _ in range(2):
        slope = sph_bessel_j_prime(order, root)
        if slope == 0.0:
            break
        candidate = root - f(root) / slope
        if not lo < candidate < hi:
            break
        root = candidate
    return float(root)


def find_bessel_zeros(n_max: int, m_max: int) -> ZeroTable:
    """
    Table of lambda_{n,m}, the m-th positive zero of j_{n-1}

    Rows n = 0 and n = 1 are closed form ((m - 1/2) pi and m pi). Row n >= 2 is bracketed by
    consecutive zeros of row n - 1 (interlacing), each bracket checked for exactly one sign
    change and refined by Brent bisection followed by Newton steps on j_{n-1}'.

    Raises:
        DomainError: if n_max or m_max < 1
        ZeroSearchError: if a bracket holds no single sign change
    """
    if n_max < 1 or m_max < 1:
        raise DomainError(f"Zero table needs n_max, m_max >= 1, got ({n_max}, {m_max})")

    def count(n: int) -> int:
        return m_max + (n_max - n)

    rows = [
        (np.arange(1, count(0) + 1) - 0.5) * math.pi,
        np.arange(1, count(1) + 1) * math.pi,
    ]
    for n in range(2, n_max + 1):
        prev = rows[n - 1]
        row = np.empty(count(n))
        for m in range(1, count(n) + 1):
            guess = (m + 0.5 * (n - 1)) * math.pi
            row[m - 1] = _refine_zero(n - 1, prev[m - 1], prev[m], guess)
        rows.append(row)

    lam = np.vstack([row[:m_max] for row in rows[: n_max + 1]])
    if m_max > 1 and np.any(np.diff(lam, axis=1) <= 1.0):
        raise ZeroSearchError("Zero table rows are not separated by more than 1")
    logger.debug("Tabulated Bessel zeros for n <= %d, m <= %d", n_max, m_max)
    return ZeroTable(n_max=n_max, m_max=m_max, lam=lam)
