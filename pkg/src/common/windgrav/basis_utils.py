"""
Orthonormal eigenbasis of the ball

u_{m,n,j}(r xi) = B_{m,n}(r) Y_{n,j}(xi) with
B_{m,n}(r) = sqrt(2 / (R^3 j_n(lambda)^2)) j_n(gamma r) and gamma = lambda_{n,m} / R,
plus the radial transforms built on it. The + branch of the
normalization is used literally, so B_{m,n}(R) = sqrt(2 / R^3) * sign(j_n(lambda_{n,m})).
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np
from core_types.basis import CoeffSet, QuadratureRule, ZeroTable

from windgrav.errors import BasisIndexError, DomainError
from windgrav.numerics import (
    find_bessel_zeros,
    gauss_legendre,
    sph_bessel_j,
    sph_bessel_j_prime,
    sph_bessel_j_second,
    sph_harmonic,
    zonal_harmonic_table,
)
from windgrav.settings import NumericsSettings

logger = logging.getLogger(__name__)

RadialFunction = Union[float, Callable[[np.ndarray], np.ndarray]]
FieldFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]

_RADIUS_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class BasisContext:
    """Zero table, normalization constants and quadrature grids for a planet of radius R"""

    R: float
    zeros: ZeroTable
    norm: np.ndarray
    radial_rule: QuadratureRule
    angular_rule: QuadratureRule
    m_max: int
    n_max: int
    sign_convention: str = "+"
    _tables: Dict[Tuple[str, int], np.ndarray] = field(
        default_factory=dict, compare=False, repr=False
    )

    @classmethod
    def build(
        cls,
        R: float,
        m_max: int,
        n_max: int,
        radial_order: int = NumericsSettings.radial_order,
        angular_order: int = NumericsSettings.angular_order,
        zeros: Optional[ZeroTable] = None,
    ) -> "BasisContext":
        """
        Tabulate zeros and normalization constants for 1 <= m <= m_max, 0 <= n <= n_max

        Args:
            R: planet radius
            m_max: radial truncation
            n_max: degree truncation
            radial_order: Gauss-Legendre order on [0, R]
            angular_order: Gauss-Legendre order on t in [-1, 1]
            zeros: precomputed (possibly perturbed) zero table covering the truncation

        Returns:
            BasisContext: immutable context shareable across threads
        """
        if not R > 0.0:
            raise DomainError(f"Planet radius must be positive, got {R}")
        if zeros is None:
            zeros = find_bessel_zeros(n_max, m_max)
        elif zeros.n_max < n_max or zeros.m_max < m_max:
            raise BasisIndexError(
                f"Zero table ({zeros.n_max}, {zeros.m_max}) does not cover ({n_max}, {m_max})"
            )
        lam = zeros.lam[: n_max + 1, :m_max]
        norm = np.empty_like(lam)
        for n in range(n_max + 1):
            norm[n] = np.sqrt(2.0 / (R**3 * np.asarray(sph_bessel_j(n, lam[n])) ** 2))
        norm.setflags(write=False)
        logger.debug("Built basis context R=%g m_max=%d n_max=%d", R, m_max, n_max)
        return cls(
            R=float(R),
            zeros=zeros,
            norm=norm,
            radial_rule=gauss_legendre(radial_order),
            angular_rule=gauss_legendre(angular_order),
            m_max=m_max,
            n_max=n_max,
        )

    def check(self, m: int, n: int):
        if not (1 <= m <= self.m_max and 0 <= n <= self.n_max):
            raise BasisIndexError(
                f"Basis index (m={m}, n={n}) outside (m_max={self.m_max}, n_max={self.n_max})"
            )

    def gamma(self, n: int, m: int) -> float:
        self.check(m, n)
        return self.zeros.value(n, m) / self.R

    def gammas(self, n: int) -> np.ndarray:
        """gamma_{n,m} for m = 1..m_max"""
        return self.zeros.lam[n, : self.m_max] / self.R

    @property
    def k0(self) -> float:
        """Background wavenumber pi / R"""
        return math.pi / self.R

    @property
    def radial_nodes(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.radial_rule.mapped(0.0, self.R)

    @property
    def angular_nodes(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.angular_rule.nodes, self.angular_rule.weights

    def radial_table(self, n: int) -> np.ndarray:
        """B_{m,n}(r_i) on the radial nodes, shape (m_max, radial_order)"""
        key = ("radial", n)
        if key not in self._tables:
            if not 0 <= n <= self.n_max:
                raise BasisIndexError(f"Degree n={n} outside n_max={self.n_max}")
            r, _ = self.radial_nodes
            table = np.vstack(
                [
                    self.norm[n, m] * np.asarray(sph_bessel_j(n, g * r))
                    for m, g in enumerate(self.gammas(n))
                ]
            )
            table.setflags(write=False)
            self._tables[key] = table
        return self._tables[key]

    def surface_values(self, n: int) -> np.ndarray:
        """B_{m,n}(R) for m = 1..m_max"""
        key = ("surface", n)
        if key not in self._tables:
            lam = self.zeros.lam[n, : self.m_max]
            values = self.norm[n] * np.asarray(sph_bessel_j(n, lam))
            values.setflags(write=False)
            self._tables[key] = values
        return self._tables[key]

    def angular_table(self) -> np.ndarray:
        """Y_{n,0}(t_k) on the angular nodes, shape (n_max + 1, angular_order)"""
        key = ("angular", 0)
        if key not in self._tables:
            table = zonal_harmonic_table(self.n_max, self.angular_rule.nodes)
            table.setflags(write=False)
            self._tables[key] = table
        return self._tables[key]


def _radii(ctx: BasisContext, r) -> Tuple[np.ndarray, bool]:
    values = np.asarray(r, dtype=float)
    scalar = values.ndim == 0
    values = np.atleast_1d(values)
    if np.any(values < 0.0) or np.any(values > ctx.R * (1.0 + _RADIUS_SLACK)):
        raise DomainError(f"Radius outside [0, R] with R={ctx.R}")
    return np.minimum(values, ctx.R), scalar


def _sample(f: RadialFunction, r: np.ndarray) -> np.ndarray:
    if callable(f):
        return np.broadcast_to(np.asarray(f(r), dtype=float), r.shape)
    return np.full_like(r, float(f))


def radial_basis_eval(ctx: BasisContext, m: int, n: int, r):
    """B_{m,n}(r) for r in [0, R]"""
    ctx.check(m, n)
    radii, scalar = _radii(ctx, r)
    values = ctx.norm[n, m - 1] * np.asarray(sph_bessel_j(n, ctx.gamma(n, m) * radii))
    return float(values[0]) if scalar else values


def radial_basis_derivative(ctx: BasisContext, m: int, n: int, r, order: int = 1):
    """First or second radial derivative of B_{m,n}, analytic through the Bessel recurrence"""
    ctx.check(m, n)
    radii, scalar = _radii(ctx, r)
    gamma = ctx.gamma(n, m)
    if order == 1:
        values = gamma * ctx.norm[n, m - 1] * np.asarray(sph_bessel_j_prime(n, gamma * radii))
    elif order == 2:
        values = gamma**2 * ctx.norm[n, m - 1] * np.asarray(sph_bessel_j_second(n, gamma * radii))
    else:
        raise DomainError(f"Derivative order must be 1 or 2, got {order}")
    return float(values[0]) if scalar else values


def basis_function_eval(ctx: BasisContext, m: int, n: int, j: int, r, phi, t):
    """u_{m,n,j}(r, phi, t) = B_{m,n}(r) Y_{n,j}(phi, t)"""
    return radial_basis_eval(ctx, m, n, r) * np.asarray(sph_harmonic(n, j, phi, t))


def radial_inner_product(
    ctx: BasisContext, f: RadialFunction, g: RadialFunction, weighted: bool = True
) -> float:
    """
    Integral of f g r^2 over [0, R] (or of f g when weighted is False) by Gauss-Legendre

    f and g are vectorized callables of r or constants.
    """
    r, w = ctx.radial_nodes
    weight = w * r * r if weighted else w
    return float(np.dot(weight, _sample(f, r) * _sample(g, r)))


def gram_matrix(ctx: BasisContext, n: int, M: int) -> np.ndarray:
    """<B_{i,n}, B_{k,n}> for i, k = 1..M"""
    ctx.check(M, n)
    r, w = ctx.radial_nodes
    table = ctx.radial_table(n)[:M]
    return (table * (w * r * r)) @ table.T


def field_coefficient(ctx: BasisContext, F: FieldFunction, m: int, n: int) -> float:
    """
    <F, u_{m,n,0}> over the ball for an axisymmetric field F(r, t)

    Tensor-product Gauss-Legendre; F is called once with broadcastable arrays r[:, None] and
    t[None, :].
    """
    ctx.check(m, n)
    r, wr = ctx.radial_nodes
    t, wt = ctx.angular_nodes
    samples = np.broadcast_to(np.asarray(F(r[:, None], t[None, :]), dtype=float), (r.size, t.size))
    angular = samples @ (wt * ctx.angular_table()[n])
    return float(2.0 * math.pi * np.dot(wr * r * r * ctx.radial_table(n)[m - 1], angular))


def radial_expand(ctx: BasisContext, f: RadialFunction, n: int, M: int) -> np.ndarray:
    """First M Dini-Bessel coefficients <f, B_{m,n}> for m = 1..M"""
    ctx.check(M, n)
    r, w = ctx.radial_nodes
    return ctx.radial_table(n)[:M] @ (w * r * r * _sample(f, r))


def radial_synthesize(ctx: BasisContext, coeffs, n: int, r):
    """Partial sum of c_m B_{m,n}(r) over the given coefficients"""
    coeffs = np.asarray(coeffs, dtype=float)
    radii, scalar = _radii(ctx, r)
    total = np.zeros_like(radii)
    for m, c in enumerate(coeffs, start=1):
        if c != 0.0:
            total += c * radial_basis_eval(ctx, m, n, radii)
    return float(total[0]) if scalar else total


def apply_radial_operator(ctx: BasisContext, coeffs, n: int, r):
    """
    (r^2 H')' - n(n+1) H for H = sum of c_m B_{m,n}, from analytic derivatives

    Requires r > 0.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    radii, scalar = _radii(ctx, r)
    total = np.zeros_like(radii)
    for m, c in enumerate(coeffs, start=1):
        if c == 0.0:
            continue
        h = radial_basis_eval(ctx, m, n, radii)
        h1 = radial_basis_derivative(ctx, m, n, radii, order=1)
        h2 = radial_basis_derivative(ctx, m, n, radii, order=2)
        total += c * (radii**2 * h2 + 2.0 * radii * h1 - n * (n + 1) * h)
    return float(total[0]) if scalar else total


def expand_field(ctx: BasisContext, samples: np.ndarray, m_max: int, n_max: int) -> np.ndarray:
    """
    Coefficients <F, u_{m,n,0}> from samples F(r_i, t_k) on the context grid

    Returns a dense array indexed [n, m - 1]. Reductions run in a fixed order so the result
    does not depend on how callers parallelize.
    """
    ctx.check(m_max, n_max)
    r, wr = ctx.radial_nodes
    _, wt = ctx.angular_nodes
    angular = samples @ (wt[:, None] * ctx.angular_table()[: n_max + 1].T)
    out = np.empty((n_max + 1, m_max))
    for n in range(n_max + 1):
        out[n] = 2.0 * math.pi * (ctx.radial_table(n)[:m_max] @ (wr * r * r * angular[:, n]))
    return out


def synthesize_surface(ctx: BasisContext, coeffs: CoeffSet, t) -> np.ndarray:
    """Field value at r = R from coefficients on u_{m,n,0}"""
    ta = np.atleast_1d(np.asarray(t, dtype=float))
    angular = zonal_harmonic_table(ctx.n_max, ta)
    total = np.zeros_like(ta)
    for (m, n), c in coeffs.items():
        total += c * ctx.surface_values(n)[m - 1] * angular[n]
    return total


def basis_table(ctx: BasisContext, n: int) -> List[Dict[str, float]]:
    """Rows (n, m, lambda, gamma, B_R) for m = 1..m_max"""
    if not 0 <= n <= ctx.n_max:
        raise BasisIndexError(f"Degree n={n} outside n_max={ctx.n_max}")
    surface = ctx.surface_values(n)
    return [
        {
            "n": n,
            "m": m,
            "lambda": float(ctx.zeros.lam[n, m - 1]),
            "gamma": float(ctx.zeros.lam[n, m - 1] / ctx.R),
            "B_R": float(surface[m - 1]),
        }
        for m in range(1, ctx.m_max + 1)
    ]


def boundary_residual(ctx: BasisContext, m: int, n: int) -> float:
    """|B'(R) + (n+1)/R B(R)| / |B'(R)|"""
    value = radial_basis_eval(ctx, m, n, ctx.R)
    slope = radial_basis_derivative(ctx, m, n, ctx.R)
    return abs(slope + (n + 1) / ctx.R * value) / abs(slope)


def eigen_residual(ctx: BasisContext, m: int, n: int, r) -> float:
    """max |(r^2 B')' - n(n+1) B + gamma^2 r^2 B| over r, scaled by max |B|"""
    radii, _ = _radii(ctx, r)
    gamma = ctx.gamma(n, m)
    b = radial_basis_eval(ctx, m, n, radii)
    lhs = apply_radial_operator(ctx, [0.0] * (m - 1) + [1.0], n, radii)
    return float(np.max(np.abs(lhs + gamma**2 * radii**2 * b)) / np.max(np.abs(b)))
