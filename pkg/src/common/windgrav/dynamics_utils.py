"""
Wind-induced gravity harmonics

Source term of the thermo-gravitational wind balance, its spectral Helmholtz solve on the
ball, and the dynamic coefficients dJ_n under the thermal wind (TWE) and thermo-gravitational
wind (TGWE) models.

The latitude integral of the source term is taken in colatitude, where the 1/sqrt(1 - tau^2)
weight cancels:

    C(r, theta) = integral over [theta, pi] of d/dx3 (rho_0 u_phi)(r, cos theta') dtheta'
    S(r, t)     = -(4 pi G / K) (r / rho_0'(r)) Omega C(r, arccos t)

The radial gauge is fixed by zeroing every n = 0 coefficient of V'; it leaves dJ_n, n >= 2,
unchanged.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Protocol, Sequence, Tuple

import numpy as np
from core_types.basis import CoeffSet
from core_types.gravity import GravityCoeffs, ModelTag
from core_types.planet import PlanetModel
from core_types.wind import DecayParams

from windgrav.basis_utils import (
    BasisContext,
    expand_field,
    radial_basis_eval,
    synthesize_surface,
)
from windgrav.errors import DegenerateModeError, DomainError
from windgrav.numerics import gauss_legendre, legendre_p, legendre_table, sph_harmonic
from windgrav.planet_utils import background_density, background_density_gradient, r_over_drho
from windgrav.settings import NumericsSettings
from windgrav.wind_utils import ProjectedWind, decay_factor, decay_factor_derivative

logger = logging.getLogger(__name__)

_PANEL_SUBDIVISIONS = 64


class AxisymmetricField(Protocol):
    """Field on the ball given in (r, t) with its partial derivatives"""

    def value(self, r, t): ...

    def d_r(self, r, t): ...

    def d_t(self, r, t): ...


def axial_derivative(F: AxisymmetricField, r, t):
    """d F / d x3 = t dF/dr + ((1 - t^2) / r) dF/dt, for r > 0"""
    r, t = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(t, dtype=float))
    if np.any(r <= 0.0):
        raise DomainError("Axial derivative is evaluated for r > 0")
    values = t * np.asarray(F.d_r(r, t)) + (1.0 - t * t) / r * np.asarray(F.d_t(r, t))
    return float(values) if values.ndim == 0 else values


@dataclass(frozen=True)
class MassFlux:
    """rho_0(r) times a wind field"""

    model: PlanetModel
    wind: AxisymmetricField

    def value(self, r, t):
        return background_density(self.model, r) * np.asarray(self.wind.value(r, t))

    def d_r(self, r, t):
        rho = background_density(self.model, r)
        drho = background_density_gradient(self.model, r)
        return drho * np.asarray(self.wind.value(r, t)) + rho * np.asarray(self.wind.d_r(r, t))

    def d_t(self, r, t):
        return background_density(self.model, r) * np.asarray(self.wind.d_t(r, t))


@dataclass(frozen=True, eq=False)
class ColatitudePanels:
    """
    Gauss-Legendre panels covering [theta_min, pi] for tail integrals in colatitude

    Breakpoints are the target colatitudes, the equator, the pole, a uniform subdivision and
    any extra kinks of the integrand given as t values, so every target sits on a panel
    boundary and no panel straddles the equator or a kink.
    """

    t: np.ndarray
    weights: np.ndarray
    count: int
    order: int
    start: np.ndarray

    @classmethod
    def build(
        cls,
        t_targets,
        order: int,
        subdivisions: int = _PANEL_SUBDIVISIONS,
        breakpoints: Sequence[float] = (),
    ):
        theta_targets = np.arccos(np.clip(np.asarray(t_targets, dtype=float), -1.0, 1.0))
        theta_kinks = np.arccos(np.clip(np.asarray(breakpoints, dtype=float), -1.0, 1.0))
        breaks = np.unique(
            np.concatenate(
                [
                    theta_targets,
                    theta_kinks,
                    [0.5 * math.pi, math.pi],
                    np.linspace(0.0, math.pi, subdivisions + 1),
                ]
            )
        )
        breaks = breaks[breaks >= theta_targets.min()]
        a, b = breaks[:-1], breaks[1:]
        rule = gauss_legendre(order)
        half = 0.5 * (b - a)
        nodes = a[:, None] + half[:, None] * (rule.nodes[None, :] + 1.0)
        weights = half[:, None] * rule.weights[None, :]
        return cls(
            t=np.cos(nodes).ravel(),
            weights=weights.ravel(),
            count=a.size,
            order=order,
            start=np.searchsorted(breaks, theta_targets),
        )

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Tail integrals from each target colatitude to pi, values shaped (n_r, count * order)"""
        weighted = values * self.weights
        per_panel = weighted.reshape(values.shape[0], self.count, self.order).sum(axis=2)
        tail = np.zeros((values.shape[0], self.count + 1))
        tail[:, : self.count] = np.cumsum(per_panel[:, ::-1], axis=1)[:, ::-1]
        return tail[:, self.start]


def _grid_key(r: np.ndarray, t: np.ndarray) -> Tuple[bytes, bytes]:
    return r.tobytes(), t.tobytes()


class SourceEvaluator:
    """
    Axisymmetric source term S^u(r, t) on tensor grids

    Subclasses implement _compute_grid. The last grid is cached, so repeated projections onto
    the same quadrature grid reuse it.
    """

    def __init__(self, model: PlanetModel):
        self.model = model
        self._last: Optional[Tuple[Tuple[bytes, bytes], np.ndarray]] = None

    def _compute_grid(self, r: np.ndarray, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def source_grid(self, r, t) -> np.ndarray:
        """S(r_i, t_k) with shape (len(r), len(t))"""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(r <= 0.0) or np.any(r > self.model.R * (1.0 + 1e-12)):
            raise DomainError(f"Source term is evaluated for r in (0, R] with R={self.model.R}")
        key = _grid_key(r, t)
        cached = self._last
        if cached is not None and cached[0] == key:
            return cached[1]
        grid = self._compute_grid(r, t)
        grid.setflags(write=False)
        self._last = (key, grid)
        return grid

    def _from_tail(self, r: np.ndarray, tail: np.ndarray) -> np.ndarray:
        factor = -2.0 * self.model.k0**2 * self.model.Omega * np.asarray(r_over_drho(self.model, r))
        return factor[:, None] * tail


class FunctionSourceEvaluator(SourceEvaluator):
    """Source term given directly as a vectorized callable S(r, t)"""

    def __init__(self, model: PlanetModel, func: Callable[[np.ndarray, np.ndarray], np.ndarray]):
        super().__init__(model)
        self.func = func

    def _compute_grid(self, r, t):
        values = np.asarray(self.func(r[:, None], t[None, :]), dtype=float)
        return np.array(np.broadcast_to(values, (r.size, t.size)))


class FieldSourceEvaluator(SourceEvaluator):
    """
    Source term of an arbitrary continuous mass flux rho_0 u_phi given with its partials

    kinks lists t values where the partials jump; they become panel boundaries.
    """

    def __init__(
        self,
        model: PlanetModel,
        flux: AxisymmetricField,
        panel_order: int = NumericsSettings.panel_order,
        kinks: Sequence[float] = (),
    ):
        super().__init__(model)
        self.flux = flux
        self.panel_order = panel_order
        self.kinks = tuple(kinks)

    def _compute_grid(self, r, t):
        panels = ColatitudePanels.build(t, self.panel_order, breakpoints=self.kinks)
        integrand = axial_derivative(self.flux, r[:, None], panels.t[None, :])
        return self._from_tail(r, panels.integrate(np.atleast_2d(integrand)))


class WindSourceEvaluator(SourceEvaluator):
    """
    Source term of u_phi = Q_p(r) u_proj(r, t)

    Q_p is radial, so d/dx3 (rho_0 Q u) = t (rho_0 Q)' u + rho_0 Q du/dx3. The colatitude
    integrals of t u and du/dx3 depend only on the base wind and are cached per grid; a new
    decay law (with_decay) only recombines them. For the unsmoothed projection the equatorial
    jump contributes (F_N - F_S)(r, 0) / r to C for t > 0.
    """

    def __init__(
        self,
        model: PlanetModel,
        projected: ProjectedWind,
        decay: DecayParams,
        equatorial_jump: bool = True,
        panel_order: int = NumericsSettings.panel_order,
        _base_cache: Optional[Dict] = None,
    ):
        super().__init__(model)
        if not math.isclose(projected.R, model.R):
            raise DomainError("Wind profile radius does not match the planet radius")
        self.projected = projected
        self.decay = decay
        self.equatorial_jump = equatorial_jump
        self.panel_order = panel_order
        self._base_cache = {} if _base_cache is None else _base_cache

    def with_decay(self, decay: DecayParams) -> "WindSourceEvaluator":
        """Evaluator for another decay law sharing the base-wind caches"""
        return WindSourceEvaluator(
            self.model,
            self.projected,
            decay,
            equatorial_jump=self.equatorial_jump,
            panel_order=self.panel_order,
            _base_cache=self._base_cache,
        )

    def wind(self, r, t):
        R = self.model.R
        return decay_factor(self.decay, r, t, R) * np.asarray(self.projected.value(r, t))

    def _base(self, r: np.ndarray, t: np.ndarray):
        key = _grid_key(r, t)
        if key not in self._base_cache:
            panels = ColatitudePanels.build(
                t, self.panel_order, breakpoints=self.projected.kinks
            )
            rr, tt = r[:, None], panels.t[None, :]
            u = np.asarray(self.projected.value(rr, tt))
            du = np.atleast_2d(axial_derivative(self.projected, rr, tt))
            tail_u = panels.integrate(tt * u)
            tail_du = panels.integrate(du)
            if self.equatorial_jump:
                jump = np.asarray(self.projected.jump(r)) / r
                tail_du = tail_du + jump[:, None] * (t[None, :] > 0.0)
            self._base_cache[key] = (tail_u, tail_du)
        return self._base_cache[key]

    def _compute_grid(self, r, t):
        tail_u, tail_du = self._base(r, t)
        R = self.model.R
        rho = np.asarray(background_density(self.model, r))
        drho = np.asarray(background_density_gradient(self.model, r))
        q = np.asarray(decay_factor(self.decay, r, 0.0, R))
        dq = np.asarray(decay_factor_derivative(self.decay, r, R))
        g = rho * q
        dg = drho * q + rho * dq
        return self._from_tail(r, dg[:, None] * tail_u + g[:, None] * tail_du)


def source_term(ev: SourceEvaluator, r, t):
    """S^u at (r, t); scalars give a float, arrays the (len(r), len(t)) grid"""
    grid = ev.source_grid(r, t)
    if np.ndim(r) == 0 and np.ndim(t) == 0:
        return float(grid[0, 0])
    return grid


# ---------------------------------------------------------------------------
# TGWE: spectral Helmholtz solve
# ---------------------------------------------------------------------------


def _truncation(ctx: BasisContext, m_max: Optional[int], n_max: Optional[int]) -> Tuple[int, int]:
    m_max = ctx.m_max if m_max is None else m_max
    n_max = ctx.n_max if n_max is None else n_max
    ctx.check(m_max, n_max)
    return m_max, n_max


def source_coefficients(
    ctx: BasisContext, ev: SourceEvaluator, m_max: Optional[int] = None, n_max: Optional[int] = None
) -> np.ndarray:
    """<S^u, u_{m,n,0}> as a dense array indexed [n, m - 1]"""
    m_max, n_max = _truncation(ctx, m_max, n_max)
    r, _ = ctx.radial_nodes
    t, _ = ctx.angular_nodes
    return expand_field(ctx, ev.source_grid(r, t), m_max, n_max)


def helmholtz_denominators(ctx: BasisContext, m_max: int, n_max: int) -> np.ndarray:
    """(pi/R)^2 - gamma_{n,m}^2 indexed [n, m - 1]"""
    return np.vstack([ctx.k0**2 - ctx.gammas(n)[:m_max] ** 2 for n in range(n_max + 1)])


def solve_helmholtz(
    ctx: BasisContext,
    source: np.ndarray,
    tolerance: float = NumericsSettings.degenerate_tolerance,
) -> np.ndarray:
    """
    Potential coefficients from source coefficients, both indexed [n, m - 1]

    The (1, 1) mode and every n = 0 mode are set to zero.

    Raises:
        DegenerateModeError: if another retained denominator falls below tolerance (pi/R)^2
    """
    n_max, m_max = source.shape[0] - 1, source.shape[1]
    denominators = helmholtz_denominators(ctx, m_max, n_max)
    potential = np.zeros_like(source)
    for n in range(1, n_max + 1):
        for m in range(1, m_max + 1):
            if (m, n) == (1, 1):
                continue
            den = denominators[n, m - 1]
            if abs(den) < tolerance * ctx.k0**2:
                raise DegenerateModeError(
                    f"Helmholtz denominator for (m={m}, n={n}) is {den:.3e}",
                    {"m": m, "n": n, "denominator": den, "k0_squared": ctx.k0**2},
                )
            potential[n, m - 1] = source[n, m - 1] / den
    return potential


def potential_coefficients(
    ctx: BasisContext, ev: SourceEvaluator, m_max: Optional[int] = None, n_max: Optional[int] = None
) -> CoeffSet:
    """<V', u_{m,n,0}> for the inhomogeneous Helmholtz equation with source S^u"""
    return CoeffSet.from_array(solve_helmholtz(ctx, source_coefficients(ctx, ev, m_max, n_max)))


@dataclass(frozen=True)
class JnSeries:
    """Partial sum over m of the dJ_n series with its tail estimate"""

    n: int
    value: float
    tail: float
    terms: np.ndarray = field(compare=False)


def _jn_series(
    ctx: BasisContext,
    model: PlanetModel,
    potential: np.ndarray,
    n: int,
    settings: NumericsSettings,
) -> JnSeries:
    m_max = potential.shape[1]
    prefactor = math.sqrt((2 * n + 1) / (4.0 * math.pi)) * ctx.R / model.GM
    terms = prefactor * potential[n] * ctx.surface_values(n)[:m_max]
    value = float(np.sum(terms))
    tail = float(np.sum(np.abs(terms[-settings.tail_terms :])))
    if tail > settings.tail_warning_ratio * abs(value) and np.any(terms != 0.0):
        logger.warning(
            "dJ_%d series tail %.3e exceeds %.0f%% of the partial sum %.3e at m_max=%d",
            n,
            tail,
            100.0 * settings.tail_warning_ratio,
            value,
            m_max,
        )
    return JnSeries(n=n, value=value, tail=tail, terms=terms)


def delta_jn_tgwe_series(
    ctx: BasisContext,
    ev: SourceEvaluator,
    n: int,
    m_max: Optional[int] = None,
    settings: Optional[NumericsSettings] = None,
) -> JnSeries:
    if n < 2:
        raise DomainError(f"Dynamic coefficients start at n = 2, got {n}")
    m_max, _ = _truncation(ctx, m_max, n)
    potential = solve_helmholtz(ctx, source_coefficients(ctx, ev, m_max, n))
    return _jn_series(ctx, ev.model, potential, n, settings or NumericsSettings())


def delta_jn_tgwe(
    ctx: BasisContext, ev: SourceEvaluator, n: int, m_max: Optional[int] = None
) -> float:
    """
    Wind-induced dJ_n from the spectral potential

        sqrt((2n+1)/(4 pi)) (R/GM) sum_m <S^u, u_{m,n,0}> / ((pi/R)^2 - gamma_{n,m}^2) B_{m,n}(R)

    Logs a warning when the last five terms exceed 1% of the partial sum.
    """
    return delta_jn_tgwe_series(ctx, ev, n, m_max).value


# ---------------------------------------------------------------------------
# TWE: direct density quadrature
# ---------------------------------------------------------------------------


def delta_jn_twe(
    model: PlanetModel,
    ev: SourceEvaluator,
    n: int,
    radial_order: int = NumericsSettings.radial_order,
    angular_order: int = NumericsSettings.angular_order,
    eta: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> float:
    """
    dJ_n = -(1/(M R^n)) 2 pi double integral of r^(n+2) P_n(t) rho'(r, t), rho' = S^u / (4 pi G)

    eta adds a radial density perturbation; it integrates to zero against P_n for n >= 2.
    """
    if n < 2:
        raise DomainError(f"Dynamic coefficients start at n = 2, got {n}")
    r, wr = gauss_legendre(radial_order).mapped(0.0, model.R)
    t_rule = gauss_legendre(angular_order)
    density = ev.source_grid(r, t_rule.nodes) / (4.0 * math.pi * model.G)
    if eta is not None:
        density = density + np.asarray(eta(r), dtype=float)[:, None]
    angular = density @ (t_rule.weights * np.asarray(legendre_p(n, t_rule.nodes)))
    integral = 2.0 * math.pi * np.dot(wr * r ** (n + 2), angular)
    return float(-integral / (model.M * model.R**n))


# ---------------------------------------------------------------------------
# Exterior field
# ---------------------------------------------------------------------------


def surface_potential_jn(
    ctx: BasisContext, model: PlanetModel, coeffs: CoeffSet, n: int
) -> float:
    """(2n+1)/(4 pi) (R/GM) times the surface integral of V'(R xi) P_n(xi_3)"""
    if n < 2:
        raise DomainError(f"Dynamic coefficients start at n = 2, got {n}")
    t, w = ctx.angular_nodes
    surface = synthesize_surface(ctx, coeffs, t)
    integral = 2.0 * math.pi * np.dot(w, surface * np.asarray(legendre_p(n, t)))
    return float((2 * n + 1) / (4.0 * math.pi) * ctx.R / model.GM * integral)


def external_potential(coeffs: GravityCoeffs, r, t):
    """-GM/r (1 - sum of J_n (R/r)^n P_n(t)) for r > R"""
    r_arr, t_arr = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(t, dtype=float))
    if np.any(r_arr <= coeffs.R):
        raise DomainError(f"Exterior potential needs r > R={coeffs.R}")
    n_top = max(coeffs.n, default=0)
    table = legendre_table(max(n_top, 1), t_arr.ravel()).reshape((-1,) + t_arr.shape)
    series = np.zeros_like(r_arr)
    for n, value in zip(coeffs.n, coeffs.dJ):
        series = series + value * (coeffs.R / r_arr) ** n * table[n]
    values = -coeffs.GM / r_arr * (1.0 - series)
    return float(values) if values.ndim == 0 else values


# ---------------------------------------------------------------------------
# Pipeline
# ---------------------------------------------------------------------------


def compute_gravity_coeffs(
    ctx: BasisContext,
    ev: SourceEvaluator,
    model_tag: ModelTag,
    N: int,
    m_max: Optional[int] = None,
    settings: Optional[NumericsSettings] = None,
) -> GravityCoeffs:
    """dJ_n for n = 2..N under the given dynamic model"""
    if N < 2:
        raise DomainError(f"Coefficient cut N must be >= 2, got {N}")
    settings = settings or NumericsSettings()
    model = ev.model
    degrees = list(range(2, N + 1))
    if model_tag == ModelTag.TGWE:
        m_max, _ = _truncation(ctx, m_max, N)
        potential = solve_helmholtz(
            ctx, source_coefficients(ctx, ev, m_max, N), settings.degenerate_tolerance
        )
        series = [_jn_series(ctx, model, potential, n, settings) for n in degrees]
        values, tail = [s.value for s in series], [s.tail for s in series]
    else:
        m_max = ctx.m_max if m_max is None else m_max
        values = [
            delta_jn_twe(model, ev, n, ctx.radial_rule.order, ctx.angular_rule.order)
            for n in degrees
        ]
        tail = []
    logger.info("Computed %s coefficients for n = 2..%d", model_tag.value, N)
    return GravityCoeffs(
        model=model_tag,
        GM=model.GM,
        R=model.R,
        n=degrees,
        dJ=values,
        m_max=m_max,
        radial_order=ctx.radial_rule.order,
        angular_order=ctx.angular_rule.order,
        tail=tail,
    )


def tgwe_contributions(
    ctx: BasisContext, ev: SourceEvaluator, N: int, m_max: Optional[int] = None
) -> List[Dict[str, float]]:
    """Per-(n, m) rows of source coefficient, potential coefficient and series term"""
    m_max, _ = _truncation(ctx, m_max, N)
    source = source_coefficients(ctx, ev, m_max, N)
    potential = solve_helmholtz(ctx, source)
    rows = []
    for n in range(2, N + 1):
        prefactor = math.sqrt((2 * n + 1) / (4.0 * math.pi)) * ctx.R / ev.model.GM
        surface = ctx.surface_values(n)
        for m in range(1, m_max + 1):
            rows.append(
                {
                    "n": n,
                    "m": m,
                    "source_coeff": float(source[n, m - 1]),
                    "potential_coeff": float(potential[n, m - 1]),
                    "term": float(prefactor * potential[n, m - 1] * surface[m - 1]),
                }
            )
    return rows


def manufactured_source(
    ctx: BasisContext, model: PlanetModel, m: int, n: int
) -> FunctionSourceEvaluator:
    """
    Source ((pi/R)^2 - gamma_{n,m}^2) u_{m,n,0}, whose potential is the single mode u_{m,n,0}

    dJ_n then reduces to sqrt((2n+1)/(4 pi)) (R/GM) B_{m,n}(R).
    """
    ctx.check(m, n)
    if n < 1 or (m, n) == (1, 1):
        raise DomainError(f"Manufactured mode needs n >= 1 and (m, n) != (1, 1), got ({m}, {n})")
    amplitude = ctx.k0**2 - ctx.gamma(n, m) ** 2

    def source(r, t):
        return amplitude * radial_basis_eval(ctx, m, n, r) * np.asarray(sph_harmonic(n, 0, 0.0, t))

    return FunctionSourceEvaluator(model, source)
