"""
Polytropic background state

Density rho_0(r) = rho_bar (pi^2/3) j_0(pi r / R) of an index-one polytrope, its radial
derivatives and the hydrostatic background coefficients.
"""

import logging
import math
from typing import Optional

import numpy as np
from core_types.planet import BackgroundJ, PlanetModel

from windgrav.errors import DomainError
from windgrav.numerics import gauss_legendre, legendre_p, sph_bessel_j, sph_bessel_j_second
from windgrav.settings import NumericsSettings

logger = logging.getLogger(__name__)

_RADIUS_SLACK = 1e-12


def _radii(model: PlanetModel, r):
    values = np.asarray(r, dtype=float)
    scalar = values.ndim == 0
    values = np.atleast_1d(values)
    if np.any(values < 0.0) or np.any(values > model.R * (1.0 + _RADIUS_SLACK)):
        raise DomainError(f"Radius outside [0, R] with R={model.R}")
    return np.minimum(values, model.R), scalar


def _out(values: np.ndarray, scalar: bool):
    return float(values[0]) if scalar else values


def background_density(model: PlanetModel, r):
    """rho_0(r), zero at the surface"""
    radii, scalar = _radii(model, r)
    amplitude = model.rho_bar * math.pi**2 / 3.0
    values = amplitude * np.asarray(sph_bessel_j(0, model.k0 * radii))
    values[radii == model.R] = 0.0
    return _out(values, scalar)


def background_density_gradient(model: PlanetModel, r):
    """d rho_0 / dr = -rho_bar (pi^2/3) (pi/R) j_1(pi r / R)"""
    radii, scalar = _radii(model, r)
    amplitude = model.rho_bar * math.pi**2 / 3.0 * model.k0
    return _out(-amplitude * np.asarray(sph_bessel_j(1, model.k0 * radii)), scalar)


def background_density_second(model: PlanetModel, r):
    """Second radial derivative of rho_0 for r > 0"""
    radii, scalar = _radii(model, r)
    amplitude = model.rho_bar * math.pi**2 / 3.0 * model.k0**2
    return _out(amplitude * np.asarray(sph_bessel_j_second(0, model.k0 * radii)), scalar)


def r_over_drho(
    model: PlanetModel,
    r,
    limit_fraction: float = NumericsSettings.origin_limit_fraction,
):
    """
    r / (d rho_0 / dr), finite at the centre

    Below limit_fraction * R the limit -9 R^2 / (rho_bar pi^4) from j_1(x) ~ x/3 is used.
    """
    radii, scalar = _radii(model, r)
    out = np.full_like(radii, -9.0 * model.R**2 / (model.rho_bar * math.pi**4))
    outer = radii >= limit_fraction * model.R
    if np.any(outer):
        out[outer] = radii[outer] / np.asarray(background_density_gradient(model, radii[outer]))
    return _out(out, scalar)


def background_mass(model: PlanetModel, order: int = 64) -> float:
    """4 pi times the integral of r^2 rho_0 over [0, R]"""
    r, w = gauss_legendre(order).mapped(0.0, model.R)
    return float(4.0 * math.pi * np.dot(w, r * r * np.asarray(background_density(model, r))))


def background_helmholtz_residual(model: PlanetModel, r):
    """r^2 rho_0'' + 2 r rho_0' + (pi/R)^2 r^2 rho_0, zero for the polytrope"""
    radii, scalar = _radii(model, r)
    if np.any(radii <= 0.0):
        raise DomainError("Helmholtz residual is evaluated for r > 0")
    residual = (
        radii**2 * np.asarray(background_density_second(model, radii))
        + 2.0 * radii * np.asarray(background_density_gradient(model, radii))
        + model.k0**2 * radii**2 * np.asarray(background_density(model, radii))
    )
    return _out(residual, scalar)


def background_Jn(model: PlanetModel, n: int, background: Optional[BackgroundJ] = None) -> float:
    """
    Hydrostatic background coefficient J0_n

    The radial density contributes nothing for n >= 2, so this is zero unless a loaded
    background table supplies the value.
    """
    if n < 2:
        raise DomainError(f"Background coefficients start at n = 2, got {n}")
    if background is not None:
        return background.value(n)
    return 0.0


def background_Jn_integral(
    model: PlanetModel, n: int, radial_order: int = 64, angular_order: int = 64
) -> float:
    """-(1/(M R^n)) 2 pi times the integral of r^(n+2) P_n(t) rho_0(r), by direct quadrature"""
    r, wr = gauss_legendre(radial_order).mapped(0.0, model.R)
    t_rule = gauss_legendre(angular_order)
    radial = np.dot(wr, r ** (n + 2) * np.asarray(background_density(model, r)))
    angular = t_rule.integrate(np.asarray(legendre_p(n, t_rule.nodes)))
    return float(-2.0 * math.pi * radial * angular / (model.M * model.R**n))
