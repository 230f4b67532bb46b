#!/usr/bin/env python3
"""
Tests for the polytropic background state and planet records
"""

import math

import numpy as np
import pytest
from core_types.planet import BackgroundJ, PlanetModel
from windgrav.errors import DomainError
from windgrav.planet_utils import (
    background_density,
    background_density_gradient,
    background_helmholtz_residual,
    background_Jn,
    background_Jn_integral,
    background_mass,
    r_over_drho,
)

PRESETS = {"jupiter": {"R": 71492000.0, "M": 1.898e27, "Omega": 1.7585e-4}}

MODELS = [PlanetModel.normalized(), PlanetModel.from_preset("Jupiter", PRESETS)]


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.name)
def test_background_mass_matches_planet_mass(model):
    assert background_mass(model) == pytest.approx(model.M, rel=1e-10)


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.name)
def test_density_profile_endpoints(model):
    assert background_density(model, model.R) == 0.0
    assert background_density(model, 0.0) == pytest.approx(model.rho_bar * math.pi**2 / 3.0)
    r = np.linspace(0.0, model.R, 11)
    assert np.all(np.diff(background_density(model, r)) < 0.0)
    assert np.all(background_density_gradient(model, r[1:]) < 0.0)


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.name)
def test_density_solves_helmholtz_equation(model):
    r = np.linspace(0.05, 1.0, 20) * model.R
    residual = np.abs(background_helmholtz_residual(model, r))
    assert np.max(residual) < 1e-9 * model.rho_bar * math.pi**2
    with pytest.raises(DomainError):
        background_helmholtz_residual(model, 0.0)


def test_background_harmonics_of_radial_density_vanish():
    model = PlanetModel.normalized()
    for n in range(2, 7):
        assert abs(background_Jn_integral(model, n)) < 1e-12
        assert background_Jn(model, n) == 0.0


def test_background_harmonics_from_table():
    model = PlanetModel.normalized()
    table = BackgroundJ(n=[2, 3, 4], J0=[1.4697e-2, 0.0, -5.87e-4])
    assert background_Jn(model, 2, table) == 1.4697e-2
    assert background_Jn(model, 4, table) == -5.87e-4
    assert background_Jn(model, 6, table) == 0.0
    with pytest.raises(DomainError):
        background_Jn(model, 1, table)


def test_r_over_drho_is_finite_at_centre():
    model = PlanetModel.from_preset("jupiter", PRESETS)
    limit = -9.0 * model.R**2 / (model.rho_bar * math.pi**4)
    assert r_over_drho(model, 0.0) == limit
    assert r_over_drho(model, 2e-6 * model.R) == pytest.approx(limit, rel=1e-9)
    r = 0.5 * model.R
    assert r_over_drho(model, r) == pytest.approx(r / background_density_gradient(model, r))


def test_radius_domain():
    model = PlanetModel.normalized()
    with pytest.raises(DomainError):
        background_density(model, 1.01)
    with pytest.raises(DomainError):
        background_density(model, -0.1)
    # Rounding just past the surface is clamped
    assert background_density(model, 1.0 + 1e-14) == 0.0


def test_planet_model_properties():
    model = PlanetModel(R=2.0, M=3.0, Omega=0.5, G=1.0)
    assert model.K == pytest.approx(8.0 / math.pi)
    assert model.rho_bar == pytest.approx(9.0 / (32.0 * math.pi))
    assert model.GM == 3.0
    assert model.k0 == pytest.approx(math.pi / 2.0)
    # 4 pi G / K equals 2 k0^2
    assert 4.0 * math.pi * model.G / model.K == pytest.approx(2.0 * model.k0**2)


def test_planet_model_validation():
    with pytest.raises(ValueError):
        PlanetModel(R=-1.0, M=1.0, Omega=1.0)
    with pytest.raises(ValueError):
        PlanetModel(R=1.0, M=float("nan"), Omega=1.0)
    with pytest.raises(ValueError):
        PlanetModel.from_preset("neptune", PRESETS)
    jupiter = PlanetModel.from_preset("JUPITER", PRESETS)
    assert jupiter.name == "jupiter"
    assert jupiter.G == 6.67430e-11


def test_background_table_validation():
    with pytest.raises(ValueError):
        BackgroundJ(n=[2, 3], J0=[1.0])
    with pytest.raises(ValueError):
        BackgroundJ(n=[3, 2], J0=[1.0, 2.0])
    with pytest.raises(ValueError):
        BackgroundJ(n=[1, 2], J0=[1.0, 2.0])
    assert BackgroundJ(n=[], J0=[]).value(2) == 0.0
