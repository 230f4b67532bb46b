#!/usr/bin/env python3
"""
Tests for the source term, the spectral Helmholtz solve and the dJ_n pipelines
"""

import logging
import math

import numpy as np
import pytest
from scipy.integrate import quad
from core_types.basis import CoeffSet, ZeroTable
from core_types.gravity import GravityCoeffs, ModelTag
from core_types.planet import PlanetModel
from core_types.wind import DecayFamily, DecayParams
from windgrav.basis_utils import BasisContext
from windgrav.dynamics_utils import (
    ColatitudePanels,
    FieldSourceEvaluator,
    MassFlux,
    WindSourceEvaluator,
    axial_derivative,
    compute_gravity_coeffs,
    delta_jn_tgwe,
    delta_jn_tgwe_series,
    delta_jn_twe,
    external_potential,
    manufactured_source,
    potential_coefficients,
    solve_helmholtz,
    source_term,
    surface_potential_jn,
    tgwe_contributions,
)
from windgrav.errors import EXIT_FAILURE, DegenerateModeError, DomainError
from windgrav.numerics import find_bessel_zeros, legendre_p
from windgrav.planet_utils import r_over_drho
from windgrav.wind_utils import ProjectedWind, SurfaceWindProfile, ZonalWind

MANUFACTURED_DJ2 = math.sqrt(5.0 / (2.0 * math.pi))

EXPONENTIAL = DecayParams(family=DecayFamily.EXPONENTIAL, params=[0.1])


def _asymmetric(t):
    return 100.0 * (1.0 - t**2) + 20.0 * t * (1.0 - t**2)


@pytest.fixture(scope="module")
def model():
    return PlanetModel.normalized()


@pytest.fixture(scope="module")
def ctx():
    return BasisContext.build(1.0, 20, 8, radial_order=96, angular_order=64)


@pytest.fixture(scope="module")
def profile():
    return SurfaceWindProfile.from_function(_asymmetric)


@pytest.fixture(scope="module")
def wind_ev(model, profile):
    return WindSourceEvaluator(model, ProjectedWind(profile, 1.0), EXPONENTIAL)


def test_zero_wind_gives_zero_coefficients(ctx, model):
    ev = WindSourceEvaluator(
        model, ProjectedWind(SurfaceWindProfile.zero(), 1.0), DecayParams(family=DecayFamily.NONE)
    )
    for tag in (ModelTag.TGWE, ModelTag.TWE):
        coeffs = compute_gravity_coeffs(ctx, ev, tag, 8)
        assert coeffs.dJ == [0.0] * 7


def test_manufactured_mode_recovers_closed_form(ctx, model):
    ev = manufactured_source(ctx, model, 1, 2)
    value = delta_jn_tgwe(ctx, ev, 2)
    assert abs(abs(value) - MANUFACTURED_DJ2) < 1e-6
    expected = math.sqrt(5.0 / (4.0 * math.pi)) * ctx.surface_values(2)[0]
    assert value == pytest.approx(expected, rel=1e-9)

    coeffs = potential_coefficients(ctx, ev)
    assert coeffs.get(1, 2) == pytest.approx(1.0, abs=1e-9)
    others = [v for key, v in coeffs.items() if key != (1, 2)]
    assert max(abs(v) for v in others) < 1e-9


def test_manufactured_mode_rejects_excluded_indices(ctx, model):
    with pytest.raises(DomainError):
        manufactured_source(ctx, model, 1, 1)
    with pytest.raises(DomainError):
        manufactured_source(ctx, model, 1, 0)


def test_degree_below_two_is_rejected(ctx, model, wind_ev):
    with pytest.raises(DomainError):
        delta_jn_tgwe(ctx, wind_ev, 1)
    with pytest.raises(DomainError):
        delta_jn_twe(model, wind_ev, 0)
    with pytest.raises(DomainError):
        compute_gravity_coeffs(ctx, wind_ev, ModelTag.TGWE, 1)
    with pytest.raises(DomainError):
        surface_potential_jn(ctx, model, potential_coefficients(ctx, wind_ev), 1)


@pytest.mark.parametrize("tag", [ModelTag.TGWE, ModelTag.TWE])
def test_coefficients_are_linear_in_wind(ctx, model, profile, tag):
    base = compute_gravity_coeffs(
        ctx, WindSourceEvaluator(model, ProjectedWind(profile, 1.0), EXPONENTIAL), tag, 6
    )
    tripled = compute_gravity_coeffs(
        ctx,
        WindSourceEvaluator(model, ProjectedWind(profile.scaled(3.0), 1.0), EXPONENTIAL),
        tag,
        6,
    )
    np.testing.assert_allclose(tripled.dJ, 3.0 * np.array(base.dJ), rtol=1e-10)


@pytest.mark.parametrize("tag", [ModelTag.TGWE, ModelTag.TWE])
def test_symmetric_wind_has_no_odd_harmonics(ctx, model, tag):
    symmetric = SurfaceWindProfile.from_function(lambda t: 1.0 - t**2)
    decay = DecayParams(family=DecayFamily.EXPONENTIAL, params=[0.2])
    ev = WindSourceEvaluator(model, ProjectedWind(symmetric, 1.0), decay)
    coeffs = compute_gravity_coeffs(ctx, ev, tag, 8)
    values = dict(zip(coeffs.n, coeffs.dJ))
    largest_even = max(abs(values[n]) for n in (2, 4, 6, 8))
    assert largest_even > 0.0
    for n in (3, 5, 7):
        assert abs(values[n]) < 1e-9 * largest_even


def test_asymmetric_wind_has_odd_harmonics(ctx, wind_ev):
    coeffs = compute_gravity_coeffs(ctx, wind_ev, ModelTag.TGWE, 5)
    assert abs(coeffs.value(3)) > 1e-6 * abs(coeffs.value(2))


def test_series_matches_surface_projection(ctx, model, wind_ev):
    coeffs = potential_coefficients(ctx, wind_ev)
    for n in range(2, 9):
        direct = surface_potential_jn(ctx, model, coeffs, n)
        assert delta_jn_tgwe(ctx, wind_ev, n) == pytest.approx(direct, rel=1e-8, abs=1e-14)


def test_gauge_modes_are_zero(ctx, wind_ev):
    coeffs = potential_coefficients(ctx, wind_ev)
    assert all(coeffs.get(m, 0) == 0.0 for m in range(1, 21))
    assert coeffs.get(1, 1) == 0.0


def test_twe_ignores_radial_density(model, wind_ev):
    for n in (2, 3, 4):
        plain = delta_jn_twe(model, wind_ev, n, 96, 64)
        shifted = delta_jn_twe(model, wind_ev, n, 96, 64, eta=lambda r: 5.0 * (1.0 - r * r))
        assert abs(plain - shifted) < 1e-12 * max(1.0, abs(plain))


def test_degenerate_denominator_raises(ctx):
    lam = find_bessel_zeros(8, 20).lam.copy()
    lam[2, 0] = math.pi
    degenerate = BasisContext.build(
        1.0, 20, 8, radial_order=32, angular_order=32, zeros=ZeroTable(8, 20, lam)
    )
    with pytest.raises(DegenerateModeError) as excinfo:
        solve_helmholtz(degenerate, np.ones((9, 20)))
    assert excinfo.value.detail["m"] == 1 and excinfo.value.detail["n"] == 2
    assert excinfo.value.exit_code == EXIT_FAILURE
    # The excluded (1, 1) mode never trips the check
    assert np.all(solve_helmholtz(ctx, np.ones((9, 20)))[1, 0] == 0.0)


def test_external_potential():
    coeffs = GravityCoeffs(
        model=ModelTag.TGWE, GM=2.0, R=1.0, n=[2, 3], dJ=[1e-3, 2e-4], m_max=20
    )
    series = 1e-3 * 0.25 * legendre_p(2, 0.5) + 2e-4 * 0.125 * legendre_p(3, 0.5)
    assert external_potential(coeffs, 2.0, 0.5) == pytest.approx(-1.0 * (1.0 - series))
    grid = external_potential(coeffs, np.array([[1.5], [2.0], [4.0]]), np.linspace(-1, 1, 4))
    assert grid.shape == (3, 4)
    with pytest.raises(DomainError):
        external_potential(coeffs, 1.0, 0.0)


def test_field_evaluator_agrees_with_wind_evaluator(model, profile):
    projected = ProjectedWind(profile, 1.0, smoothing=0.2)
    fast = WindSourceEvaluator(model, projected, EXPONENTIAL)
    general = FieldSourceEvaluator(
        model, MassFlux(model, ZonalWind(projected, EXPONENTIAL)), kinks=projected.kinks
    )
    r = np.array([0.3, 0.6, 0.9])
    t = np.array([-0.7, -0.1, 0.05, 0.4, 0.8])
    expected = fast.source_grid(r, t)
    scale = np.max(np.abs(expected))
    np.testing.assert_allclose(general.source_grid(r, t), expected, rtol=1e-9, atol=1e-12 * scale)


def test_source_grid_caching_and_domain(model, wind_ev):
    r = np.array([0.4, 0.8])
    t = np.array([-0.5, 0.5])
    grid = wind_ev.source_grid(r, t)
    assert wind_ev.source_grid(r, t) is grid
    assert not grid.flags.writeable
    assert isinstance(source_term(wind_ev, 0.4, 0.5), float)
    with pytest.raises(DomainError):
        wind_ev.source_grid(np.array([0.0, 0.5]), t)
    with pytest.raises(DomainError):
        axial_derivative(wind_ev.projected, 0.0, 0.5)


def test_with_decay_reuses_base_integrals(model, wind_ev):
    other = DecayParams(family=DecayFamily.TANH_STEP, params=[0.8, 0.05])
    shared = wind_ev.with_decay(other)
    assert shared._base_cache is wind_ev._base_cache
    fresh = WindSourceEvaluator(model, wind_ev.projected, other)
    r = np.array([0.5, 0.85])
    t = np.array([-0.3, 0.2, 0.9])
    np.testing.assert_array_equal(shared.source_grid(r, t), fresh.source_grid(r, t))


def test_equatorial_jump_only_affects_northern_hemisphere(model, profile):
    projected = ProjectedWind(profile, 1.0)
    with_jump = WindSourceEvaluator(model, projected, EXPONENTIAL, equatorial_jump=True)
    without = WindSourceEvaluator(model, projected, EXPONENTIAL, equatorial_jump=False)
    r = np.array([0.5, 0.9])
    t = np.array([-0.6, -0.2, 0.2, 0.6])
    diff = with_jump.source_grid(r, t) - without.source_grid(r, t)
    np.testing.assert_array_equal(diff[:, :2], 0.0)
    assert np.all(np.abs(diff[:, 2:]) > 0.0)
    # The jump term is constant in t on the northern side
    np.testing.assert_allclose(diff[:, 2], diff[:, 3], rtol=1e-12)


def test_tail_warning_when_truncation_is_too_small(model, caplog):
    small = BasisContext.build(1.0, 5, 2, radial_order=64, angular_order=32)
    ev = manufactured_source(small, model, 5, 2)
    with caplog.at_level(logging.WARNING, logger="windgrav.dynamics_utils"):
        series = delta_jn_tgwe_series(small, ev, 2)
    assert "tail" in caplog.text
    assert series.tail == pytest.approx(abs(series.value), rel=1e-6)


def test_no_tail_warning_for_converged_mode(ctx, model, caplog):
    ev = manufactured_source(ctx, model, 1, 2)
    with caplog.at_level(logging.WARNING, logger="windgrav.dynamics_utils"):
        delta_jn_tgwe(ctx, ev, 2)
    assert "tail" not in caplog.text


def test_contributions_sum_to_coefficients(ctx, wind_ev):
    rows = tgwe_contributions(ctx, wind_ev, 4)
    assert len(rows) == 3 * 20
    assert set(rows[0]) == {"n", "m", "source_coeff", "potential_coeff", "term"}
    for n in (2, 3, 4):
        total = sum(row["term"] for row in rows if row["n"] == n)
        assert total == pytest.approx(delta_jn_tgwe(ctx, wind_ev, n), rel=1e-9, abs=1e-15)


def test_gravity_coeffs_provenance(ctx, wind_ev):
    tgwe = compute_gravity_coeffs(ctx, wind_ev, ModelTag.TGWE, 6)
    assert tgwe.n == [2, 3, 4, 5, 6]
    assert tgwe.m_max == 20 and tgwe.radial_order == 96 and tgwe.angular_order == 64
    assert len(tgwe.tail) == 5
    twe = compute_gravity_coeffs(ctx, wind_ev, ModelTag.TWE, 6)
    assert twe.model == ModelTag.TWE and twe.tail == []
    narrow = compute_gravity_coeffs(ctx, wind_ev, ModelTag.TGWE, 6, m_max=10)
    assert narrow.m_max == 10


class _GeostrophicFlux:
    """rho_0 u_phi = F(r sqrt(1 - t^2)), constant along the rotation axis"""

    def value(self, r, t):
        return np.sin(3.0 * r * np.sqrt(1.0 - t * t))

    def d_r(self, r, t):
        s = np.sqrt(1.0 - t * t)
        return 3.0 * s * np.cos(3.0 * r * s)

    def d_t(self, r, t):
        s = np.sqrt(1.0 - t * t)
        return -3.0 * r * t / s * np.cos(3.0 * r * s)


def test_axially_constant_flux_has_no_source(model):
    ev = FieldSourceEvaluator(model, _GeostrophicFlux())
    grid = ev.source_grid(np.array([0.2, 0.5, 0.9]), np.linspace(-0.95, 0.95, 9))
    assert np.max(np.abs(grid)) < 1e-10


def test_surface_projection_oracles(ctx, model):
    single = CoeffSet(m_max=20, n_max=8, entries={(1, 2): 1.0})
    manufactured = delta_jn_tgwe(ctx, manufactured_source(ctx, model, 1, 2), 2)
    assert surface_potential_jn(ctx, model, single, 2) == pytest.approx(manufactured, abs=1e-6)
    degree_five = CoeffSet(m_max=20, n_max=8, entries={(2, 5): 1.0, (4, 5): -0.5})
    assert abs(surface_potential_jn(ctx, model, degree_five, 4)) < 1e-12


def _reference_source(model, flux, r, t, kinks):
    """-(4 pi G / K) (r / rho_0') Omega times the adaptive colatitude integral of d(rho_0 u)/dx3"""
    theta = math.acos(t)
    points = sorted(
        p for p in [math.acos(k) for k in kinks] + [0.5 * math.pi] if theta < p < math.pi
    )
    tail, _ = quad(
        lambda th: axial_derivative(flux, r, math.cos(th)),
        theta,
        math.pi,
        points=points,
        limit=200,
        epsabs=1e-13,
        epsrel=1e-11,
    )
    return -2.0 * model.k0**2 * model.Omega * float(r_over_drho(model, r)) * tail


@pytest.mark.parametrize("r,t", [(0.6, 0.3), (0.9, 0.05), (0.75, -0.15)])
def test_smoothed_source_matches_adaptive_quadrature(model, r, t):
    linear = SurfaceWindProfile.from_function(lambda x: 50.0 + 30.0 * x)
    projected = ProjectedWind(linear, 1.0, smoothing=0.2)
    no_decay = DecayParams(family=DecayFamily.NONE)
    flux = MassFlux(model, ZonalWind(projected, no_decay))
    expected = _reference_source(model, flux, r, t, projected.kinks)

    fast = WindSourceEvaluator(model, projected, no_decay)
    assert source_term(fast, r, t) == pytest.approx(expected, rel=1e-8)
    general = FieldSourceEvaluator(model, flux, kinks=projected.kinks)
    assert source_term(general, r, t) == pytest.approx(expected, rel=1e-8)


def test_blend_edges_become_panel_boundaries():
    panels = ColatitudePanels.build([0.3], 8, subdivisions=4, breakpoints=(-0.2, 0.2))
    plain = ColatitudePanels.build([0.3], 8, subdivisions=4)
    assert panels.count == plain.count + 2
    edges = np.arccos(panels.t).reshape(panels.count, panels.order)
    for kink in (math.acos(0.2), math.acos(-0.2)):
        # No panel has a blend edge strictly inside it
        assert not np.any((edges.min(axis=1) < kink) & (edges.max(axis=1) > kink))
    assert ProjectedWind(SurfaceWindProfile.zero(), 1.0).kinks == ()


@pytest.fixture(scope="module")
def wide_ctx():
    return BasisContext.build(1.0, 60, 8, radial_order=256, angular_order=128)


@pytest.fixture(scope="module")
def smooth_ev(model, profile):
    return WindSourceEvaluator(model, ProjectedWind(profile, 1.0, smoothing=0.2), EXPONENTIAL)


@pytest.mark.slow
def test_series_matches_surface_projection_at_full_truncation(wide_ctx, model, smooth_ev):
    coeffs = potential_coefficients(wide_ctx, smooth_ev)
    for n in range(2, 9):
        direct = surface_potential_jn(wide_ctx, model, coeffs, n)
        assert delta_jn_tgwe(wide_ctx, smooth_ev, n) == pytest.approx(direct, rel=1e-5)


@pytest.mark.slow
@pytest.mark.parametrize("n", [2, 3, 4])
def test_truncation_changes_shrink_as_modes_double(wide_ctx, smooth_ev, n):
    values = {m: delta_jn_tgwe(wide_ctx, smooth_ev, n, m_max=m) for m in (10, 20, 40)}
    assert abs(values[40] - values[20]) < abs(values[20] - values[10])
