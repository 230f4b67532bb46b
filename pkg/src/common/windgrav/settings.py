"""
Shared numerical settings for the wind-gravity library

This module contains the default truncations and quadrature orders used by the forward and
inverse pipelines when a run configuration does not override them.
"""

from dataclasses import dataclass

GRAVITATIONAL_CONSTANT = 6.67430e-11


@dataclass
class NumericsSettings:
    m_max: int = 60
    n_max: int = 12
    radial_order: int = 256
    angular_order: int = 256
    panel_order: int = 8
    tail_terms: int = 5
    tail_warning_ratio: float = 0.01
    degenerate_tolerance: float = 1e-10
    zero_tolerance: float = 1e-13
    origin_limit_fraction: float = 1e-6  # r/R below which r/d_r rho_0 uses its limit

    # Lower bounds enforced on run configurations
    min_m_max: int = 5
    min_n_max: int = 2
    min_quadrature_order: int = 16
    min_panel_order: int = 2

    # Nelder-Mead defaults (unit-box coordinates, objective scaled by its start value)
    fit_tol_x: float = 1e-6
    fit_tol_f: float = 1e-12
    fit_max_evaluations: int = 400
    fit_grid_points: int = 0
