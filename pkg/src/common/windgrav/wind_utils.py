"""
Zonal wind field

Surface wind ingestion, cylindrical projection into the interior, equatorial smoothing and
the radial decay factor Q_p. Fields expose value and partial derivatives in (r, t), where t is
the cosine of colatitude.
"""

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np
from core_types.wind import DecayFamily, DecayParams
from scipy.interpolate import CubicSpline

from windgrav.errors import DataFileError, DomainError, ParameterError

logger = logging.getLogger(__name__)

MIN_WIND_SAMPLES = 4
LATITUDE_HEADER = ("latitude_deg", "u_mps")
POLAR_HEADER = ("t", "u_mps")


@dataclass(frozen=True, eq=False)
class SurfaceWindProfile:
    """Surface wind u(t) with a natural cubic spline through the samples"""

    t: np.ndarray
    u: np.ndarray
    source: Optional[str] = None
    spline: CubicSpline = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        t = np.array(self.t, dtype=float)
        u = np.array(self.u, dtype=float)
        if t.ndim != 1 or t.shape != u.shape:
            raise ValueError("Wind samples need matching 1-D t and u arrays")
        if t.size < MIN_WIND_SAMPLES:
            raise ValueError(f"Wind profile needs at least {MIN_WIND_SAMPLES} samples")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(u))):
            raise ValueError("Wind samples must be finite")
        if np.any(np.abs(t) > 1.0):
            raise ValueError("Wind sample positions must lie in [-1, 1]")
        if np.any(np.diff(t) <= 0.0):
            raise ValueError("Wind sample positions must be strictly increasing")
        t.setflags(write=False)
        u.setflags(write=False)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "spline", CubicSpline(t, u, bc_type="natural"))
        if t[0] > -1.0 or t[-1] < 1.0:
            logger.warning(
                "Wind samples cover t in [%.4f, %.4f]; the spline extrapolates towards the poles",
                t[0],
                t[-1],
            )

    @classmethod
    def zero(cls, samples: int = 5) -> "SurfaceWindProfile":
        t = np.linspace(-1.0, 1.0, samples)
        return cls(t=t, u=np.zeros_like(t), source="zero")

    @classmethod
    def from_function(
        cls, func: Callable[[np.ndarray], np.ndarray], samples: int = 201
    ) -> "SurfaceWindProfile":
        t = np.linspace(-1.0, 1.0, samples)
        return cls(t=t, u=np.asarray(func(t), dtype=float), source="function")

    def __call__(self, t):
        return self.spline(t)

    def derivative(self, t):
        return self.spline(t, 1)

    def scaled(self, factor: float) -> "SurfaceWindProfile":
        return SurfaceWindProfile(t=self.t, u=factor * self.u, source=self.source)


def _parse_float(path, text: str, line: int, label: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise DataFileError(path, f"{label} '{text}' is not a number", line)
    if not math.isfinite(value):
        raise DataFileError(path, f"{label} '{text}' is not finite", line)
    return value


def load_surface_wind(path: Union[str, Path]) -> SurfaceWindProfile:
    """
    Read a surface wind CSV

    The header selects the layout: latitude_deg,u_mps (converted with t = sin(latitude)) or
    t,u_mps. Blank lines and lines starting with # are skipped.

    Raises:
        DataFileError: for a missing file, unknown header, malformed row, duplicate position
            or fewer than four samples
    """
    path = Path(path)
    if not path.is_file():
        raise DataFileError(path, "wind profile file not found")

    header = None
    samples = []
    with open(path, newline="") as f:
        for line, row in enumerate(csv.reader(f), start=1):
            cells = [cell.strip() for cell in row]
            if not cells or not any(cells) or cells[0].startswith("#"):
                continue
            if header is None:
                header = tuple(cell.lower() for cell in cells)
                if header not in (LATITUDE_HEADER, POLAR_HEADER):
                    raise DataFileError(
                        path, f"expected header 'latitude_deg,u_mps' or 't,u_mps', got {row}", line
                    )
                continue
            if len(cells) != 2:
                raise DataFileError(path, f"expected 2 columns, got {len(cells)}", line)
            position = _parse_float(path, cells[0], line, header[0])
            velocity = _parse_float(path, cells[1], line, "u_mps")
            if header == LATITUDE_HEADER:
                if abs(position) > 90.0:
                    raise DataFileError(path, f"latitude {position} outside [-90, 90]", line)
                position = math.sin(math.radians(position))
            elif abs(position) > 1.0:
                raise DataFileError(path, f"t {position} outside [-1, 1]", line)
            samples.append((position, velocity, line))

    if header is None:
        raise DataFileError(path, "empty wind profile file")
    if len(samples) < MIN_WIND_SAMPLES:
        raise DataFileError(
            path, f"wind profile needs at least {MIN_WIND_SAMPLES} rows, got {len(samples)}"
        )
    samples.sort(key=lambda s: s[0])
    for (t_a, _, line_a), (t_b, _, line_b) in zip(samples, samples[1:]):
        if t_a == t_b:
            raise DataFileError(
                path, f"duplicate position t={t_b:.12g} (also on line {line_a})", line_b
            )
    t = np.array([s[0] for s in samples])
    u = np.array([s[1] for s in samples])
    logger.info("Loaded %d wind samples from %s", t.size, path)
    return SurfaceWindProfile(t=t, u=u, source=str(path))


# ---------------------------------------------------------------------------
# Cylindrical projection
# ---------------------------------------------------------------------------


def _check_radius(r: np.ndarray, R: float):
    if np.any(r < 0.0) or np.any(r > R * (1.0 + 1e-12)):
        raise DomainError(f"Radius outside [0, R] with R={R}")


def _cylinder_height(r: np.ndarray, t: np.ndarray, R: float) -> np.ndarray:
    """sqrt(1 - (r/R)^2 (1 - t^2)), the |t| of the surface point on the same cylinder"""
    return np.sqrt(np.clip(1.0 - (r / R) ** 2 * (1.0 - t * t), 0.0, None))


def hemisphere_sign(t) -> np.ndarray:
    """sgn(t) with sgn(0) = +1"""
    return np.where(np.asarray(t) >= 0.0, 1.0, -1.0)


def cylindrical_projection(profile: SurfaceWindProfile, r, t, R: float):
    """u_surf(sgn(t) sqrt(1 - (r^2/R^2)(1 - t^2))), constant along the rotation axis direction"""
    r, t = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(t, dtype=float))
    _check_radius(r, R)
    values = profile(hemisphere_sign(t) * _cylinder_height(r, t, R))
    return float(values) if values.ndim == 0 else values


@dataclass(frozen=True)
class ProjectedWind:
    """
    Cylindrically projected surface wind with optional equatorial smoothing

    For |t| < smoothing the north and south projections are blended with weight
    1/2 (1 + sin(pi t / (2 smoothing))).
    """

    profile: SurfaceWindProfile
    R: float
    smoothing: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.smoothing < 1.0:
            raise ParameterError(f"Equatorial smoothing must lie in [0, 1), got {self.smoothing}")

    @property
    def kinks(self) -> Tuple[float, ...]:
        """t values where the blended wind has a slope kink, empty without smoothing"""
        if self.smoothing == 0.0:
            return ()
        return (-self.smoothing, self.smoothing)

    def _branches(self, r, t):
        r, t = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(t, dtype=float))
        _check_radius(r, self.R)
        s = _cylinder_height(r, t, self.R)
        return r, t, s

    def _blend(self, t: np.ndarray):
        eps = self.smoothing
        weight = 0.5 * (1.0 + hemisphere_sign(t))
        if eps == 0.0:
            return weight, np.zeros_like(t)
        inside = np.abs(t) < eps
        phase = math.pi * np.clip(t, -eps, eps) / (2.0 * eps)
        weight = np.where(inside, 0.5 * (1.0 + np.sin(phase)), weight)
        slope = np.where(inside, 0.25 * math.pi / eps * np.cos(phase), 0.0)
        return weight, slope

    def north_south(self, r, t):
        """Projections u_surf(+s) and u_surf(-s) along the cylinder through (r, t)"""
        _, _, s = self._branches(r, t)
        return self.profile(s), self.profile(-s)

    def jump(self, r) -> np.ndarray:
        """u_north - u_south at the equatorial plane, zero when smoothing is on"""
        r = np.asarray(r, dtype=float)
        if self.smoothing > 0.0:
            return np.zeros_like(r)
        north, south = self.north_south(r, np.zeros_like(r))
        return north - south

    def value(self, r, t):
        _, t, s = self._branches(r, t)
        weight, _ = self._blend(t)
        return weight * self.profile(s) + (1.0 - weight) * self.profile(-s)

    def d_r(self, r, t):
        r, t, s = self._branches(r, t)
        weight, _ = self._blend(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            ds = np.where(s > 0.0, -r * (1.0 - t * t) / (self.R**2 * s), 0.0)
        north = self.profile.derivative(s) * ds
        south = -self.profile.derivative(-s) * ds
        return weight * north + (1.0 - weight) * south

    def d_t(self, r, t):
        r, t, s = self._branches(r, t)
        weight, slope = self._blend(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            ds = np.where(s > 0.0, (r / self.R) ** 2 * t / s, 0.0)
        north_value, south_value = self.profile(s), self.profile(-s)
        north = self.profile.derivative(s) * ds
        south = -self.profile.derivative(-s) * ds
        return slope * (north_value - south_value) + weight * north + (1.0 - weight) * south


# ---------------------------------------------------------------------------
# Decay factor
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DecayProfile:
    """Radial decay law Q(r; p, R) with its r-derivative"""

    value: Callable[[np.ndarray, Sequence[float], float], np.ndarray]
    derivative: Callable[[np.ndarray, Sequence[float], float], np.ndarray]
    positive: Sequence[int] = ()


def _exponential(r, p, R):
    return np.exp(-(R - r) / p[0])


def _exponential_derivative(r, p, R):
    return np.exp(-(R - r) / p[0]) / p[0]


def _tanh_step(r, p, R):
    return 0.5 * (1.0 + np.tanh((r - p[0]) / p[1]))


def _tanh_step_derivative(r, p, R):
    return 0.5 * (1.0 - np.tanh((r - p[0]) / p[1]) ** 2) / p[1]


DECAY_PROFILES: Dict[DecayFamily, DecayProfile] = {
    DecayFamily.EXPONENTIAL: DecayProfile(_exponential, _exponential_derivative, positive=(0,)),
    DecayFamily.TANH_STEP: DecayProfile(_tanh_step, _tanh_step_derivative, positive=(1,)),
    DecayFamily.NONE: DecayProfile(
        lambda r, p, R: np.ones_like(r), lambda r, p, R: np.zeros_like(r)
    ),
}


def _decay_profile(dp: DecayParams) -> DecayProfile:
    profile = DECAY_PROFILES[dp.family]
    for index in profile.positive:
        if not dp.params[index] > 0.0:
            name = dp.family.parameter_names[index]
            raise ParameterError(
                f"Decay parameter {name} must be positive, got {dp.params[index]}",
                {"family": dp.family.value, "params": list(dp.params)},
            )
    return profile


def decay_factor(dp: DecayParams, r, t, R: float):
    """Q_p(r) in [0, 1]; radial only, t is accepted for interface symmetry"""
    profile = _decay_profile(dp)
    r = np.asarray(r, dtype=float)
    values = np.broadcast_to(profile.value(r, dp.params, R), np.broadcast(r, np.asarray(t)).shape)
    return float(values) if values.ndim == 0 else np.array(values)


def decay_factor_derivative(dp: DecayParams, r, R: float):
    """dQ_p/dr"""
    profile = _decay_profile(dp)
    r = np.asarray(r, dtype=float)
    values = profile.derivative(r, dp.params, R)
    return float(values) if np.ndim(values) == 0 else values


@dataclass(frozen=True)
class ZonalWind:
    """u_phi = Q_p(r) times the projected surface wind, with partials in (r, t)"""

    projected: ProjectedWind
    decay: DecayParams

    def value(self, r, t):
        return decay_factor(self.decay, r, t, self.projected.R) * self.projected.value(r, t)

    def d_r(self, r, t):
        R = self.projected.R
        q = decay_factor(self.decay, r, t, R)
        dq = decay_factor_derivative(self.decay, r, R)
        return dq * self.projected.value(r, t) + q * self.projected.d_r(r, t)

    def d_t(self, r, t):
        return decay_factor(self.decay, r, t, self.projected.R) * self.projected.d_t(r, t)


def zonal_wind(
    profile: SurfaceWindProfile, dp: DecayParams, smoothing: float, r, t, R: float
):
    """Q_p(r) u_proj(r, t), blended across the equator when smoothing > 0"""
    values = ZonalWind(ProjectedWind(profile, R, smoothing), dp).value(r, t)
    return float(values) if np.ndim(values) == 0 else values
