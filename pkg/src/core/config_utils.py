#!/usr/bin/env python3
"""
Run configuration for the wind-gravity commands.

A run configuration is read from YAML or JSON, checked against the minimal truncations and
written back as key-sorted JSON. Relative file paths resolve against the directory of the
configuration file and are stored as absolute paths, so load -> dump -> load is the identity.
"""

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import msgspec
import yaml
from core_types.gravity import ModelTag
from core_types.wind import DecayFamily, DecayParams
from windgrav.errors import ConfigError
from windgrav.settings import GRAVITATIONAL_CONSTANT, NumericsSettings

logger = logging.getLogger(__name__)

CONFIG_SCHEMA = 1

_defaults = NumericsSettings()


class PlanetBlock(msgspec.Struct, forbid_unknown_fields=True):
    preset: Optional[str] = None
    R: Optional[float] = None
    M: Optional[float] = None
    Omega: Optional[float] = None
    G: float = GRAVITATIONAL_CONSTANT
    background_j: Optional[str] = None


class TruncationBlock(msgspec.Struct, forbid_unknown_fields=True):
    m_max: int = _defaults.m_max
    n_max: int = _defaults.n_max
    N: Optional[int] = None


class QuadratureBlock(msgspec.Struct, forbid_unknown_fields=True):
    radial: int = _defaults.radial_order
    angular: int = _defaults.angular_order
    panel: int = _defaults.panel_order


class ManufacturedMode(msgspec.Struct, forbid_unknown_fields=True):
    """Single-mode source for verification runs"""

    m: int
    n: int


class WindBlock(msgspec.Struct, forbid_unknown_fields=True):
    profile: Optional[str] = None
    family: DecayFamily = DecayFamily.NONE
    params: List[float] = msgspec.field(default_factory=list)
    bounds: Optional[List[Tuple[float, float]]] = None
    smoothing: float = 0.0
    equatorial_jump: bool = True
    manufactured: Optional[ManufacturedMode] = None

    def decay(self) -> DecayParams:
        """Decay law; without explicit params a bounded family starts at the box centre"""
        params = list(self.params)
        if not params and self.bounds and len(self.bounds) == self.family.arity:
            params = [0.5 * (low + high) for low, high in self.bounds]
        try:
            return DecayParams(family=self.family, params=params, bounds=self.bounds)
        except ValueError as e:
            raise ConfigError(f"Invalid wind decay block: {e}")


class FitBlock(msgspec.Struct, forbid_unknown_fields=True):
    start: Optional[List[float]] = None
    grid_points: int = _defaults.fit_grid_points
    tol_x: float = _defaults.fit_tol_x
    tol_f: float = _defaults.fit_tol_f
    max_evaluations: int = _defaults.fit_max_evaluations


class OutputBlock(msgspec.Struct, forbid_unknown_fields=True):
    coefficients: Optional[str] = None
    contributions: Optional[str] = None
    fit: Optional[str] = None


class RunConfig(msgspec.Struct, forbid_unknown_fields=True):
    """Complete description of a forward or inverse run"""

    schema: int = CONFIG_SCHEMA
    normalized: bool = False
    model: ModelTag = ModelTag.TGWE
    planet: PlanetBlock = msgspec.field(default_factory=PlanetBlock)
    truncation: TruncationBlock = msgspec.field(default_factory=TruncationBlock)
    quadrature: QuadratureBlock = msgspec.field(default_factory=QuadratureBlock)
    wind: WindBlock = msgspec.field(default_factory=WindBlock)
    fit: FitBlock = msgspec.field(default_factory=FitBlock)
    output: OutputBlock = msgspec.field(default_factory=OutputBlock)
    workers: Optional[int] = None


def _resolve(base_dir: Path, value: Optional[str]) -> Optional[str]:
    if value is None:
        return None
    path = Path(value)
    if not path.is_absolute():
        path = base_dir / path
    return str(path.resolve())


def resolve_paths(config: RunConfig, base_dir: Path) -> RunConfig:
    """Copy of the configuration with every file path made absolute against base_dir"""
    replace = msgspec.structs.replace
    return replace(
        config,
        planet=replace(config.planet, background_j=_resolve(base_dir, config.planet.background_j)),
        wind=replace(config.wind, profile=_resolve(base_dir, config.wind.profile)),
        output=replace(
            config.output,
            coefficients=_resolve(base_dir, config.output.coefficients),
            contributions=_resolve(base_dir, config.output.contributions),
            fit=_resolve(base_dir, config.output.fit),
        ),
    )


def validate_config(config: RunConfig, settings: Optional[NumericsSettings] = None) -> RunConfig:
    """
    Check schema, planet block, truncations, quadrature orders, wind block and input files

    Raises:
        ConfigError: describing the first violated rule
    """
    settings = settings or _defaults
    if config.schema != CONFIG_SCHEMA:
        raise ConfigError(f"Unsupported config schema {config.schema}, expected {CONFIG_SCHEMA}")

    planet = config.planet
    if not config.normalized and planet.preset is None:
        missing = [k for k in ("R", "M", "Omega") if getattr(planet, k) is None]
        if missing:
            raise ConfigError(f"Planet block needs a preset or explicit {', '.join(missing)}")

    trunc = config.truncation
    if trunc.m_max < settings.min_m_max:
        raise ConfigError(f"truncation.m_max must be >= {settings.min_m_max}, got {trunc.m_max}")
    if trunc.n_max < settings.min_n_max:
        raise ConfigError(f"truncation.n_max must be >= {settings.min_n_max}, got {trunc.n_max}")
    if trunc.N is not None and not 2 <= trunc.N <= trunc.n_max:
        raise ConfigError(f"truncation.N must lie in [2, n_max={trunc.n_max}], got {trunc.N}")

    quad = config.quadrature
    for label, order in (("radial", quad.radial), ("angular", quad.angular)):
        if order < settings.min_quadrature_order:
            raise ConfigError(
                f"quadrature.{label} must be >= {settings.min_quadrature_order}, got {order}"
            )
    if quad.panel < settings.min_panel_order:
        raise ConfigError(
            f"quadrature.panel must be >= {settings.min_panel_order}, got {quad.panel}"
        )

    wind = config.wind
    wind.decay()
    if not 0.0 <= wind.smoothing < 1.0:
        raise ConfigError(f"wind.smoothing must lie in [0, 1), got {wind.smoothing}")
    if wind.manufactured is not None:
        mode = wind.manufactured
        if not (1 <= mode.m <= trunc.m_max and 1 <= mode.n <= trunc.n_max):
            raise ConfigError(f"Manufactured mode ({mode.m}, {mode.n}) outside the truncation")
        if (mode.m, mode.n) == (1, 1):
            raise ConfigError("Manufactured mode (1, 1) has a vanishing Helmholtz denominator")
    elif wind.profile is None:
        raise ConfigError("wind.profile is required unless wind.manufactured is set")

    inputs = (("wind.profile", wind.profile), ("planet.background_j", planet.background_j))
    for label, value in inputs:
        if value is not None and not Path(value).is_file():
            raise ConfigError(f"{label} file not found: {value}")

    if config.workers is not None and config.workers < 1:
        raise ConfigError(f"workers must be >= 1, got {config.workers}")
    return config


def decode_config(data: Dict[str, Any]) -> RunConfig:
    # YAML 1.1 reads exponent-only floats such as 1e-6 as strings
    try:
        return msgspec.convert(data, RunConfig, strict=False)
    except msgspec.ValidationError as e:
        raise ConfigError(f"Invalid run configuration: {e}")


def load_config(path: Union[str, Path], validate: bool = True) -> RunConfig:
    """
    Load a run configuration from YAML or JSON

    Args:
        path: configuration file
        validate: run validate_config after resolving paths

    Returns:
        RunConfig: configuration with absolute file paths

    Raises:
        ConfigError: for a missing, unparsable or invalid file
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Config file not found: {path}")
    try:
        if path.suffix.lower() == ".json":
            data = msgspec.json.decode(path.read_bytes())
        else:
            data = yaml.safe_load(path.read_text())
    except (msgspec.DecodeError, yaml.YAMLError) as e:
        raise ConfigError(f"Config file {path} is not valid YAML/JSON: {e}")
    if not isinstance(data, dict):
        raise ConfigError(f"Config file {path} must contain a mapping")
    config = resolve_paths(decode_config(data), path.parent.resolve())
    logger.debug("Loaded run configuration from %s", path)
    return validate_config(config) if validate else config


def dump_config(config: RunConfig) -> bytes:
    """Key-sorted JSON encoding"""
    return msgspec.json.encode(config, order="sorted") + b"\n"


def write_config(path: Union[str, Path], config: RunConfig):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(dump_config(config))
