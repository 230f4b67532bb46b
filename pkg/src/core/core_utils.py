import functools
import logging
import os
import sys
from pathlib import Path
from typing import Any, Callable, Dict, Optional

import yaml
from core_types.planet import BackgroundJ, PlanetModel
from core_types.wind import DecayParams
from windgrav.basis_utils import BasisContext
from windgrav.dynamics_utils import SourceEvaluator, WindSourceEvaluator, manufactured_source
from windgrav.errors import EXIT_FAILURE, ConfigError, WindGravError
from windgrav.inverse_utils import FitOptions, ForwardModel
from windgrav.io_utils import read_background_csv
from windgrav.settings import NumericsSettings
from windgrav.wind_utils import ProjectedWind, load_surface_wind

from core.config_utils import RunConfig

logger = logging.getLogger(__name__)


def say(message: str):
    """Console status line; stdout is reserved for command output"""
    print(message, file=sys.stderr)


def guarded(func: Callable[..., int]) -> Callable[..., int]:
    """Map library errors to their exit code with a one-line diagnostic; anything else exits 1"""

    @functools.wraps(func)
    def wrapper(*args, **kwargs) -> int:
        try:
            return func(*args, **kwargs)
        except WindGravError as e:
            say(f"[FAIL] {type(e).__name__}: {e.message}")
            logger.debug("Error detail: %s", e.to_dict())
            return e.exit_code
        except Exception as e:
            logger.exception("Unexpected failure in %s", func.__name__)
            say(f"[FAIL] Unexpected error: {e}")
            return EXIT_FAILURE

    return wrapper


class RunConstructor:
    """Turns a validated RunConfig into the library objects of one run"""

    def __init__(self, command: str, cfg: Optional[RunConfig] = None):
        self.command = command
        self.cfg = cfg
        self.project_dir = Path(__file__).parent.parent.parent
        self.config_dir = self.project_dir / "src" / "config"
        self.service_dir = self.project_dir / "src" / "services" / command

        # Load parameters from parameters.yaml
        with open(self.config_dir / "parameters.yaml") as f:
            self.parameters: Dict[str, Any] = yaml.safe_load(f)

        self.presets = {
            name.lower(): {**block, "G": self.parameters.get("G", block.get("G"))}
            for name, block in self.parameters.get("Planets", {}).items()
        }
        numerics = self.parameters.get("Numerics", {})
        self.numerics = NumericsSettings(
            **{k: v for k, v in numerics.items() if k in NumericsSettings.__dataclass_fields__}
        )
        self.selftest = self.parameters.get("SelfTest", {})

    @staticmethod
    def default_workers() -> int:
        return os.cpu_count() or 1

    def require(self) -> RunConfig:
        if self.cfg is None:
            raise ConfigError(f"Command '{self.command}' needs a run configuration")
        return self.cfg

    def planet(self) -> PlanetModel:
        cfg = self.require()
        block = cfg.planet
        try:
            if cfg.normalized:
                return PlanetModel.normalized()
            if block.preset is not None:
                model = PlanetModel.from_preset(block.preset, self.presets)
                explicit = {k: getattr(block, k) for k in ("R", "M", "Omega")}
                overrides = {k: v for k, v in explicit.items() if v is not None}
                if overrides:
                    fields = {"R": model.R, "M": model.M, "Omega": model.Omega, "G": model.G}
                    model = PlanetModel(**{**fields, **overrides}, name=model.name)
                return model
            return PlanetModel(R=block.R, M=block.M, Omega=block.Omega, G=block.G)
        except ValueError as e:
            raise ConfigError(f"Invalid planet block: {e}")

    def background(self) -> Optional[BackgroundJ]:
        path = self.require().planet.background_j
        return None if path is None else read_background_csv(path)

    def degree_cut(self, N: Optional[int] = None) -> int:
        cfg = self.require()
        if N is None:
            N = cfg.truncation.N if cfg.truncation.N is not None else cfg.truncation.n_max
        if not 2 <= N <= cfg.truncation.n_max:
            raise ConfigError(f"Coefficient cut N={N} outside [2, n_max={cfg.truncation.n_max}]")
        return N

    def context(self, planet: PlanetModel) -> BasisContext:
        cfg = self.require()
        say(f"• Tabulating basis: m_max={cfg.truncation.m_max}, n_max={cfg.truncation.n_max}")
        return BasisContext.build(
            planet.R,
            cfg.truncation.m_max,
            cfg.truncation.n_max,
            radial_order=cfg.quadrature.radial,
            angular_order=cfg.quadrature.angular,
        )

    def decay(self) -> DecayParams:
        return self.require().wind.decay()

    def evaluator(self, ctx: BasisContext, planet: PlanetModel) -> SourceEvaluator:
        cfg = self.require()
        wind = cfg.wind
        if wind.manufactured is not None:
            mode = wind.manufactured
            say(f"• Manufactured source mode (m, n) = ({mode.m}, {mode.n})")
            return manufactured_source(ctx, planet, mode.m, mode.n)
        if wind.profile is None:
            raise ConfigError("wind.profile is required unless wind.manufactured is set")
        say(f"• Loading surface wind from {wind.profile}")
        profile = load_surface_wind(wind.profile)
        return WindSourceEvaluator(
            planet,
            ProjectedWind(profile, planet.R, wind.smoothing),
            self.decay(),
            equatorial_jump=wind.equatorial_jump,
            panel_order=cfg.quadrature.panel,
        )

    def forward_model(self, N: Optional[int] = None) -> ForwardModel:
        cfg = self.require()
        if cfg.wind.manufactured is not None:
            raise ConfigError("Fitting needs a wind profile, not a manufactured source")
        planet = self.planet()
        ctx = self.context(planet)
        evaluator = self.evaluator(ctx, planet)
        if not isinstance(evaluator, WindSourceEvaluator):
            raise ConfigError("Fitting needs a wind profile, not a manufactured source")
        return ForwardModel(
            ctx=ctx,
            evaluator=evaluator,
            model_tag=cfg.model,
            N=self.degree_cut(N),
            m_max=cfg.truncation.m_max,
            background=self.background(),
            settings=self.numerics,
        )

    def fit_options(self, workers: Optional[int] = None) -> FitOptions:
        cfg = self.require()
        block = cfg.fit
        try:
            return FitOptions(
                start=block.start,
                grid_points=block.grid_points,
                tol_x=block.tol_x,
                tol_f=block.tol_f,
                max_evaluations=block.max_evaluations,
                workers=workers or cfg.workers or self.default_workers(),
            )
        except ValueError as e:
            raise ConfigError(f"Invalid fit block: {e}")
