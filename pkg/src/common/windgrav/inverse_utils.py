"""
Decay-parameter inversion

Least-squares misfit between observed and modelled harmonics, a parallel grid search over the
parameter box and the Nelder-Mead fit that uses it as a pre-pass.
"""

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import msgspec
import numpy as np
from core_types.gravity import FitResult, FitStatus, GravityCoeffs, ModelTag, ObservedCoeffs
from core_types.planet import BackgroundJ
from core_types.wind import DecayParams
from scipy.optimize import minimize

from windgrav.basis_utils import BasisContext
from windgrav.dynamics_utils import WindSourceEvaluator, compute_gravity_coeffs
from windgrav.errors import ParameterError
from windgrav.planet_utils import background_Jn
from windgrav.settings import NumericsSettings

logger = logging.getLogger(__name__)

_SIMPLEX_STEP = 0.05


@dataclass
class ForwardModel:
    """Maps decay parameters to dJ_n, n = 2..N, for a fixed wind, planet and truncation"""

    ctx: BasisContext
    evaluator: WindSourceEvaluator
    model_tag: ModelTag
    N: int
    m_max: Optional[int] = None
    background: Optional[BackgroundJ] = None
    settings: NumericsSettings = field(default_factory=NumericsSettings)

    @property
    def degrees(self) -> List[int]:
        return list(range(2, self.N + 1))

    def coefficients(self, decay: DecayParams) -> GravityCoeffs:
        return compute_gravity_coeffs(
            self.ctx,
            self.evaluator.with_decay(decay),
            self.model_tag,
            self.N,
            self.m_max,
            self.settings,
        )

    def delta_j(self, decay: DecayParams) -> np.ndarray:
        return np.array(self.coefficients(decay).dJ)

    def background_j(self) -> np.ndarray:
        model = self.evaluator.model
        return np.array([background_Jn(model, n, self.background) for n in self.degrees])


class FitOptions(msgspec.Struct, frozen=True):
    """Nelder-Mead settings; tolerances apply in unit-box coordinates"""

    start: Optional[List[float]] = None
    grid_points: int = NumericsSettings.fit_grid_points
    tol_x: float = NumericsSettings.fit_tol_x
    tol_f: float = NumericsSettings.fit_tol_f
    max_evaluations: int = NumericsSettings.fit_max_evaluations
    workers: Optional[int] = None

    def __post_init__(self):
        if self.grid_points < 0 or self.grid_points == 1:
            raise ValueError("Grid search needs 0 (off) or at least 2 points per parameter")
        if not (self.tol_x > 0.0 and self.tol_f > 0.0):
            raise ValueError("Fit tolerances must be positive")
        if self.max_evaluations < 1:
            raise ValueError("Fit needs at least one evaluation")


def _aligned(observed: ObservedCoeffs, forward: ForwardModel):
    if observed.n != forward.degrees:
        raise ParameterError(
            f"Observed degrees {observed.n[0]}..{observed.n[-1]} do not match the forward "
            f"model's 2..{forward.N}"
        )


def residuals(
    p: Sequence[float], observed: ObservedCoeffs, forward: ForwardModel, decay: DecayParams
) -> np.ndarray:
    """J_n - (J0_n + dJ_n(p))"""
    _aligned(observed, forward)
    model = forward.delta_j(decay.with_params(p))
    return np.array(observed.J) - (forward.background_j() + model)


def objective(
    p: Sequence[float], observed: ObservedCoeffs, forward: ForwardModel, decay: DecayParams
) -> float:
    """
    Weighted misfit sum of w_n (J_n - (J0_n + dJ_n(p)))^2

    w_n = 1 / sigma_n^2 when the observations carry uncertainties, otherwise 1.
    """
    misfit = residuals(p, observed, forward, decay)
    return float(np.dot(observed.weights, misfit * misfit))


@dataclass(frozen=True)
class GridSearchResult:
    points: np.ndarray
    values: np.ndarray

    @property
    def best(self) -> np.ndarray:
        return self.points[int(np.argmin(self.values))]


def grid_search(
    func: Callable[[np.ndarray], float],
    bounds: Sequence[Tuple[float, float]],
    points: int,
    workers: Optional[int] = None,
) -> GridSearchResult:
    """
    Evaluate func on the tensor grid of `points` values per parameter

    Evaluations run on a thread pool; results keep grid order, so the argmin does not depend
    on the number of workers.
    """
    axes = [np.linspace(low, high, points) for low, high in bounds]
    grid = np.array(list(itertools.product(*axes)), dtype=float)
    with ThreadPoolExecutor(max_workers=workers) as executor:
        values = np.array(list(executor.map(func, grid)), dtype=float)
    logger.info("Grid search evaluated %d points, best %.6e", len(values), values.min())
    return GridSearchResult(points=grid, values=values)


@dataclass
class _Recorder:
    """Objective wrapper keeping every evaluation and the running best"""

    func: Callable[[np.ndarray], float]
    points: List[np.ndarray] = field(default_factory=list)
    values: List[float] = field(default_factory=list)
    best_history: List[float] = field(default_factory=list)

    def __call__(self, p: np.ndarray) -> float:
        value = self.func(p)
        self.record(p, value)
        return value

    def record(self, p: np.ndarray, value: float):
        self.points.append(np.array(p, dtype=float))
        self.values.append(value)
        best = value if not self.best_history else min(self.best_history[-1], value)
        self.best_history.append(best)

    @property
    def best(self) -> Tuple[np.ndarray, float]:
        index = int(np.argmin(self.values))
        return self.points[index], self.values[index]


def _initial_simplex(x0: np.ndarray) -> np.ndarray:
    simplex = [x0]
    for i in range(x0.size):
        vertex = x0.copy()
        step = _SIMPLEX_STEP if x0[i] + _SIMPLEX_STEP <= 1.0 else -_SIMPLEX_STEP
        vertex[i] = x0[i] + step
        simplex.append(vertex)
    return np.array(simplex)


def _nelder_mead(
    func: Callable[[np.ndarray], float],
    scale: float,
    x0: np.ndarray,
    simplex: np.ndarray,
    known: Dict[bytes, float],
    options: FitOptions,
    budget: int,
):
    """
    Nelder-Mead on func / scale in the unit box, stopping once the simplex size is within
    tol_x or the objective spread is within tol_f

    scipy stops only when both tests pass, so each test runs as its own leg over a shared
    value cache. Both legs walk the same simplex sequence; the shorter converged leg is the
    run stopped by either test. Returns the scipy result, the points it evaluated and the
    unscaled values by point.
    """
    cache = dict(known)

    def leg(xatol: float, fatol: float, maxfev: int):
        trace: List[np.ndarray] = []

        def cached(x: np.ndarray) -> float:
            key = np.asarray(x, dtype=float).tobytes()
            if key not in cache:
                cache[key] = func(x)
            trace.append(np.array(x, dtype=float))
            return cache[key] / scale

        res = minimize(
            cached,
            x0,
            method="Nelder-Mead",
            bounds=[(0.0, 1.0)] * x0.size,
            options={"xatol": xatol, "fatol": fatol, "maxfev": maxfev, "initial_simplex": simplex},
        )
        return res, trace

    by_size = leg(options.tol_x, np.inf, budget)
    cap = by_size[0].nfev if by_size[0].status == 0 else budget
    by_spread = leg(np.inf, options.tol_f, cap)
    if by_spread[0].status == 0 and (
        by_size[0].status != 0 or by_spread[0].nfev <= by_size[0].nfev
    ):
        return (*by_spread, cache)
    return (*by_size, cache)


def fit(
    observed: ObservedCoeffs,
    forward: ForwardModel,
    decay: DecayParams,
    options: Optional[FitOptions] = None,
) -> FitResult:
    """
    Fit decay parameters by Nelder-Mead inside the bounds box

    Parameters are mapped to the unit box and the objective is divided by its value at the
    start point, so common weight factors do not alter the evaluation sequence. The fit
    converges once the simplex size is within tol_x or the objective spread is within tol_f.
    A constant objective on the start simplex returns the start with status flat; running out
    of evaluations returns the best point seen with status max_evaluations.

    Raises:
        ParameterError: for a family without parameters or missing bounds
    """
    options = options or FitOptions()
    family = decay.family
    if family.arity == 0:
        raise ParameterError(f"Decay family '{family.value}' has no parameters to fit")
    if not decay.bounds:
        raise ParameterError("Fitting needs bounds for every decay parameter")
    low = np.array([b[0] for b in decay.bounds])
    high = np.array([b[1] for b in decay.bounds])

    def to_params(x: np.ndarray) -> np.ndarray:
        return np.clip(low + np.clip(x, 0.0, 1.0) * (high - low), low, high)

    def misfit(p: np.ndarray) -> float:
        return objective(p, observed, forward, decay)

    recorder = _Recorder(misfit)

    if options.grid_points:
        search = grid_search(misfit, decay.bounds, options.grid_points, options.workers)
        for point, value in zip(search.points, search.values):
            recorder.record(point, float(value))
        start = search.best
    elif options.start is not None:
        start = np.array(options.start, dtype=float)
    else:
        start = np.array(decay.params, dtype=float) if decay.params else 0.5 * (low + high)
    if np.any(start < low) or np.any(start > high):
        raise ParameterError(f"Fit start {start.tolist()} outside bounds")
    x0 = (start - low) / (high - low)

    simplex = _initial_simplex(x0)
    start_values = [recorder(to_params(x)) for x in simplex]
    scale = start_values[0] if start_values[0] > 0.0 else 1.0

    if np.ptp(start_values) == 0.0:
        logger.warning("Objective is constant on the start simplex; returning the start point")
        p_best, status = start, FitStatus.FLAT
    else:
        known = {x.tobytes(): value for x, value in zip(simplex, start_values)}
        res, trace, values = _nelder_mead(
            lambda x: misfit(to_params(x)),
            scale,
            x0,
            simplex,
            known,
            options,
            max(options.max_evaluations - len(recorder.values), 1),
        )
        for x in trace:
            key = x.tobytes()
            if key not in known:
                known[key] = values[key]
                recorder.record(to_params(x), values[key])
        p_best, _ = recorder.best
        status = FitStatus.CONVERGED if res.status == 0 else FitStatus.MAX_EVALUATIONS
        if status != FitStatus.CONVERGED:
            logger.warning("Nelder-Mead stopped without converging: %s", res.message)

    final = residuals(p_best, observed, forward, decay)
    value = float(np.dot(observed.weights, final * final))
    logger.info(
        "Fit %s after %d evaluations, objective %.6e", status.value, len(recorder.values), value
    )
    return FitResult(
        p_best=[float(p) for p in p_best],
        parameter_names=list(family.parameter_names),
        family=family.value,
        objective_value=value,
        evaluations=len(recorder.values),
        residuals=[float(r) for r in final],
        n=list(observed.n),
        status=status,
        best_history=list(recorder.best_history),
        weights="sigma" if observed.sigma is not None else "unit",
    )


def synthesize_observations(
    forward: ForwardModel,
    decay: DecayParams,
    sigma: Optional[Sequence[float]] = None,
) -> ObservedCoeffs:
    """Noise-free observations J0_n + dJ_n(p) at the given decay parameters"""
    values = forward.background_j() + forward.delta_j(decay)
    return ObservedCoeffs(
        n=forward.degrees,
        J=[float(v) for v in values],
        sigma=None if sigma is None else [float(s) for s in sigma],
    )
