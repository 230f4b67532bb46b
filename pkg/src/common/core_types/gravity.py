"""
Gravity type definitions

This module contains the computed and observed zonal harmonic records and the fit result.
"""

import math
from enum import Enum
from typing import List, Optional

import msgspec

J_SIGN_CONVENTION = "J_n = -(1/(M R^n)) * integral |x|^n P_n(x3/|x|) rho(x) dx"


class ModelTag(str, Enum):
    TWE = "TWE"
    TGWE = "TGWE"


class FitStatus(str, Enum):
    CONVERGED = "converged"
    FLAT = "flat"
    MAX_EVALUATIONS = "max_evaluations"


def _check_degrees(n: List[int]):
    if n and (n[0] < 2 or any(b != a + 1 for a, b in zip(n, n[1:]))):
        raise ValueError("Harmonic degrees must ascend consecutively from n >= 2")


class GravityCoeffs(msgspec.Struct, frozen=True, kw_only=True):
    """Wind-induced harmonics dJ_n with provenance"""

    model: ModelTag
    GM: float
    R: float
    n: List[int]
    dJ: List[float]
    m_max: int
    radial_order: int = 0
    angular_order: int = 0
    tail: List[float] = msgspec.field(default_factory=list)
    convention: str = J_SIGN_CONVENTION

    def __post_init__(self):
        _check_degrees(self.n)
        if len(self.n) != len(self.dJ):
            raise ValueError("Gravity coefficients need one value per degree")
        if not all(math.isfinite(value) for value in self.dJ):
            raise ValueError("Gravity coefficients must be finite")
        if self.tail and len(self.tail) != len(self.n):
            raise ValueError("Tail estimates need one value per degree")

    def value(self, n: int) -> float:
        return self.dJ[self.n.index(n)]


class ObservedCoeffs(msgspec.Struct, frozen=True):
    """Observed J_n with optional 1-sigma uncertainties"""

    n: List[int]
    J: List[float]
    sigma: Optional[List[float]] = None

    def __post_init__(self):
        _check_degrees(self.n)
        if not self.n:
            raise ValueError("Observed coefficients must not be empty")
        if len(self.n) != len(self.J):
            raise ValueError("Observed coefficients need one value per degree")
        if self.sigma is not None:
            if len(self.sigma) != len(self.n):
                raise ValueError("Observed sigma needs one value per degree")
            if any(not s > 0.0 for s in self.sigma):
                raise ValueError("Observed sigma must be positive")

    @property
    def N(self) -> int:
        return self.n[-1]

    @property
    def weights(self) -> List[float]:
        if self.sigma is None:
            return [1.0] * len(self.n)
        return [1.0 / s**2 for s in self.sigma]


class FitResult(msgspec.Struct, frozen=True, kw_only=True):
    """Outcome of a decay-parameter fit"""

    p_best: List[float]
    parameter_names: List[str]
    family: str
    objective_value: float
    evaluations: int
    residuals: List[float]
    n: List[int]
    status: FitStatus
    best_history: List[float] = msgspec.field(default_factory=list)
    weights: str = "unit"

    @property
    def converged(self) -> bool:
        return self.status == FitStatus.CONVERGED
