"""
Wind type definitions

This module contains the decay-family enumeration and the parameter record used by the
forward and inverse pipelines.
"""

import math
from enum import Enum
from typing import List, Optional, Tuple

import msgspec

FAMILY_PARAMETERS = {
    "exponential": ("H",),
    "tanh-step": ("r_c", "w"),
    "none": (),
}


class DecayFamily(str, Enum):
    EXPONENTIAL = "exponential"
    TANH_STEP = "tanh-step"
    NONE = "none"

    @property
    def parameter_names(self) -> Tuple[str, ...]:
        return FAMILY_PARAMETERS[self.value]

    @property
    def arity(self) -> int:
        return len(FAMILY_PARAMETERS[self.value])


class DecayParams(msgspec.Struct, frozen=True):
    """
    Decay family with its parameter vector and optional box bounds

    exponential: p = (H,) e-folding depth in m; tanh-step: p = (r_c, w) transition radius and
    width in m; none: p = ().
    """

    family: DecayFamily
    params: List[float] = msgspec.field(default_factory=list)
    bounds: Optional[List[Tuple[float, float]]] = None

    def __post_init__(self):
        if len(self.params) != self.family.arity:
            raise ValueError(
                f"Decay family '{self.family.value}' takes {self.family.arity} parameters, "
                f"got {len(self.params)}"
            )
        if not all(math.isfinite(p) for p in self.params):
            raise ValueError("Decay parameters must be finite")
        if self.bounds is not None:
            if len(self.bounds) != self.family.arity:
                raise ValueError("Decay bounds need one (low, high) pair per parameter")
            for (low, high), p in zip(self.bounds, self.params):
                if not low < high:
                    raise ValueError(f"Decay bound ({low}, {high}) is empty")
                if not low <= p <= high:
                    raise ValueError(f"Decay parameter {p} outside bounds ({low}, {high})")

    def with_params(self, params) -> "DecayParams":
        values = [float(p) for p in params]
        return DecayParams(family=self.family, params=values, bounds=self.bounds)
