"""
Planet type definitions

This module contains the physical constants of a polytropic gas giant and the optional table
of hydrostatic background coefficients.
"""

import math
from typing import Any, Dict, List, Optional

import msgspec
from windgrav.settings import GRAVITATIONAL_CONSTANT


class PlanetModel(msgspec.Struct, frozen=True):
    """Radius (m), mass (kg), rotation rate (rad/s) and gravitational constant (SI)"""

    R: float
    M: float
    Omega: float
    G: float = GRAVITATIONAL_CONSTANT
    name: Optional[str] = None

    def __post_init__(self):
        for label in ("R", "M", "Omega", "G"):
            value = getattr(self, label)
            if not math.isfinite(value) or value <= 0.0:
                raise ValueError(f"Planet {label} must be finite and positive, got {value}")

    @property
    def K(self) -> float:
        """Polytrope constant 2 G R^2 / pi"""
        return 2.0 * self.G * self.R**2 / math.pi

    @property
    def rho_bar(self) -> float:
        """Mean density 3 M / (4 pi R^3)"""
        return 3.0 * self.M / (4.0 * math.pi * self.R**3)

    @property
    def GM(self) -> float:
        return self.G * self.M

    @property
    def k0(self) -> float:
        """Background wavenumber pi / R, so that 4 pi G / K = 2 k0^2"""
        return math.pi / self.R

    @classmethod
    def normalized(cls) -> "PlanetModel":
        return cls(R=1.0, M=1.0, Omega=1.0, G=1.0, name="normalized")

    @classmethod
    def from_preset(cls, name: str, presets: Dict[str, Dict[str, Any]]) -> "PlanetModel":
        """Build from a presets mapping such as the planets block of parameters.yaml"""
        key = name.lower()
        if key not in presets:
            raise ValueError(f"Unknown planet preset '{name}', known: {sorted(presets)}")
        block = presets[key]
        return cls(
            R=float(block["R"]),
            M=float(block["M"]),
            Omega=float(block["Omega"]),
            G=float(block.get("G", GRAVITATIONAL_CONSTANT)),
            name=key,
        )


class BackgroundJ(msgspec.Struct, frozen=True):
    """Hydrostatic background coefficients J0_n for consecutive n starting at 2"""

    n: List[int]
    J0: List[float]

    def __post_init__(self):
        if len(self.n) != len(self.J0):
            raise ValueError("Background J table needs one value per degree")
        if self.n and (self.n[0] < 2 or any(b != a + 1 for a, b in zip(self.n, self.n[1:]))):
            raise ValueError("Background J degrees must ascend consecutively from n >= 2")
        if not all(math.isfinite(value) for value in self.J0):
            raise ValueError("Background J values must be finite")

    def value(self, n: int) -> float:
        """Loaded J0_n, zero for degrees the table does not cover"""
        if self.n and self.n[0] <= n <= self.n[-1]:
            return self.J0[n - self.n[0]]
        return 0.0
