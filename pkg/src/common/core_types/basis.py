"""
Basis type definitions

This module contains the index, zero-table, quadrature and coefficient containers shared by
the numerics, basis and dynamics modules.
"""

from dataclasses import dataclass, field
from typing import Dict, Iterator, Tuple

import msgspec
import numpy as np
from windgrav.errors import BasisIndexError


def _frozen_array(values: np.ndarray) -> np.ndarray:
    array = np.array(values, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Gauss-Legendre nodes and weights on [-1, 1]"""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "nodes", _frozen_array(self.nodes))
        object.__setattr__(self, "weights", _frozen_array(self.weights))
        if self.nodes.shape != self.weights.shape or self.nodes.ndim != 1:
            raise ValueError("Quadrature nodes and weights must be 1-D and equal length")
        if np.any(self.weights <= 0.0):
            raise ValueError("Quadrature weights must be positive")

    @property
    def order(self) -> int:
        return int(self.nodes.size)

    def mapped(self, a: float, b: float) -> Tuple[np.ndarray, np.ndarray]:
        """Nodes and weights affinely mapped to [a, b]"""
        half = 0.5 * (b - a)
        return a + half * (self.nodes + 1.0), half * self.weights

    def integrate(self, values: np.ndarray) -> float:
        """Weighted sum of samples taken at the nodes on [-1, 1]"""
        return float(np.dot(self.weights, values))


@dataclass(frozen=True, eq=False)
class ZeroTable:
    """
    Dense table of lambda_{n,m}, the m-th positive zero of j_{n-1}

    lam[n, m - 1] holds lambda_{n,m} for 0 <= n <= n_max and 1 <= m <= m_max.
    """

    n_max: int
    m_max: int
    lam: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lam", _frozen_array(self.lam))
        if self.lam.shape != (self.n_max + 1, self.m_max):
            raise ValueError(
                f"Zero table shape {self.lam.shape} does not match "
                f"(n_max + 1, m_max) = ({self.n_max + 1}, {self.m_max})"
            )

    def value(self, n: int, m: int) -> float:
        if not (0 <= n <= self.n_max and 1 <= m <= self.m_max):
            raise BasisIndexError(
                f"Zero (n={n}, m={m}) outside table (n_max={self.n_max}, m_max={self.m_max})"
            )
        return float(self.lam[n, m - 1])

    def row(self, n: int) -> np.ndarray:
        return self.lam[n]

    def perturbed(self, eps: float) -> "ZeroTable":
        """Copy with every zero shifted by eps (fault injection for self tests)"""
        return ZeroTable(self.n_max, self.m_max, self.lam + eps)


class BasisIndex(msgspec.Struct, frozen=True):
    """Index (m, n, j) of the basis function u_{m,n,j}"""

    m: int
    n: int
    j: int = 0

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"Radial order m must be >= 1, got {self.m}")
        if self.n < 0:
            raise ValueError(f"Degree n must be >= 0, got {self.n}")
        if abs(self.j) > self.n:
            raise ValueError(f"Azimuthal order |j| must be <= n, got j={self.j}, n={self.n}")


@dataclass(frozen=True)
class CoeffSet:
    """Sparse map (m, n) -> coefficient with respect to u_{m,n,0}"""

    m_max: int
    n_max: int
    entries: Dict[Tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        for (m, n), value in self.entries.items():
            if not (1 <= m <= self.m_max and 0 <= n <= self.n_max):
                raise ValueError(
                    f"Coefficient key ({m}, {n}) outside truncation "
                    f"(m_max={self.m_max}, n_max={self.n_max})"
                )
            if not np.isfinite(value):
                raise ValueError(f"Coefficient ({m}, {n}) is not finite: {value}")

    @classmethod
    def from_array(cls, values: np.ndarray) -> "CoeffSet":
        """Build from a dense array indexed [n, m - 1], dropping exact zeros"""
        n_max, m_max = values.shape[0] - 1, values.shape[1]
        entries = {
            (m + 1, n): float(values[n, m])
            for n in range(n_max + 1)
            for m in range(m_max)
            if values[n, m] != 0.0
        }
        return cls(m_max=m_max, n_max=n_max, entries=entries)

    def get(self, m: int, n: int) -> float:
        return self.entries.get((m, n), 0.0)

    def as_array(self) -> np.ndarray:
        """Dense array indexed [n, m - 1]"""
        values = np.zeros((self.n_max + 1, self.m_max))
        for (m, n), value in self.entries.items():
            values[n, m - 1] = value
        return values

    def items(self) -> Iterator[Tuple[Tuple[int, int], float]]:
        return iter(sorted(self.entries.items(), key=lambda kv: (kv[0][1], kv[0][0])))
