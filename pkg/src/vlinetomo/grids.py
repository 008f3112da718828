"""Sampled scalar and symmetric tensor fields on the unit disk.

Fields live on a Cartesian grid over [-1,1] x [-1,1]; sample (i, j) sits at
x = -1 + i*hx, y = -1 + j*hy.  Arrays are stored (ny, nx), y-outer, so
``values[j, i]`` is the sample at (x_i, y_j).  A symmetric m-tensor has m+1
independent components; component p holds the entry with exactly p indices
equal to 2 (index value in {1, 2}).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MAX_TENSOR_ORDER = 8


@dataclass(frozen=True)
class GridSpec:
    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 16 or self.ny < 16:
            raise ValueError("grid must be at least 16x16")

    @property
    def hx(self) -> float:
        return 2.0 / (self.nx - 1)

    @property
    def hy(self) -> float:
        return 2.0 / (self.ny - 1)

    @property
    def x(self) -> np.ndarray:
        return -1.0 + self.hx * np.arange(self.nx)

    @property
    def y(self) -> np.ndarray:
        return -1.0 + self.hy * np.arange(self.ny)

    def mesh(self):
        """(X, Y) coordinate arrays of shape (ny, nx)."""
        return np.meshgrid(self.x, self.y)

    def disk_mask(self) -> np.ndarray:
        """Boolean (ny, nx) array, True strictly inside the unit disk."""
        xx, yy = self.mesh()
        return xx * xx + yy * yy < 1.0


def _clip_to_disk(values: np.ndarray, spec: GridSpec) -> np.ndarray:
    out = np.asarray(values, dtype=float).copy()
    out[~spec.disk_mask()] = 0.0
    return out


@dataclass(frozen=True)
class ScalarGrid:
    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=float)
        if v.shape != (self.spec.ny, self.spec.nx):
            raise ValueError(f"values shape {v.shape} != (ny, nx)")
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite values in grid")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, spec: GridSpec, fn) -> "ScalarGrid":
        xx, yy = spec.mesh()
        return cls(spec, _clip_to_disk(fn(xx, yy), spec))

    def clipped(self) -> "ScalarGrid":
        return ScalarGrid(self.spec, _clip_to_disk(self.values, self.spec))


@dataclass(frozen=True)
class SymmetricTensorField:
    order: int
    spec: GridSpec
    components: np.ndarray  # (order+1, ny, nx)

    def __post_init__(self):
        if not 0 <= self.order <= MAX_TENSOR_ORDER:
            raise ValueError(f"tensor order must be in [0, {MAX_TENSOR_ORDER}]")
        c = np.ascontiguousarray(self.components, dtype=float)
        if c.shape != (self.order + 1, self.spec.ny, self.spec.nx):
            raise ValueError(f"components shape {c.shape} != (m+1, ny, nx)")
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite values in field")
        object.__setattr__(self, "components", c)

    @classmethod
    def zeros(cls, order: int, spec: GridSpec) -> "SymmetricTensorField":
        return cls(order, spec, np.zeros((order + 1, spec.ny, spec.nx)))

    @classmethod
    def from_scalar(cls, g: ScalarGrid) -> "SymmetricTensorField":
        return cls(0, g.spec, g.values[None])

    def component(self, p: int) -> np.ndarray:
        """Component with exactly p indices equal to 2."""
        return self.components[p]

    def __add__(self, other: "SymmetricTensorField") -> "SymmetricTensorField":
        if other.order != self.order or other.spec != self.spec:
            raise ValueError("field mismatch in addition")
        return SymmetricTensorField(self.order, self.spec,
                                    self.components + other.components)

    def __mul__(self, a: float) -> "SymmetricTensorField":
        return SymmetricTensorField(self.order, self.spec, self.components * a)

    __rmul__ = __mul__

    def __sub__(self, other: "SymmetricTensorField") -> "SymmetricTensorField":
        return self + (-1.0) * other


@dataclass(frozen=True)
class PotentialSet:
    """Scalar potentials of the decomposition f = sum_j (d_perp)^(m-j) d^j chi_j."""

    order: int
    potentials: tuple  # m+1 ScalarGrid
    boundary_order: int = 0

    def __post_init__(self):
        if len(self.potentials) != self.order + 1:
            raise ValueError("need exactly m+1 potentials")
        object.__setattr__(self, "potentials", tuple(self.potentials))

    @property
    def spec(self) -> GridSpec:
        return self.potentials[0].spec


@dataclass(frozen=True)
class DirectionPair:
    """Geometry of one V-line: vertex on the unit circle at polar angle phi,
    branch directions u, v at half-opening psi around the inward axis."""

    phi: float
    psi: float
    u: tuple = field(init=False)
    v: tuple = field(init=False)

    def __post_init__(self):
        if not 0.0 < self.psi < math.pi / 2:
            raise ValueError("psi must lie in (0, pi/2)")
        object.__setattr__(self, "u", unit_vector(math.pi + self.phi - self.psi))
        object.__setattr__(self, "v", unit_vector(math.pi + self.phi + self.psi))

    @property
    def u_perp(self) -> tuple:
        return (-self.u[1], self.u[0])

    @property
    def v_perp(self) -> tuple:
        return (-self.v[1], self.v[0])

    @property
    def vertex(self) -> tuple:
        return unit_vector(self.phi)

    @property
    def offset(self) -> float:
        """Distance of both rays from the origin."""
        return math.sin(self.psi)

    @property
    def xi_minus(self) -> float:
        return self.phi - (self.psi - math.pi / 2)

    @property
    def xi_plus(self) -> float:
        return self.phi + (self.psi - math.pi / 2)

    @property
    def chord_length(self) -> float:
        """Parameter at which each branch exits the unit disk."""
        return 2.0 * math.cos(self.psi)


def unit_vector(angle: float) -> tuple:
    return (math.cos(angle), math.sin(angle))
