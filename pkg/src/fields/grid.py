"""
Grids and Fields
Uniform box grids with periodic or no-slip walls and the discrete fields on them
"""

from dataclasses import dataclass, field
from enum import Enum
import math

import numpy as np

from ..core.errors import GridError, GridMismatch

MIN_CELLS = 8


class Boundary(str, Enum):
    """Boundary tag of a box grid"""

    PERIODIC = "periodic"
    NOSLIP = "noslip"


@dataclass(frozen=True)
class GridSpec:
    """
    Uniform grid on the box [-L_1, L_1] x ... x [-L_d, L_d]

    Scalars live at cell centers. On periodic grids vector components are
    collocated with the scalars; on no-slip grids component i lives on the
    N_i + 1 faces normal to axis i (MAC staggering) and vanishes on the two
    wall faces.
    """

    dim: int
    extent: tuple[float, ...]
    cells: tuple[int, ...]
    boundary: Boundary = Boundary.PERIODIC

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise GridError(f"Grid dimension must be 1, 2 or 3, got {self.dim}")
        object.__setattr__(self, "extent", tuple(float(v) for v in self.extent))
        object.__setattr__(self, "cells", tuple(int(v) for v in self.cells))
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        if len(self.extent) != self.dim or len(self.cells) != self.dim:
            raise GridError(
                f"Need {self.dim} extents and cell counts, got {self.extent} and {self.cells}"
            )
        if any(n < MIN_CELLS for n in self.cells):
            raise GridError(f"Every axis needs at least {MIN_CELLS} cells, got {self.cells}")
        if any(not (L > 0 and math.isfinite(L)) for L in self.extent):
            raise GridError(f"Half-widths must be positive, got {self.extent}")

    @classmethod
    def cube(cls, dim: int, half_width: float, cells: int, boundary=Boundary.PERIODIC) -> "GridSpec":
        return cls(dim, (half_width,) * dim, (cells,) * dim, Boundary(boundary))

    @classmethod
    def from_dict(cls, data: dict) -> "GridSpec":
        return cls(
            dim=int(data["dim"]),
            extent=tuple(data["extent"]),
            cells=tuple(data["cells"]),
            boundary=Boundary(data["boundary"]),
        )

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "extent": list(self.extent),
            "cells": list(self.cells),
            "boundary": self.boundary.value,
        }

    def with_boundary(self, boundary) -> "GridSpec":
        return GridSpec(self.dim, self.extent, self.cells, Boundary(boundary))

    @property
    def periodic(self) -> bool:
        return self.boundary is Boundary.PERIODIC

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(2.0 * L / n for L, n in zip(self.extent, self.cells))

    @property
    def h(self) -> float:
        """Smallest spacing"""
        return min(self.spacing)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.cells

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def volume(self) -> float:
        return float(np.prod([2.0 * L for L in self.extent]))

    def face_shape(self, axis: int) -> tuple[int, ...]:
        if self.periodic:
            return self.cells
        shape = list(self.cells)
        shape[axis] += 1
        return tuple(shape)

    def centers(self, axis: int) -> np.ndarray:
        L, n, h = self.extent[axis], self.cells[axis], self.spacing[axis]
        return -L + (np.arange(n) + 0.5) * h

    def faces(self, axis: int) -> np.ndarray:
        """Coordinates along `axis` of the faces carrying component `axis`"""
        if self.periodic:
            return self.centers(axis)
        L, n, h = self.extent[axis], self.cells[axis], self.spacing[axis]
        return -L + np.arange(n + 1) * h

    def mesh(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*(self.centers(a) for a in range(self.dim)), indexing="ij"))

    def face_mesh(self, axis: int) -> tuple[np.ndarray, ...]:
        axes = [self.faces(a) if a == axis else self.centers(a) for a in range(self.dim)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def radius(self) -> np.ndarray:
        """Distance of every cell center from the origin"""
        return np.sqrt(sum(x**2 for x in self.mesh()))

    def wall_distance(self) -> np.ndarray:
        """Distance of every cell center from the box boundary"""
        mesh = self.mesh()
        return np.min([L - np.abs(x) for L, x in zip(self.extent, mesh)], axis=0)

    def __str__(self) -> str:
        dims = "x".join(str(n) for n in self.cells)
        return f"{self.boundary.value} {dims} on half-widths {self.extent}"


def _check_grid(a, b) -> None:
    if a.grid != b.grid:
        raise GridMismatch(f"Fields live on different grids: {a.grid} vs {b.grid}")


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Cell-centered scalar samples"""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise GridMismatch(f"Scalar shape {values.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, grid: GridSpec) -> "ScalarField":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def from_function(cls, grid: GridSpec, func) -> "ScalarField":
        return cls(grid, func(*grid.mesh()))

    def _coerce(self, other):
        if isinstance(other, ScalarField):
            _check_grid(self, other)
            return other.values
        return other

    def __add__(self, other):
        return ScalarField(self.grid, self.values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return ScalarField(self.grid, self.values - self._coerce(other))

    def __rsub__(self, other):
        return ScalarField(self.grid, self._coerce(other) - self.values)

    def __mul__(self, other):
        return ScalarField(self.grid, self.values * self._coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return ScalarField(self.grid, self.values / self._coerce(other))

    def __neg__(self):
        return ScalarField(self.grid, -self.values)

    def integral(self) -> float:
        return float(np.sum(self.values) * self.grid.cell_volume)

    def mean(self) -> float:
        return self.integral() / self.grid.volume

    def inner(self, other: "ScalarField") -> float:
        _check_grid(self, other)
        return float(np.sum(self.values * other.values) * self.grid.cell_volume)

    def norm(self, q: float = 2.0) -> float:
        """Discrete L^q norm, q = inf for the max norm"""
        if math.isinf(q):
            return float(np.max(np.abs(self.values))) if self.values.size else 0.0
        return float((np.sum(np.abs(self.values) ** q) * self.grid.cell_volume) ** (1.0 / q))

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())


@dataclass(frozen=True, eq=False)
class VectorField:
    """Vector samples, one array per component laid out per the grid staggering"""

    grid: GridSpec
    components: tuple[np.ndarray, ...] = field(default=())

    def __post_init__(self):
        comps = tuple(np.asarray(c, dtype=float) for c in self.components)
        if len(comps) != self.grid.dim:
            raise GridMismatch(f"Need {self.grid.dim} components, got {len(comps)}")
        for axis, comp in enumerate(comps):
            expected = self.grid.face_shape(axis)
            if comp.shape != expected:
                raise GridMismatch(f"Component {axis} has shape {comp.shape}, expected {expected}")
            if not self.grid.periodic:
                walls = np.take(comp, [0, -1], axis=axis)
                if np.any(walls != 0.0):
                    raise GridError(f"Component {axis} does not vanish on the no-slip wall faces")
        object.__setattr__(self, "components", comps)

    @classmethod
    def zeros(cls, grid: GridSpec) -> "VectorField":
        return cls(grid, tuple(np.zeros(grid.face_shape(a)) for a in range(grid.dim)))

    @classmethod
    def with_walls(cls, grid: GridSpec, components) -> "VectorField":
        """Build a field after zeroing the wall faces of every component"""
        comps = [np.array(c, dtype=float) for c in components]
        if not grid.periodic:
            for axis, comp in enumerate(comps):
                index = [slice(None)] * grid.dim
                for end in (0, -1):
                    index[axis] = end
                    comp[tuple(index)] = 0.0
        return cls(grid, tuple(comps))

    @classmethod
    def from_function(cls, grid: GridSpec, func) -> "VectorField":
        """Sample func(*coords) -> tuple of components on each component's own points"""
        comps = [func(*grid.face_mesh(axis))[axis] for axis in range(grid.dim)]
        return cls.with_walls(grid, comps)

    def _coerce(self, other):
        if isinstance(other, VectorField):
            _check_grid(self, other)
            return other.components
        return (other,) * self.grid.dim

    def __add__(self, other):
        return VectorField(self.grid, tuple(a + b for a, b in zip(self.components, self._coerce(other))))

    __radd__ = __add__

    def __sub__(self, other):
        return VectorField(self.grid, tuple(a - b for a, b in zip(self.components, self._coerce(other))))

    def __mul__(self, other):
        if isinstance(other, VectorField):
            raise TypeError("Use inner() for the product of two vector fields")
        return VectorField(self.grid, tuple(c * other for c in self.components))

    __rmul__ = __mul__

    def __neg__(self):
        return VectorField(self.grid, tuple(-c for c in self.components))

    def at_centers(self) -> np.ndarray:
        """Components averaged to cell centers, shape (dim, *cells)"""
        if self.grid.periodic:
            return np.stack(self.components)
        out = []
        for axis, comp in enumerate(self.components):
            lo = np.take(comp, np.arange(comp.shape[axis] - 1), axis=axis)
            hi = np.take(comp, np.arange(1, comp.shape[axis]), axis=axis)
            out.append(0.5 * (lo + hi))
        return np.stack(out)

    def inner(self, other: "VectorField") -> float:
        _check_grid(self, other)
        total = sum(np.sum(a * b) for a, b in zip(self.components, other.components))
        return float(total * self.grid.cell_volume)

    def magnitude(self) -> np.ndarray:
        return np.sqrt(np.sum(self.at_centers() ** 2, axis=0))

    def norm(self, q: float = 2.0) -> float:
        """Discrete L^q norm; q = 2 sums the staggered components exactly"""
        if q == 2.0:
            return math.sqrt(max(self.inner(self), 0.0))
        mag = self.magnitude()
        if math.isinf(q):
            return float(np.max(mag))
        return float((np.sum(mag**q) * self.grid.cell_volume) ** (1.0 / q))

    def sup(self) -> float:
        return float(max(np.max(np.abs(c)) for c in self.components))

    def copy(self) -> "VectorField":
        return VectorField(self.grid, tuple(c.copy() for c in self.components))
