"""Cell-centered finite-volume grids on intervals and axis-aligned rectangles.

Cells are numbered with the x index running fastest, ``k = iy * nx + ix``.
Boundary faces are enumerated side by side: left, right (and in 2D bottom,
top), each side ordered by increasing tangential coordinate.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .exceptions import InvalidGrid

SIDES_1D = ("left", "right")
SIDES_2D = ("left", "right", "bottom", "top")


@dataclass(frozen=True)
class BoundaryFace:
    index: int
    adjacent_cell: int
    outward_normal: tuple[float, ...]
    surface_weight: float
    face_center: tuple[float, ...]
    side: str


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform tensor grid with its boundary faces.

    Attributes
    ----------
    cells_per_axis : tuple of int
    lengths : tuple of float
        Domain extent per axis; the domain is ``[0, lx] (x [0, ly])``.
    """

    cells_per_axis: tuple[int, ...]
    lengths: tuple[float, ...]
    boundary_faces: tuple[BoundaryFace, ...] = field(repr=False)

    @property
    def dimension(self) -> int:
        return len(self.cells_per_axis)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(l / n for l, n in zip(self.lengths, self.cells_per_axis))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.cells_per_axis))

    @property
    def n_faces(self) -> int:
        return len(self.boundary_faces)

    @property
    def domain_volume(self) -> float:
        return float(np.prod(self.lengths))

    @cached_property
    def cell_centers(self) -> np.ndarray:
        """Array of shape ``(n_cells, d)``."""
        axes = [(np.arange(n) + 0.5) * h for n, h in zip(self.cells_per_axis, self.spacing)]
        if self.dimension == 1:
            return axes[0][:, None]
        X, Y = np.meshgrid(axes[0], axes[1], indexing="xy")
        return np.column_stack([X.ravel(), Y.ravel()])

    def cell_index(self, multi: tuple[int, ...]) -> int:
        if self.dimension == 1:
            return int(multi[0])
        ix, iy = multi
        return int(iy * self.cells_per_axis[0] + ix)

    def cell_multi_index(self, k: int) -> tuple[int, ...]:
        if self.dimension == 1:
            return (int(k),)
        nx = self.cells_per_axis[0]
        return (int(k % nx), int(k // nx))

    def neighbors(self, k: int):
        """Yield ``(axis, direction, neighbor)`` for every interior face of cell ``k``."""
        multi = self.cell_multi_index(k)
        for axis, n in enumerate(self.cells_per_axis):
            for direction in (-1, 1):
                j = multi[axis] + direction
                if 0 <= j < n:
                    other = list(multi)
                    other[axis] = j
                    yield axis, direction, self.cell_index(tuple(other))

    def faces_on(self, side: str) -> list[int]:
        return [f.index for f in self.boundary_faces if f.side == side]

    @property
    def surface_weights(self) -> np.ndarray:
        return np.array([f.surface_weight for f in self.boundary_faces])

    @property
    def adjacent_cells(self) -> np.ndarray:
        return np.array([f.adjacent_cell for f in self.boundary_faces], dtype=int)

    @property
    def outward_normals(self) -> np.ndarray:
        return np.array([f.outward_normal for f in self.boundary_faces], dtype=float)

    def snap(self, point) -> int:
        """Index of the cell whose center is nearest to ``point``.

        Ties go to the lower cell index.
        """
        p = np.atleast_1d(np.asarray(point, dtype=float))
        if p.shape != (self.dimension,):
            raise InvalidGrid(f"point {point!r} does not have dimension {self.dimension}")
        if np.any(p < 0) or np.any(p > np.asarray(self.lengths)):
            raise InvalidGrid(f"point {point!r} lies outside the closed domain")
        d2 = np.sum((self.cell_centers - p) ** 2, axis=1)
        return int(np.argmin(d2))


def build_interval(n: int, length: float = 1.0) -> Grid:
    if int(n) != n or n < 2:
        raise InvalidGrid(f"an interval grid needs n >= 2 cells, got {n}")
    if not length > 0:
        raise InvalidGrid(f"length must be positive, got {length}")
    n = int(n)
    faces = (
        BoundaryFace(0, 0, (-1.0,), 1.0, (0.0,), "left"),
        BoundaryFace(1, n - 1, (1.0,), 1.0, (float(length),), "right"),
    )
    return Grid((n,), (float(length),), faces)


def build_rectangle(nx: int, ny: int, lx: float = 1.0, ly: float = 1.0) -> Grid:
    for name, v in (("nx", nx), ("ny", ny)):
        if int(v) != v or v < 2:
            raise InvalidGrid(f"{name} must be >= 2, got {v}")
    if not (lx > 0 and ly > 0):
        raise InvalidGrid(f"side lengths must be positive, got {lx}, {ly}")
    nx, ny, lx, ly = int(nx), int(ny), float(lx), float(ly)
    hx, hy = lx / nx, ly / ny
    faces: list[BoundaryFace] = []

    def add(cell, normal, weight, center, side):
        faces.append(BoundaryFace(len(faces), cell, normal, weight, center, side))

    for iy in range(ny):
        add(iy * nx, (-1.0, 0.0), hy, (0.0, (iy + 0.5) * hy), "left")
    for iy in range(ny):
        add(iy * nx + nx - 1, (1.0, 0.0), hy, (lx, (iy + 0.5) * hy), "right")
    for ix in range(nx):
        add(ix, (0.0, -1.0), hx, ((ix + 0.5) * hx, 0.0), "bottom")
    for ix in range(nx):
        add((ny - 1) * nx + ix, (0.0, 1.0), hx, ((ix + 0.5) * hx, ly), "top")
    return Grid((nx, ny), (lx, ly), tuple(faces))
