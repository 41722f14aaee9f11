"""Discrete boundary measure families.

Each boundary face ``z`` carries a measure on the closed domain made of
point atoms (snapped to the nearest cell center) and a per-cell density
integrated against the cell volume.  Every such measure is absolutely
continuous with respect to counting measure on cells, and measurability in
``z`` is trivial for a finite face set, so those hypotheses are not checked.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import InvalidFace, OverlappingPartition, UncoveredFace
from .geometry import Grid


@dataclass(frozen=True)
class Measure:
    """A single measure: atoms ``[(point, weight), ...]`` plus optional cell density."""

    atoms: tuple = ()
    density: np.ndarray | None = None

    @classmethod
    def zero(cls) -> "Measure":
        return cls()

    @classmethod
    def dirac(cls, point, weight: float = 1.0) -> "Measure":
        return cls(atoms=((tuple(np.atleast_1d(point).astype(float)), float(weight)),))

    @classmethod
    def uniform(cls, grid: Grid, mass: float) -> "Measure":
        return cls(density=np.full(grid.n_cells, float(mass) / grid.domain_volume))

    def __add__(self, other: "Measure") -> "Measure":
        if self.density is None:
            dens = other.density
        elif other.density is None:
            dens = self.density
        else:
            dens = self.density + other.density
        return Measure(tuple(self.atoms) + tuple(other.atoms), dens)


def _weights_row(measure: Measure, grid: Grid) -> np.ndarray:
    row = np.zeros(grid.n_cells)
    for point, weight in measure.atoms:
        row[grid.snap(point)] += weight
    if measure.density is not None:
        dens = np.asarray(measure.density, dtype=float)
        if dens.shape != (grid.n_cells,):
            raise ValueError(f"density needs {grid.n_cells} values, got {dens.shape}")
        row += dens * grid.cell_volume
    return row


class BoundaryMeasureFamily:
    """Measures ``mu(z)`` for every boundary face of ``grid``.

    The family is stored in lumped form as ``weights[z, k]``: the mass that
    ``mu(z)`` puts on cell ``k`` (atom weights plus ``density * cell_volume``).
    The separate ``atom_part`` and ``density_part`` are kept for reporting.

    Parameters
    ----------
    grid : Grid
    measures : sequence of Measure
        One per boundary face.
    p_exponent : float, optional
        Integrability exponent for the report, defaults to 2.
    """

    def __init__(self, grid: Grid, measures: Sequence[Measure], p_exponent: float | None = None):
        if len(measures) != grid.n_faces:
            raise InvalidFace(f"need one measure per face ({grid.n_faces}), got {len(measures)}")
        if p_exponent is None:
            p_exponent = max(2.0, grid.dimension - 1.0)
        if p_exponent < 2 or p_exponent <= grid.dimension - 1:
            raise ValueError(f"p_exponent must be >= 2 and > d-1, got {p_exponent}")
        self.grid = grid
        self.measures = tuple(measures)
        self.p_exponent = float(p_exponent)
        atom_part = np.zeros((grid.n_faces, grid.n_cells))
        density_part = np.zeros((grid.n_faces, grid.n_cells))
        for z, m in enumerate(self.measures):
            atom_part[z] = _weights_row(Measure(atoms=m.atoms), grid)
            if m.density is not None:
                density_part[z] = _weights_row(Measure(density=m.density), grid)
        self.atom_part = atom_part
        self.density_part = density_part
        self.weights = atom_part + density_part
        for arr in (self.atom_part, self.density_part, self.weights):
            arr.setflags(write=False)

    @classmethod
    def from_weights(cls, grid: Grid, weights, p_exponent: float | None = None):
        """Family given directly by lumped cell weights ``weights[z, k]``."""
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (grid.n_faces, grid.n_cells):
            raise ValueError(f"weights must have shape {(grid.n_faces, grid.n_cells)}")
        dens = weights / grid.cell_volume
        return cls(grid, [Measure(density=row) for row in dens], p_exponent)

    @classmethod
    def zero(cls, grid: Grid) -> "BoundaryMeasureFamily":
        return cls(grid, [Measure.zero()] * grid.n_faces)

    @property
    def is_positive(self) -> bool:
        atoms_ok = all(w >= 0 for m in self.measures for _, w in m.atoms)
        dens_ok = all(m.density is None or np.all(np.asarray(m.density) >= 0) for m in self.measures)
        return bool(atoms_ok and dens_ok)

    @property
    def total_masses(self) -> np.ndarray:
        return self.weights.sum(axis=1)

    @property
    def norms(self) -> np.ndarray:
        """Total variation ``sum |w_k| + sum |rho| * vol`` per face."""
        tv = np.array([sum(abs(w) for _, w in m.atoms) for m in self.measures], dtype=float)
        return tv + np.abs(self.density_part).sum(axis=1)

    def scaled(self, factor: float) -> "BoundaryMeasureFamily":
        return BoundaryMeasureFamily(
            self.grid,
            [
                Measure(
                    tuple((p, factor * w) for p, w in m.atoms),
                    None if m.density is None else factor * np.asarray(m.density),
                )
                for m in self.measures
            ],
            self.p_exponent,
        )


def pair(u, z: int, family: BoundaryMeasureFamily) -> float:
    """Discrete pairing ``<u, mu(z)>``."""
    if not 0 <= z < family.grid.n_faces:
        raise InvalidFace(f"face index {z} out of range [0, {family.grid.n_faces})")
    u = np.asarray(u, dtype=float)
    if u.shape != (family.grid.n_cells,):
        raise ValueError(f"u must have {family.grid.n_cells} entries")
    return float(family.weights[z] @ u)


@dataclass(frozen=True)
class HypothesisReport:
    total_masses: np.ndarray
    norms: np.ndarray
    p_integral: float
    p_exponent: float
    is_positive: bool
    max_norm: float


def hypothesis_report(family: BoundaryMeasureFamily, grid: Grid | None = None) -> HypothesisReport:
    grid = family.grid if grid is None else grid
    norms = family.norms
    p = family.p_exponent
    return HypothesisReport(
        total_masses=family.total_masses,
        norms=norms,
        p_integral=float(np.sum(norms**p * grid.surface_weights)),
        p_exponent=p,
        is_positive=family.is_positive,
        max_norm=float(norms.max(initial=0.0)),
    )


def constant_family(measure: Measure, grid: Grid, p_exponent: float | None = None):
    return BoundaryMeasureFamily(grid, [measure] * grid.n_faces, p_exponent)


def resolve_faces(selector, grid: Grid) -> list[int]:
    """Face indices for ``"all"``, a side name, or an explicit index list."""
    if isinstance(selector, str):
        if selector == "all":
            return list(range(grid.n_faces))
        faces = grid.faces_on(selector)
        if not faces:
            raise InvalidFace(f"unknown face selector {selector!r} for a {grid.dimension}D grid")
        return faces
    faces = [int(i) for i in selector]
    for i in faces:
        if not 0 <= i < grid.n_faces:
            raise InvalidFace(f"face index {i} out of range [0, {grid.n_faces})")
    return faces


def piecewise_family(face_partition, measures: Sequence[Measure], grid: Grid, p_exponent=None):
    """Family taking the value ``measures[n]`` on the faces of part ``n``.

    Parts may be face selectors (see :func:`resolve_faces`).  Every face must
    be covered exactly once.
    """
    if len(face_partition) != len(measures):
        raise ValueError("face_partition and measures must have the same length")
    assigned: list[Measure | None] = [None] * grid.n_faces
    for part, measure in zip(face_partition, measures):
        for z in resolve_faces(part, grid):
            if assigned[z] is not None:
                raise OverlappingPartition(f"face {z} belongs to more than one part")
            assigned[z] = measure
    missing = [z for z, m in enumerate(assigned) if m is None]
    if missing:
        raise UncoveredFace(f"faces {missing} are not covered by the partition")
    return BoundaryMeasureFamily(grid, assigned, p_exponent)
