"""Shared builders for the test suite."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from robin_nonlocal import (BoundaryMeasureFamily, CoefficientField, Measure, build_interval,
                            build_rectangle)
from robin_nonlocal.geometry import Grid

ACCEPTANCE_LINES: list[str] = []


def record(criterion: int, ok: bool, detail: str) -> None:
    line = f"criterion {criterion:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


@dataclass
class Case:
    grid: Grid
    coeff: CoefficientField
    family: BoundaryMeasureFamily


def random_coefficients(rng: np.random.Generator, grid: Grid, *, drift: float = 1.0,
                        cross: bool = False) -> CoefficientField:
    """Cellwise random coefficients with cell Peclet number below 1.

    ``drift`` scales ``b`` and ``c`` relative to the largest value that keeps
    the Peclet number under 1.
    """
    n, d = grid.n_cells, grid.dimension
    diag = rng.uniform(0.5, 2.0, size=(n, d))
    a = np.zeros((n, d, d))
    for k in range(n):
        a[k] = np.diag(diag[k])
        if cross:
            off = rng.uniform(-0.2, 0.2) * min(diag[k])
            a[k, 0, 1] = a[k, 1, 0] = off
    h = max(grid.spacing)
    eta = 0.5 * (0.6 if cross else 1.0)
    vmax = 0.45 * drift * 2 * eta / h  # (max|b| + max|c|) h / (2 eta) < 0.9
    b = rng.uniform(-vmax, vmax, size=(n, d))
    c = rng.uniform(-vmax, vmax, size=(n, d))
    d0 = rng.uniform(0.0, 1.0, size=n)
    beta = rng.uniform(0.0, 2.0, size=grid.n_faces)
    return CoefficientField(a=a, b=b, c=c, d0=d0, beta=beta)


def random_point(rng: np.random.Generator, grid: Grid) -> tuple:
    return tuple(rng.uniform(0.0, L) for L in grid.lengths)


def random_family(rng: np.random.Generator, grid: Grid, *, max_weight: float = 1.0,
                  atoms: int = 2, density_prob: float = 0.5) -> BoundaryMeasureFamily:
    measures = []
    for _ in range(grid.n_faces):
        m = Measure.zero()
        for _ in range(rng.integers(0, atoms + 1)):
            m = m + Measure.dirac(random_point(rng, grid), rng.uniform(0.0, max_weight))
        if rng.random() < density_prob:
            m = m + Measure(density=rng.uniform(0.0, max_weight, size=grid.n_cells))
        measures.append(m)
    return BoundaryMeasureFamily(grid, measures)


def random_case(rng: np.random.Generator, *, dim: int = 1, n: int = 16, cross: bool = False,
                max_weight: float = 1.0) -> Case:
    grid = build_interval(n) if dim == 1 else build_rectangle(n, n)
    coeff = random_coefficients(rng, grid, cross=cross)
    return Case(grid, coeff, random_family(rng, grid, max_weight=max_weight))


def far_cell_point(rng: np.random.Generator, grid: Grid, face: int) -> tuple:
    """A point whose cell is at graph distance >= 2 from the face's adjacent cell."""
    adj = np.array(grid.cell_multi_index(int(grid.adjacent_cells[face])))
    while True:
        p = random_point(rng, grid)
        k = grid.snap(p)
        if np.abs(np.array(grid.cell_multi_index(k)) - adj).sum() >= 2:
            return p


def negative_case(rng: np.random.Generator, n: int = 16, dim: int = 1) -> Case:
    """A random positive case plus one negative atom.

    The atom lands away from the diffusion stencil of the face's cell and
    outweighs all positive mass fed into that cell-to-cell coupling.
    """
    case = random_case(rng, dim=dim, n=n)
    grid = case.grid
    z = int(rng.integers(0, grid.n_faces))
    p = far_cell_point(rng, grid, z)
    k, adj = grid.snap(p), grid.adjacent_cells[z]
    w = grid.surface_weights
    same = grid.adjacent_cells == adj
    positive = float(np.sum(w[same] * case.family.weights[same, k])) / w[z]
    measures = list(case.family.measures)
    measures[z] = measures[z] + Measure.dirac(p, -(positive + rng.uniform(0.1, 1.0)))
    return Case(case.grid, case.coeff, BoundaryMeasureFamily(case.grid, measures))
