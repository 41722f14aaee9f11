"""Brute-force references for the test suite.

Nothing here imports from the assembly, greiner, evolution or spectral
modules; agreement with them is therefore independent evidence.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _cell_coords(grid, k):
    if grid.dimension == 1:
        return [k]
    nx = grid.cells_per_axis[0]
    return [k % nx, k // nx]


def _cell_id(grid, coords):
    if grid.dimension == 1:
        return coords[0]
    return coords[1] * grid.cells_per_axis[0] + coords[0]


def _neighbor(grid, k, axis, step):
    coords = _cell_coords(grid, k)
    coords[axis] += step
    if 0 <= coords[axis] < grid.cells_per_axis[axis]:
        return _cell_id(grid, coords)
    return None


def _gradient_row(grid, k, axis):
    """Coefficients of the cell gradient ``D_axis u`` at cell ``k``: {cell: weight}."""
    h = grid.lengths[axis] / grid.cells_per_axis[axis]
    row = {}
    for step in (-1, 1):
        nb = _neighbor(grid, k, axis, step)
        if nb is None:
            row[k] = row.get(k, 0.0) + step / h
        else:
            row[k] = row.get(k, 0.0) + 0.5 * step / h
            row[nb] = row.get(nb, 0.0) + 0.5 * step / h
    return row


def naive_assemble(grid, coeff, family=None) -> np.ndarray:
    """Dense generator re-derived from the per-cell flux balance, one face at a time."""
    n, d = grid.n_cells, grid.dimension
    h = [grid.lengths[i] / grid.cells_per_axis[i] for i in range(d)]
    vol = 1.0
    for hi in h:
        vol *= hi
    A = np.zeros((n, n))
    for k in range(n):
        for j in range(d):
            for step in (-1, 1):
                nb = _neighbor(grid, k, j, step)
                if nb is None:
                    continue
                area = vol / h[j]
                ak, an = coeff.a[k, j, j], coeff.a[nb, j, j]
                a_face = 2.0 * ak * an / (ak + an)
                # outward flux = step * (flux in +e_j direction); outward gradient is (u_nb - u_k)/h
                A[k, nb] += a_face / h[j] * area / vol
                A[k, k] -= a_face / h[j] * area / vol
                for i in range(d):
                    if i == j:
                        continue
                    a_cross = 0.5 * (coeff.a[k, i, j] + coeff.a[nb, i, j])
                    for cell, wgt in _gradient_row(grid, k, i).items():
                        A[k, cell] += step * a_cross * 0.5 * wgt * area / vol
                    for cell, wgt in _gradient_row(grid, nb, i).items():
                        A[k, cell] += step * a_cross * 0.5 * wgt * area / vol
                b_face = 0.5 * (coeff.b[k, j] + coeff.b[nb, j])
                A[k, k] += step * b_face * 0.5 * area / vol
                A[k, nb] += step * b_face * 0.5 * area / vol
            for cell, wgt in _gradient_row(grid, k, j).items():
                A[k, cell] -= coeff.c[k, j] * wgt
        A[k, k] -= coeff.d0[k]
    for face in grid.boundary_faces:
        k = face.adjacent_cell
        A[k, k] -= coeff.beta[face.index] * face.surface_weight / vol
        if family is not None:
            for cell in range(n):
                A[k, cell] += face.surface_weight / vol * family.weights[face.index, cell]
    return A


def closed_form_neumann_eigs(n: int, length: float = 1.0) -> np.ndarray:
    """Eigenvalues ``-(4/dx^2) sin^2(k pi / 2n)``, ``k = 0..n-1``, of the 1D FV Neumann Laplacian."""
    if n < 2:
        raise ValueError("n must be >= 2")
    dx = length / n
    k = np.arange(n)
    return -(4.0 / dx**2) * np.sin(k * np.pi / (2 * n)) ** 2


def dense_resolvent(M: np.ndarray, lam: float) -> np.ndarray:
    """``(lam I - M)^{-1}`` by a plain dense inverse."""
    return np.linalg.inv(lam * np.eye(M.shape[0]) - M)


@dataclass(frozen=True)
class ReferenceCase:
    name: str
    inputs: dict
    expected: np.ndarray
    tolerance: float
    provenance: str


REFERENCE_CASES = (
    ReferenceCase(
        "neumann_n2",
        {"n": 2, "length": 1.0, "beta": 0.0},
        np.array([[-4.0, 4.0], [4.0, -4.0]]),
        1e-13,
        "hand assembly: dx = 1/2, a/dx^2 = 4 across the single interior face",
    ),
    ReferenceCase(
        "robin_n2",
        {"n": 2, "length": 1.0, "beta": 1.0},
        np.array([[-6.0, 4.0], [4.0, -6.0]]),
        1e-13,
        "hand assembly: adds beta * w / vol = 1 * 1 / 0.5 = 2 to each diagonal",
    ),
    ReferenceCase(
        "robin_atom_n2",
        {"n": 2, "length": 1.0, "beta": 1.0, "left_atom": (0.75, 1.0)},
        np.array([[-6.0, 6.0], [4.0, -6.0]]),
        1e-13,
        "hand assembly: Phi row of the left face is (0, 1); E entry w/vol = 2",
    ),
)
