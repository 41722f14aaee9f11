"""Finite-volume assembly of the local Robin generator and the nonlocal boundary operators.

Generator convention: matrices represent ``-A`` (with boundary terms), so
the semigroup solves ``u' = A u``.  Interior faces carry the two-point
diffusive flux with harmonic-mean diffusion, a centrally averaged
cross-diffusion term, and a central ``b`` flux.  A boundary face ``z``
contributes its boundary flux ``(g(z) - beta(z) u_i) * w_z / vol`` to its
adjacent cell ``i``, where the boundary datum ``g`` is zero for ``A0`` and
``Phi u`` for the perturbed generator.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.io
import scipy.sparse as sp

from .coefficients import CoefficientField, discrete_divergence_b, face_drift, validate
from .geometry import Grid
from .measures import BoundaryMeasureFamily

DENSE_LIMIT = 4096


@dataclass(frozen=True, eq=False)
class GeneratorMatrix:
    entries: np.ndarray | sp.csr_matrix
    kind: str
    grid: Grid
    coeff: CoefficientField
    family: BoundaryMeasureFamily | None = None

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.entries)

    def toarray(self) -> np.ndarray:
        if self.is_sparse:
            return self.entries.toarray()
        return np.array(self.entries)

    def __matmul__(self, other):
        return self.entries @ other

    def row_sums(self) -> np.ndarray:
        return np.asarray(self.entries.sum(axis=1)).ravel()

    def is_metzler(self) -> bool:
        return is_metzler(self.entries)


def is_metzler(A) -> bool:
    """True when every off-diagonal entry is nonnegative (no tolerance)."""
    if sp.issparse(A):
        off = sp.coo_matrix(A)
        mask = off.row != off.col
        return bool(np.all(off.data[mask] >= 0))
    A = np.asarray(A)
    off = A - np.diag(np.diag(A))
    return bool(np.all(off >= 0))


def _as_storage(M: sp.spmatrix, n: int, dense: bool | None):
    if dense is None:
        dense = n <= DENSE_LIMIT
    return M.toarray() if dense else sp.csr_matrix(M)


def _interior_faces(grid: Grid, axis: int) -> tuple[np.ndarray, np.ndarray]:
    """Cell pairs ``(left, right)`` across interior faces normal to ``axis``."""
    idx = np.arange(grid.n_cells)
    if grid.dimension == 1:
        return idx[:-1], idx[1:]
    nx, ny = grid.cells_per_axis
    ix, iy = idx % nx, idx // nx
    if axis == 0:
        left = idx[ix < nx - 1]
        return left, left + 1
    left = idx[iy < ny - 1]
    return left, left + nx


def _selector(cells: np.ndarray, n: int) -> sp.csr_matrix:
    m = len(cells)
    return sp.csr_matrix((np.ones(m), (np.arange(m), cells)), shape=(m, n))


def gradient_matrix(grid: Grid, axis: int) -> sp.csr_matrix:
    """Green-Gauss cell gradient along ``axis``; boundary traces use the cell value."""
    n = grid.n_cells
    h = grid.spacing[axis]
    left, right = _interior_faces(grid, axis)
    # face value (u_L + u_R)/2 enters +1/h in L's gradient and -1/h in R's
    rows = np.concatenate([left, left, right, right])
    cols = np.concatenate([left, right, left, right])
    vals = np.concatenate([np.full(len(left), 0.5), np.full(len(left), 0.5),
                           np.full(len(left), -0.5), np.full(len(left), -0.5)])
    # boundary faces normal to this axis: trace = cell value
    trace = np.zeros(n)
    np.add.at(trace, grid.adjacent_cells, grid.outward_normals[:, axis])
    G = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)) + sp.diags(trace)
    return (G / h).tocsr()


def _interior_flux_operator(grid: Grid, coeff: CoefficientField) -> sp.csr_matrix:
    """Sum over interior faces of the outward fluxes, divided by the cell volume."""
    n, d = grid.n_cells, grid.dimension
    grads = [gradient_matrix(grid, i) for i in range(d)] if d > 1 else None
    total = sp.csr_matrix((n, n))
    for j in range(d):
        h = grid.spacing[j]
        L, R = _interior_faces(grid, j)
        SL, SR = _selector(L, n), _selector(R, n)
        aL, aR = coeff.a[L, j, j], coeff.a[R, j, j]
        a_face = 2.0 * aL * aR / (aL + aR)
        b_face = 0.5 * (coeff.b[L, j] + coeff.b[R, j])
        # flux in +e_j direction across each face, already scaled by area/vol = 1/h
        F = sp.diags(a_face / h**2) @ (SR - SL) + sp.diags(b_face / (2.0 * h)) @ (SL + SR)
        if grads is not None:
            for i in range(d):
                if i == j:
                    continue
                a_cross = 0.5 * (coeff.a[L, i, j] + coeff.a[R, i, j])
                if np.any(a_cross):
                    Gi = grads[i]
                    F = F + sp.diags(a_cross / (2.0 * h)) @ (SL @ Gi + SR @ Gi)
        total = total + (SL - SR).T @ F
    return total.tocsr()


def assemble_A0(grid: Grid, coeff: CoefficientField, *, dense: bool | None = None) -> GeneratorMatrix:
    """Generator with local Robin boundary conditions (homogeneous boundary datum).

    Raises
    ------
    NonElliptic, InvalidField
        From coefficient validation.
    """
    validate(coeff, grid)
    n, d = grid.n_cells, grid.dimension
    M = _interior_flux_operator(grid, coeff)
    for i in range(d):
        if np.any(coeff.c[:, i]):
            M = M - sp.diags(coeff.c[:, i]) @ gradient_matrix(grid, i)
    robin = np.zeros(n)
    np.add.at(robin, grid.adjacent_cells, coeff.beta * grid.surface_weights / grid.cell_volume)
    M = M - sp.diags(robin + coeff.d0)
    return GeneratorMatrix(_as_storage(M, n, dense), "A0", grid, coeff)


@dataclass(frozen=True, eq=False)
class BoundaryOperatorSet:
    """Boundary injection ``E`` (cells x faces), nonlocal read-out ``Phi`` (faces x cells),
    and the resulting generators ``A0`` and ``APhi = A0 + E Phi``."""

    E: np.ndarray | sp.csr_matrix
    Phi: np.ndarray | sp.csr_matrix
    A0: GeneratorMatrix
    APhi: GeneratorMatrix

    @property
    def grid(self) -> Grid:
        return self.A0.grid

    def E_dense(self) -> np.ndarray:
        return self.E.toarray() if sp.issparse(self.E) else np.asarray(self.E)

    def Phi_dense(self) -> np.ndarray:
        return self.Phi.toarray() if sp.issparse(self.Phi) else np.asarray(self.Phi)


def injection_matrix(grid: Grid) -> sp.csr_matrix:
    n, m = grid.n_cells, grid.n_faces
    vals = grid.surface_weights / grid.cell_volume
    return sp.csr_matrix((vals, (grid.adjacent_cells, np.arange(m))), shape=(n, m))


def assemble_boundary_ops(
    grid: Grid,
    coeff: CoefficientField,
    family: BoundaryMeasureFamily,
    *,
    A0: GeneratorMatrix | None = None,
    dense: bool | None = None,
) -> BoundaryOperatorSet:
    if family.grid is not grid and family.weights.shape != (grid.n_faces, grid.n_cells):
        raise ValueError("family was built for a different grid")
    if A0 is None:
        A0 = assemble_A0(grid, coeff, dense=dense)
    E = injection_matrix(grid)
    Phi = sp.csr_matrix(family.weights)
    dense = (not A0.is_sparse) if dense is None else dense
    EPhi = E @ Phi
    if dense:
        APhi_entries = A0.toarray() + EPhi.toarray()
        E_out, Phi_out = E.toarray(), np.array(family.weights)
    else:
        APhi_entries = sp.csr_matrix(A0.entries + EPhi)
        E_out, Phi_out = E, Phi
    APhi = GeneratorMatrix(APhi_entries, "APhi", grid, coeff, family)
    return BoundaryOperatorSet(E_out, Phi_out, A0, APhi)


def assemble_generator(grid, coeff, family, *, dense=None) -> GeneratorMatrix:
    """Shortcut for ``assemble_boundary_ops(...).APhi``."""
    return assemble_boundary_ops(grid, coeff, family, dense=dense).APhi


def maximal_of_constant(grid: Grid, coeff: CoefficientField) -> np.ndarray:
    """Cell values of the maximal (boundary-free) operator applied to the constant 1.

    Equals the discrete ``div b - d0``.
    """
    return discrete_divergence_b(coeff, grid) - coeff.d0


def discrete_B(ops: BoundaryOperatorSet, u, residual) -> np.ndarray:
    """Recover the boundary datum ``Bu = conormal flux + beta u`` on each face.

    ``residual`` holds the cell values of the maximal operator applied to
    ``u`` (for ``u = S_lambda g`` that is ``lambda * u``).  The per-cell flux
    balance ``residual - A0 u = E g`` is solved face by face.  A corner cell
    with two boundary faces only fixes the weighted sum of its two face
    values; the minimum-norm split is returned there.
    """
    grid = ops.grid
    u = np.asarray(u, dtype=float)
    r = np.asarray(residual, dtype=float) - ops.A0 @ u
    w = grid.surface_weights
    cells = grid.adjacent_cells
    wsq = np.zeros(grid.n_cells)
    np.add.at(wsq, cells, w**2)
    return w * grid.cell_volume * r[cells] / wsq[cells]


def boundary_flux_of_constant(grid: Grid, coeff: CoefficientField) -> np.ndarray:
    """``B 1 = beta + b . nu`` on each face, the closed form of ``discrete_B`` at ``u = 1``."""
    return coeff.beta + face_drift(coeff, grid)


def to_matrix_market(A: GeneratorMatrix, path) -> None:
    """Write the generator as a Matrix Market file (debugging aid)."""
    scipy.io.mmwrite(str(path), sp.coo_matrix(A.entries), comment=f"kind={A.kind}")
