"""Per-cell operator coefficients and per-face Robin coefficient.

The differential operator is the divergence-form expression

    Au = -sum_j D_j( sum_i a_ij D_i u + b_j u ) + sum_j c_j D_j u + d0 u

and the generator assembled elsewhere is its negative.  Coefficients are
piecewise constant per cell.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidField, NonElliptic, PecletWarning
from .geometry import Grid


@dataclass(frozen=True, eq=False)
class CoefficientField:
    """Coefficient arrays.

    Parameters
    ----------
    a : ndarray, shape (n_cells, d, d)
        Diffusion matrix ``a[k, i, j] = a_ij`` in cell ``k``.
    b : ndarray, shape (n_cells, d)
        Divergence-form drift.
    c : ndarray, shape (n_cells, d)
        Advective drift.
    d0 : ndarray, shape (n_cells,)
        Reaction coefficient.
    beta : ndarray, shape (n_faces,)
        Local Robin coefficient per boundary face.
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d0: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        for name in ("a", "b", "c", "d0", "beta"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def constant(cls, grid: Grid, a=1.0, b=0.0, c=0.0, d0=0.0, beta=0.0) -> "CoefficientField":
        """Spatially constant coefficients broadcast over ``grid``.

        ``a`` may be a scalar (multiple of the identity) or a d x d matrix;
        ``b`` and ``c`` scalars or d-vectors; ``beta`` a scalar or one value
        per boundary face.
        """
        d, n = grid.dimension, grid.n_cells
        a = np.asarray(a, dtype=float)
        if a.ndim == 0:
            a = a * np.eye(d)
        if a.shape != (d, d):
            raise InvalidField(f"a must be a scalar or a {d}x{d} matrix")
        vecs = []
        for name, v in (("b", b), ("c", c)):
            v = np.asarray(v, dtype=float)
            if v.ndim == 0:
                v = np.full(d, float(v))
            if v.shape != (d,):
                raise InvalidField(f"{name} must be a scalar or a {d}-vector")
            vecs.append(np.tile(v, (n, 1)))
        beta = np.broadcast_to(np.asarray(beta, dtype=float), (grid.n_faces,))
        return cls(
            a=np.tile(a, (n, 1, 1)),
            b=vecs[0],
            c=vecs[1],
            d0=np.full(n, float(d0)),
            beta=beta.copy(),
        )

    @classmethod
    def laplace(cls, grid: Grid, beta=0.0) -> "CoefficientField":
        return cls.constant(grid, beta=beta)

    def with_beta(self, beta) -> "CoefficientField":
        beta = np.broadcast_to(np.asarray(beta, dtype=float), self.beta.shape)
        return CoefficientField(self.a, self.b, self.c, self.d0, beta.copy())

    def with_d0(self, d0) -> "CoefficientField":
        d0 = np.broadcast_to(np.asarray(d0, dtype=float), self.d0.shape)
        return CoefficientField(self.a, self.b, self.c, d0.copy(), self.beta)


@dataclass(frozen=True)
class FieldDiagnostics:
    ellipticity: float
    peclet: float
    has_cross_diffusion: bool
    warnings: list[str] = field(default_factory=list)


def ellipticity_constant(field: CoefficientField) -> float:
    """Smallest eigenvalue of ``sym(a)`` over all cells.

    Raises
    ------
    NonElliptic
        If that eigenvalue is not strictly positive.
    """
    a = field.a
    sym = 0.5 * (a + np.swapaxes(a, -1, -2))
    eta = float(np.min(np.linalg.eigvalsh(sym)))
    if not eta > 0:
        raise NonElliptic(f"smallest eigenvalue of sym(a) is {eta:g} <= 0")
    return eta


def validate(field: CoefficientField, grid: Grid) -> FieldDiagnostics:
    d, n = grid.dimension, grid.n_cells
    expected = {
        "a": (n, d, d),
        "b": (n, d),
        "c": (n, d),
        "d0": (n,),
        "beta": (grid.n_faces,),
    }
    for name, shape in expected.items():
        got = getattr(field, name).shape
        if got != shape:
            raise InvalidField(f"{name} has shape {got}, expected {shape}")
    for name in expected:
        if not np.all(np.isfinite(getattr(field, name))):
            raise InvalidField(f"{name} contains non-finite values")
    if np.any(field.beta < 0):
        bad = np.flatnonzero(field.beta < 0).tolist()
        raise InvalidField(f"beta must be >= 0; negative on faces {bad}")
    eta = ellipticity_constant(field)

    # b and c enter the stencil with opposite signs, hence |b| + |c|.
    h = np.asarray(grid.spacing)
    drift = np.max(np.abs(field.b), axis=0) + np.max(np.abs(field.c), axis=0)
    peclet = float(np.max(drift * h) / (2.0 * eta))
    cross = d > 1 and bool(np.any(field.a[:, 0, 1] != 0) or np.any(field.a[:, 1, 0] != 0))

    notes = []
    if peclet >= 1.0:
        msg = f"mesh Peclet number {peclet:.4g} >= 1: generator may not be Metzler"
        warnings.warn(msg, PecletWarning, stacklevel=2)
        notes.append(msg)
    if cross:
        notes.append("off-diagonal diffusion present: Metzler property is not guaranteed")
    return FieldDiagnostics(eta, peclet, cross, notes)


def face_drift(field: CoefficientField, grid: Grid) -> np.ndarray:
    """Normal drift ``b . nu`` on each boundary face, using the adjacent cell value."""
    cells = grid.adjacent_cells
    return np.einsum("fj,fj->f", field.b[cells], grid.outward_normals)


def discrete_divergence_b(field: CoefficientField, grid: Grid) -> np.ndarray:
    """Finite-volume divergence of ``b``.

    Interior face values are arithmetic means of the two cells, which makes
    this the central difference in interior cells.  On boundary faces the
    trace is the adjacent cell value, so boundary cells see a one-sided
    difference.  This is exactly the divergence that appears in the row sums
    of the assembled generator.
    """
    h = grid.spacing
    vol = grid.cell_volume
    div = np.zeros(grid.n_cells)
    for k in range(grid.n_cells):
        for axis, direction, nb in grid.neighbors(k):
            area = vol / h[axis]
            div[k] += direction * 0.5 * (field.b[k, axis] + field.b[nb, axis]) * area
    bdry = face_drift(field, grid) * grid.surface_weights
    np.add.at(div, grid.adjacent_cells, bdry)
    return div / vol
