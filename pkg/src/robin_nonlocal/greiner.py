"""Boundary-perturbation calculus for the nonlocal Robin generator.

``S_lambda = R(lambda, A0) E`` solves ``lambda u - A u = 0`` with boundary
datum ``g``; the perturbed resolvent factors as
``R(lambda, APhi) = (I - S_lambda Phi)^{-1} R(lambda, A0)``.  All work here is
dense and meant for desk-scale grids.
"""
from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg as sla
from scipy.linalg.lapack import dgecon

from .assembly import BoundaryOperatorSet
from .exceptions import NeumannDivergence, SingularSystem

RCOND_MIN = 1e-12
NEUMANN_TOL = 1e-12
NEUMANN_MIN_TERMS = 500
DIVERGENCE_RUN = 5


def factorize(M: np.ndarray, what: str = "matrix"):
    """LU factors of ``M`` after a reciprocal-condition guard.

    Raises
    ------
    SingularSystem
        If the 1-norm reciprocal condition estimate is below ``RCOND_MIN``.
    """
    M = np.asarray(M, dtype=float)
    anorm = np.linalg.norm(M, 1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(M, check_finite=True)
    if anorm == 0 or np.any(np.diag(lu) == 0):
        raise SingularSystem(f"{what} is singular")
    rcond, info = dgecon(lu, anorm, norm="1")
    if info != 0 or rcond < RCOND_MIN:
        raise SingularSystem(f"{what} is numerically singular (rcond={rcond:.3e})")
    return lu, piv


def spectral_bound_dense(M: np.ndarray) -> float:
    return float(np.max(np.linalg.eigvals(M).real))


def auto_lambda(ops: BoundaryOperatorSet) -> float:
    """``max(1, 2|s(A0)| + 1, 2|s(APhi)| + 1)``; real and above both spectral bounds."""
    s0 = spectral_bound_dense(ops.A0.toarray())
    s1 = spectral_bound_dense(ops.APhi.toarray())
    return max(1.0, 2.0 * abs(s0) + 1.0, 2.0 * abs(s1) + 1.0)


class ResolventContext:
    """Factorizations and boundary solution operator at a fixed ``lambda``.

    Read-only after construction; the direct factorization of
    ``lambda - APhi`` is computed on first use.
    """

    def __init__(self, ops: BoundaryOperatorSet, lam="auto"):
        self.ops = ops
        self.lam = auto_lambda(ops) if lam == "auto" else float(lam)
        self.A0 = ops.A0.toarray()
        self.APhi = ops.APhi.toarray()
        self.E = ops.E_dense()
        self.Phi = ops.Phi_dense()
        n = self.A0.shape[0]
        self.identity = np.eye(n)
        self._lu0 = factorize(self.lam * self.identity - self.A0, "lambda - A0")
        self.S_lambda = sla.lu_solve(self._lu0, self.E)
        self.S_lambda.setflags(write=False)
        self._luphi = None

    @property
    def size(self) -> int:
        return self.A0.shape[0]

    @property
    def K(self) -> np.ndarray:
        """``S_lambda Phi`` on cells."""
        return self.S_lambda @ self.Phi

    @property
    def neumann_radius(self) -> float:
        # Phi S_lambda (faces x faces) has the same nonzero spectrum as S_lambda Phi
        small = self.Phi @ self.S_lambda
        if not np.any(small):
            return 0.0
        return float(np.max(np.abs(np.linalg.eigvals(small))))

    def resolvent0(self, f) -> np.ndarray:
        return sla.lu_solve(self._lu0, np.asarray(f, dtype=float))

    def direct_factor(self):
        if self._luphi is None:
            self._luphi = factorize(self.lam * self.identity - self.APhi, "lambda - APhi")
        return self._luphi


def make_context(ops: BoundaryOperatorSet, lam="auto") -> ResolventContext:
    return ResolventContext(ops, lam)


def solve_S_lambda(ctx: ResolventContext, g) -> np.ndarray:
    """Cell solution of ``lambda u - A u = 0``, ``Bu = g``."""
    return ctx.S_lambda @ np.asarray(g, dtype=float)


def boundary_read_matrix(ctx: ResolventContext) -> np.ndarray:
    """Faces x cells matrix reading ``Bu`` off elements of ``ker(lambda - A)``.

    It is ``E^+ (lambda - A0)`` with the minimum-norm per-cell inverse of ``E``.
    """
    grid = ctx.ops.grid
    w = grid.surface_weights
    cells = grid.adjacent_cells
    wsq = np.zeros(grid.n_cells)
    np.add.at(wsq, cells, w**2)
    Eplus = np.zeros((grid.n_faces, grid.n_cells))
    Eplus[np.arange(grid.n_faces), cells] = w * grid.cell_volume / wsq[cells]
    return Eplus @ (ctx.lam * ctx.identity - ctx.A0)


def _neumann_series(K: np.ndarray, v: np.ndarray, max_terms: int) -> np.ndarray:
    scale = np.linalg.norm(v, np.inf)
    total = v.copy()
    term = v
    if scale == 0:
        return total
    prev = np.linalg.norm(term, np.inf)
    rising = 0
    for _ in range(max_terms):
        term = K @ term
        size = np.linalg.norm(term, np.inf)
        total = total + term
        if size <= NEUMANN_TOL * scale:
            return total
        rising = rising + 1 if size > prev else 0
        if rising >= DIVERGENCE_RUN:
            raise NeumannDivergence("Neumann series terms grew for 5 consecutive steps")
        prev = size
    raise NeumannDivergence(f"Neumann series did not reach tolerance within {max_terms} terms")


def perturbed_resolvent(ctx: ResolventContext, f, method: str = "direct") -> np.ndarray:
    """Apply ``R(lambda, APhi)`` to ``f``.

    Parameters
    ----------
    method : {"direct", "greiner-lu", "greiner-neumann"}
        ``direct`` solves ``(lambda - APhi) u = f``; the two ``greiner``
        methods first apply ``R(lambda, A0)`` and then invert
        ``I - S_lambda Phi`` by LU factorization or by the Neumann series.
    """
    if method not in ("direct", "greiner-lu", "greiner-neumann"):
        raise ValueError(f"unknown method {method!r}")
    f = np.asarray(f, dtype=float)
    if method == "direct":
        return sla.lu_solve(ctx.direct_factor(), f)
    v = ctx.resolvent0(f)
    if not np.any(ctx.Phi):
        return v
    if method == "greiner-lu":
        lu = factorize(ctx.identity - ctx.K, "I - S_lambda Phi")
        return sla.lu_solve(lu, v)
    radius = ctx.neumann_radius
    if radius >= 1.0:
        raise NeumannDivergence(f"spectral radius of S_lambda Phi is {radius:.4g} >= 1")
    max_terms = max(10 * ctx.ops.grid.n_faces, NEUMANN_MIN_TERMS)
    return _neumann_series(ctx.K, v, max_terms)


def resolvent_identity_residual(ctx: ResolventContext) -> float:
    """Max-entry gap between the direct and the factored perturbed resolvent."""
    direct = sla.lu_solve(ctx.direct_factor(), ctx.identity)
    R0 = sla.lu_solve(ctx._lu0, ctx.identity)
    lu = factorize(ctx.identity - ctx.K, "I - S_lambda Phi")
    factored = sla.lu_solve(lu, R0)
    return float(np.max(np.abs(direct - factored)))


def s_lambda_decay_profile(ops: BoundaryOperatorSet, lambdas) -> list[float]:
    """Operator sup-norms ``||S_lambda Phi||`` for each ``lambda``."""
    return [float(np.linalg.norm(ResolventContext(ops, lam).K, np.inf)) for lam in lambdas]
