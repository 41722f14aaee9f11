"""Time evolution ``u' = A u``: theta scheme and matrix exponential."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import GeneratorMatrix
from .exceptions import IllConditionedEigenbasis, SingularSystem, StabilityViolation
from .greiner import factorize

EIG_DENSE_LIMIT = 2048
EIGENBASIS_COND_MAX = 1e12


def _entries(A):
    return A.entries if isinstance(A, GeneratorMatrix) else A


def _inf_norm(M) -> float:
    if sp.issparse(M):
        return float(abs(M).sum(axis=1).max())
    return float(np.linalg.norm(M, np.inf))


def stability_bound(A, theta: float) -> float:
    """Largest stable ``dt`` for the explicit part; ``inf`` when ``theta >= 1/2``."""
    if theta >= 0.5:
        return math.inf
    norm = _inf_norm(_entries(A))
    return math.inf if norm == 0 else 2.0 / ((1.0 - 2.0 * theta) * norm)


class ThetaStepper:
    """Reusable factorization of ``I - theta dt A`` for repeated steps."""

    def __init__(self, A, dt: float, theta: float = 1.0):
        if not 0.0 <= theta <= 1.0:
            raise ValueError(f"theta must lie in [0, 1], got {theta}")
        if not dt > 0:
            raise ValueError(f"dt must be positive, got {dt}")
        M = _entries(A)
        self.dt, self.theta = float(dt), float(theta)
        if dt > stability_bound(M, theta):
            warnings.warn(
                f"dt={dt:g} exceeds the explicit stability bound {stability_bound(M, theta):.4g}",
                StabilityViolation,
                stacklevel=3,
            )
        n = M.shape[0]
        # increment form (I - theta dt A) (u+ - u) = dt A u keeps ker A fixed exactly
        self._A = M.tocsr() if sp.issparse(M) else np.asarray(M, dtype=float)
        if sp.issparse(M):
            I = sp.identity(n, format="csc")
            if theta > 0:
                try:
                    self._solve = spla.splu(sp.csc_matrix(I - theta * dt * M)).solve
                except RuntimeError as exc:
                    raise SingularSystem(str(exc)) from exc
            else:
                self._solve = lambda x: x
        else:
            I = np.eye(n)
            if theta > 0:
                M = self._A
                lu = factorize(I - theta * dt * M, "I - theta dt A")
                self._solve = lambda x: sla.lu_solve(lu, x)
            else:
                self._solve = lambda x: x

    def step(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return u + self._solve(self.dt * (self._A @ u))


def step_theta(A, u, dt: float, theta: float = 1.0) -> np.ndarray:
    """One step of ``(I - theta dt A) u+ = (I + (1 - theta) dt A) u``."""
    return ThetaStepper(A, dt, theta).step(u)


class ExpmPropagator:
    """Applies ``exp(tA)`` repeatedly for one matrix.

    Uses a dense eigendecomposition when the matrix is small enough and the
    eigenbasis is well conditioned; otherwise falls back to scaling and
    squaring (dense) or ``expm_multiply`` (sparse).
    """

    def __init__(self, A):
        M = _entries(A)
        self.method = "eig"
        self.fallback_reason = None
        self._M = M
        n = M.shape[0]
        if n > EIG_DENSE_LIMIT:
            self.method = "expm_multiply" if sp.issparse(M) else "pade"
            return
        dense = M.toarray() if sp.issparse(M) else np.asarray(M, dtype=float)
        self._M = dense
        w, V = np.linalg.eig(dense)
        cond = np.linalg.cond(V)
        if not np.isfinite(cond) or cond > EIGENBASIS_COND_MAX:
            self.method = "pade"
            self.fallback_reason = f"eigenbasis condition number {cond:.3e}"
            warnings.warn(self.fallback_reason, IllConditionedEigenbasis, stacklevel=2)
            return
        self._w, self._V = w, V
        self._Vlu = sla.lu_factor(V)

    def apply(self, u0, t: float) -> np.ndarray:
        u0 = np.asarray(u0, dtype=float)
        if t == 0:
            return u0.copy()
        if self.method == "eig":
            coeffs = sla.lu_solve(self._Vlu, u0.astype(complex))
            return (self._V @ (np.exp(t * self._w) * coeffs)).real
        if self.method == "pade":
            return sla.expm(t * np.asarray(self._M)) @ u0
        return spla.expm_multiply(t * self._M, u0)


def expm_apply(A, u0, t: float) -> np.ndarray:
    """``exp(tA) u0``."""
    return ExpmPropagator(A).apply(u0, t)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    scheme: str
    dt: float
    theta: float | None = None

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def _n_steps(t_end: float, dt: float) -> int:
    if not t_end > 0 or not dt > 0:
        raise ValueError("t_end and dt must be positive")
    return max(1, math.ceil(t_end / dt - 1e-9))


def evolve(A, u0, t_end: float, dt: float, theta: float = 1.0, record_stride: int = 1,
           scheme: str = "theta") -> Trajectory:
    """Integrate from ``t = 0`` to the first grid time ``>= t_end``.

    ``scheme="expm"`` samples the exact flow on the same time grid.
    """
    n = _n_steps(t_end, dt)
    stride = max(1, int(record_stride))
    u = np.array(u0, dtype=float)
    times, states = [0.0], [u.copy()]
    if scheme == "theta":
        stepper = ThetaStepper(A, dt, theta)
        for k in range(1, n + 1):
            u = stepper.step(u)
            if k % stride == 0 or k == n:
                times.append(k * dt)
                states.append(u)
        return Trajectory(np.array(times), np.array(states), "theta", float(dt), float(theta))
    if scheme == "expm":
        prop = ExpmPropagator(A)
        for k in range(1, n + 1):
            if k % stride == 0 or k == n:
                times.append(k * dt)
                states.append(prop.apply(u, k * dt))
        return Trajectory(np.array(times), np.array(states), "expm", float(dt), None)
    raise ValueError(f"unknown scheme {scheme!r}")


@dataclass(frozen=True)
class MarkovDiagnostics:
    """Extremes of ``T(t)1`` and of a nonnegative test orbit.

    ``max_T1_minus_1`` is signed: ``max_t max_x (T(t)1 - 1)``.
    """

    times: np.ndarray
    max_T1_minus_1: float
    max_abs_T1_minus_1: float
    min_T1: float
    min_state: float
    t1_max_series: np.ndarray
    t1_min_series: np.ndarray
    mass_series: np.ndarray

    @property
    def growing(self) -> bool:
        s = self.t1_max_series
        return bool(s[-1] > 1.0 and np.all(np.diff(s[1:]) > 0))

    @property
    def decaying(self) -> bool:
        s = self.t1_max_series
        return bool(s[-1] < 1.0 and np.all(np.diff(s[1:]) < 0))


def default_test_function(grid) -> np.ndarray:
    """Indicator of the cells with first coordinate below the domain midpoint."""
    x = grid.cell_centers[:, 0]
    return (x < 0.5 * grid.lengths[0]).astype(float)


def markov_diagnostics(A: GeneratorMatrix, t_end: float, dt: float, theta: float = 1.0,
                       f=None, record_stride: int = 1) -> MarkovDiagnostics:
    grid = A.grid
    if f is None:
        f = default_test_function(grid)
    ones = evolve(A, np.ones(A.size), t_end, dt, theta, record_stride)
    test = evolve(A, f, t_end, dt, theta, record_stride)
    dev = ones.states - 1.0
    return MarkovDiagnostics(
        times=ones.times,
        max_T1_minus_1=float(dev.max()),
        max_abs_T1_minus_1=float(np.abs(dev).max()),
        min_T1=float(ones.states.min()),
        min_state=float(test.states.min()),
        t1_max_series=ones.states.max(axis=1),
        t1_min_series=ones.states.min(axis=1),
        mass_series=test.states.sum(axis=1) * grid.cell_volume,
    )
