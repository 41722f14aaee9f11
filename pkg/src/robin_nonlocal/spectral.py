"""Spectral bound, Perron eigenpair, stationary projection and long-time classification."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .assembly import GeneratorMatrix, is_metzler
from .evolution import Trajectory
from .exceptions import (
    DefectivePrincipalEigenvalue,
    InsufficientDecay,
    NotComparable,
    NotEquilibrium,
)

DENSE_EIG_LIMIT = 8192
CLASS_TOL = 1e-9
CLUSTER_TOL = 1e-7
NOISE_FLOOR = 1e-10


def _dense(A) -> np.ndarray:
    M = A.entries if isinstance(A, GeneratorMatrix) else A
    return M.toarray() if sp.issparse(M) else np.asarray(M, dtype=float)


def is_irreducible(A) -> bool:
    """Strong connectivity of the graph of nonzero off-diagonal entries."""
    M = _dense(A)
    n = M.shape[0]
    if n == 1:
        return True
    adj = (M != 0) & ~np.eye(n, dtype=bool)
    ncomp, _ = connected_components(sp.csr_matrix(adj), directed=True, connection="strong")
    return ncomp == 1


@dataclass(frozen=True)
class AsymptoticClass:
    kind: str  # "ExponentialDecay" | "Equilibrium" | "BlowUp"
    rate: float

    def __str__(self):
        return f"{self.kind}(rate={self.rate:.6g})"


@dataclass(frozen=True, eq=False)
class SpectralReport:
    """Dense spectral data of a generator.

    ``principal_left`` is a density with respect to the cell volume:
    ``P f = u * sum(phi * f * vol)`` and ``sum(phi * u * vol) = 1``.
    """

    eigenvalues: np.ndarray
    spectral_bound: float
    gap: float
    principal_right: np.ndarray
    principal_left: np.ndarray
    cell_volume: float
    asymptotic_class: AsymptoticClass
    irreducible: bool
    metzler: bool
    norm: float

    @property
    def class_tolerance(self) -> float:
        return CLASS_TOL * self.norm

    def projection(self) -> np.ndarray:
        return np.outer(self.principal_right, self.principal_left * self.cell_volume)

    def project(self, f) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        return self.principal_right * float(np.sum(self.principal_left * f) * self.cell_volume)

    def top(self, k: int = 5) -> np.ndarray:
        return self.eigenvalues[:k]


def _normalize_right(v: np.ndarray) -> np.ndarray:
    v = v / v[np.argmax(np.abs(v))]
    return np.real(v)


def eig_report(A, cell_volume: float | None = None) -> SpectralReport:
    """Dense nonsymmetric eigen-analysis.

    Raises
    ------
    DefectivePrincipalEigenvalue
        If more than one eigenvalue lies within ``1e-7 * ||A||`` of the
        spectral bound; the rank-one projection would then be wrong.
    """
    if cell_volume is None:
        cell_volume = A.grid.cell_volume if isinstance(A, GeneratorMatrix) else 1.0
    M = _dense(A)
    n = M.shape[0]
    if n > DENSE_EIG_LIMIT:
        raise ValueError(f"dense eigen-analysis is capped at {DENSE_EIG_LIMIT} cells")
    norm = float(np.linalg.norm(M, np.inf))
    w, V = np.linalg.eig(M)
    order = np.lexsort((-w.imag, -w.real))
    w, V = w[order], V[:, order]
    s = float(w[0].real)

    cluster = np.abs(w - w[0]) <= CLUSTER_TOL * max(norm, 1.0)
    if cluster.sum() > 1:
        raise DefectivePrincipalEigenvalue(
            f"{int(cluster.sum())} eigenvalues cluster at the spectral bound {s:.6g}"
        )
    rest = w[~cluster]
    gap = float(s - rest.real.max()) if rest.size else float("inf")

    u = _normalize_right(V[:, 0])
    wl, U = np.linalg.eig(M.T)
    j = int(np.argmin(np.abs(wl - w[0])))
    psi = np.real(U[:, j] / U[np.argmax(np.abs(U[:, j])), j])
    phi = psi / cell_volume
    phi = phi / float(np.sum(phi * u) * cell_volume)

    tol = CLASS_TOL * norm
    if s < -tol:
        klass = AsymptoticClass("ExponentialDecay", -s)
    elif s > tol:
        klass = AsymptoticClass("BlowUp", s)
    else:
        klass = AsymptoticClass("Equilibrium", gap)
    return SpectralReport(
        eigenvalues=w,
        spectral_bound=s,
        gap=gap,
        principal_right=u,
        principal_left=phi,
        cell_volume=float(cell_volume),
        asymptotic_class=klass,
        irreducible=is_irreducible(M),
        metzler=is_metzler(M),
        norm=norm,
    )


def stationary_projection(report: SpectralReport) -> np.ndarray:
    if report.asymptotic_class.kind != "Equilibrium":
        raise NotEquilibrium(f"asymptotic class is {report.asymptotic_class.kind}")
    return report.projection()


def _log_slope(times, values) -> float:
    half = len(times) // 2
    t, v = np.asarray(times[half:]), np.asarray(values[half:])
    keep = v > 0
    if keep.sum() < 2:
        raise InsufficientDecay("not enough positive samples to fit a rate")
    slope, _ = np.polyfit(t[keep], np.log(v[keep]), 1)
    return float(slope)


def convergence_rate_fit(trajectory: Trajectory, P=None, decay_ratio: float = 1e-3) -> float:
    """Exponential rate of ``||u(t) - P u0||_inf`` over the last half of the trajectory.

    ``P`` defaults to zero (decay to the origin).

    Raises
    ------
    InsufficientDecay
        If the final deviation is not below ``decay_ratio`` times the initial one.
    """
    u0 = trajectory.states[0]
    target = np.zeros_like(u0) if P is None else np.asarray(P) @ u0
    dev = np.max(np.abs(trajectory.states - target), axis=1)
    scale = max(np.max(np.abs(u0)), 1e-300)
    if dev[0] <= 1e-12 * scale or dev[-1] >= decay_ratio * dev[0]:
        raise InsufficientDecay(
            f"deviation went from {dev[0]:.3e} to {dev[-1]:.3e}; need a {decay_ratio:g} reduction"
        )
    # samples near the rounding floor carry no rate information
    above = dev > NOISE_FLOOR * dev[0]
    stop = len(dev) if above.all() else int(np.argmin(above))
    return max(0.0, -_log_slope(trajectory.times[:stop], dev[:stop]))


def growth_rate_fit(trajectory: Trajectory) -> float:
    """Exponential growth rate of ``||u(t)||_inf`` over the last half of the trajectory."""
    return _log_slope(trajectory.times, np.max(np.abs(trajectory.states), axis=1))


@dataclass(frozen=True)
class MonotonicityVerdict:
    s_base: float
    s_perturbed: float
    identical: bool
    strict_expected: bool
    holds: bool

    @property
    def increase(self) -> float:
        return self.s_perturbed - self.s_base


def spectral_monotonicity_check(A_base, A_perturbed, margin: float | None = None) -> MonotonicityVerdict:
    """Compare spectral bounds of two ordered Metzler matrices.

    ``holds`` means ``s(base) <= s(perturbed)``, and strictly (by more than
    ``margin``) when the base is irreducible and the matrices differ.

    Raises
    ------
    NotComparable
        If either matrix is not Metzler or ``A_perturbed >= A_base`` fails entrywise.
    """
    B, P = _dense(A_base), _dense(A_perturbed)
    if B.shape != P.shape:
        raise NotComparable("matrices have different shapes")
    if not (is_metzler(B) and is_metzler(P)):
        raise NotComparable("both matrices must be Metzler")
    if np.any(P < B):
        raise NotComparable("A_perturbed >= A_base fails entrywise")
    if margin is None:
        margin = 1e-10 * max(np.linalg.norm(P, np.inf), 1.0)
    sb = float(np.max(np.linalg.eigvals(B).real))
    sp_ = float(np.max(np.linalg.eigvals(P).real))
    identical = bool(np.array_equal(B, P))
    strict = (not identical) and is_irreducible(B)
    if strict:
        holds = sp_ - sb > margin
    else:
        holds = sp_ >= sb - margin
    return MonotonicityVerdict(sb, sp_, identical, strict, bool(holds))
