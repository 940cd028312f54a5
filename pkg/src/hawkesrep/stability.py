"""Branching-structure analytics: offspring matrix, spectral radius,
stationarity verdicts, and the rank-one diagonalisation statistic."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import MarkPartition, MvParams, TargetSpec

__all__ = [
    "BranchingMatrix",
    "StationarityVerdict",
    "branching_matrix",
    "spectral_radius",
    "j_statistic",
    "is_stationary",
]

_CRITICAL_BAND = 1e-9


@dataclass(frozen=True)
class BranchingMatrix:
    """Expected first-generation offspring counts.

    ``matrix[i, j]`` is the expected number of type-i children of one type-j
    event: cell measure times excitation weight times total kernel mass.
    Column sums are the per-type offspring totals.
    """

    matrix: np.ndarray
    spectral_radius: float

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def column_sums(self) -> np.ndarray:
        return self.matrix.sum(axis=0)


def branching_matrix(params: MvParams, partition: MarkPartition) -> BranchingMatrix:
    """Offspring matrix ``B_ij = mu(A_i) * alpha_ij * mass(g_ij)``."""
    if params.k != partition.k:
        raise ValueError(
            f"params have {params.k} components but partition has {partition.k} cells"
        )
    b = partition.measures[:, None] * params.kernel_mass()
    return BranchingMatrix(b, spectral_radius(b))


def _radius_small(b: np.ndarray) -> float:
    if b.shape == (1, 1):
        return abs(float(b[0, 0]))
    (a, c), (d, e) = b
    disc = (a - e) ** 2 + 4.0 * c * d
    root = math.sqrt(max(disc, 0.0))
    return max(abs((a + e + root) / 2.0), abs((a + e - root) / 2.0))


def _radius_power_iteration(b: np.ndarray, tol: float, max_iter: int) -> float | None:
    """Shifted power iteration; the positive shift makes the dominant
    eigenvalue of a non-negative matrix strictly dominant in modulus."""
    k = b.shape[0]
    shift = max(1.0, float(b.max()))
    x = np.full(k, 1.0 / math.sqrt(k))
    estimate = 0.0
    for _ in range(max_iter):
        y = b @ x + shift * x
        norm = float(np.linalg.norm(y))
        if norm == 0.0:
            return 0.0
        x = y / norm
        new = float(x @ (b @ x))
        if abs(new - estimate) <= tol * max(1.0, abs(new)):
            return max(new, 0.0)
        estimate = new
    return None


def _radius_squaring(b: np.ndarray) -> float:
    """Gelfand fallback: ||B^(2^m)||^(1/2^m) with overflow-safe scaling."""
    a = b.astype(float).copy()
    log_scale = 0.0
    doublings = 40
    for _ in range(doublings):
        a = a @ a
        log_scale *= 2.0
        norm = float(np.abs(a).sum(axis=1).max())
        if norm == 0.0:
            return 0.0
        a /= norm
        log_scale += math.log(norm)
    return math.exp(log_scale / 2.0**doublings)


def spectral_radius(b) -> float:
    """Largest eigenvalue modulus of a non-negative square matrix (K <= 64).

    Solved in closed form for K <= 2; otherwise by shifted power iteration
    (tolerance 1e-10, at most 10^4 iterations) with an iterated-squaring
    norm estimate as the flagged fallback for cycling iterates.
    """
    b = np.asarray(b, dtype=float)
    if b.ndim != 2 or b.shape[0] != b.shape[1]:
        raise ValueError(f"need a square matrix, got shape {b.shape}")
    if b.shape[0] > 64:
        raise ValueError(f"matrices above 64x64 unsupported, got {b.shape[0]}")
    if np.any(b < 0) or not np.all(np.isfinite(b)):
        raise ValueError("entries must be finite and non-negative")
    if b.shape[0] <= 2:
        return _radius_small(b)
    value = _radius_power_iteration(b, tol=1e-12, max_iter=10_000)
    if value is not None:
        return value
    return _radius_squaring(b)


def j_statistic(spec: TargetSpec, partition: MarkPartition) -> float:
    """Rank-one offspring total ``sum_i fbar_i * xibar_i * mu(A_i)`` of the
    cell-averaged target ingredients; equals the representation's spectral
    radius when the excitation matrix is the rank-one cell-mean ansatz."""
    from .represent import cell_averages

    f_bar = cell_averages(spec.density_at, partition)
    xi_bar = cell_averages(spec.productivity_at, partition)
    return float(np.sum(f_bar * xi_bar * partition.measures))


@dataclass(frozen=True)
class StationarityVerdict:
    verdict: str
    spectral_radius: float
    margin: float


def is_stationary(params: MvParams, partition: MarkPartition) -> StationarityVerdict:
    """Classify the representation by the branching spectral radius.

    ``stationary`` when rho < 1, ``supercritical`` when rho > 1, and
    ``critical`` inside the tie band ``|rho - 1| < 1e-9``; the margin is
    ``1 - rho`` in every case.
    """
    rho = branching_matrix(params, partition).spectral_radius
    if abs(rho - 1.0) < _CRITICAL_BAND:
        verdict = "critical"
    elif rho < 1.0:
        verdict = "stationary"
    else:
        verdict = "supercritical"
    return StationarityVerdict(verdict, rho, 1.0 - rho)
