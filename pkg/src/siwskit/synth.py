"""Covariance synthesis, PSD certification, and Gaussian path generation.

Sample paths are drawn as X = L u where L is a Cholesky factor of the
covariance matrix (plus a small diagonal jitter, since the example family is
near-singular for large c) and u is white Gaussian noise.  Two noise
symmetries are supported:

* ``real``: u has iid standard normal real entries;
* ``circular``: u = (g1 + i g2)/sqrt(2), giving E[u u*] = I and E[u u^T] = 0,
  i.e. unit variance per complex coordinate and vanishing pseudo-covariance.

The generator is pinned to numpy's PCG64 (``np.random.default_rng``), which is
seedable and platform-independent; outputs record it as "numpy-pcg64".
Sampling is a single vectorized draw from one stream, so results depend only
on the seed, never on scheduling.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import PsdError, ValidationError
from .grids import GeometricGrid
from .models import ModelSpec, covariance_from_logs

__all__ = [
    "RNG_NAME",
    "CovarianceMatrix",
    "SampleBatch",
    "covariance_matrix",
    "certify_psd",
    "cholesky_factor",
    "sample_paths",
    "empirical_covariance",
    "pseudo_covariance",
    "default_time_grid",
]

RNG_NAME = "numpy-pcg64"


@dataclass(frozen=True)
class CovarianceMatrix:
    """Hermitian covariance samples on a geometric grid, with optional PSD certificate."""

    grid: GeometricGrid
    entries: np.ndarray
    min_eigenvalue: float | None = None
    max_eigenvalue: float | None = None
    jitter_applied: float = 0.0

    @property
    def certified(self) -> bool:
        return self.min_eigenvalue is not None


@dataclass(frozen=True)
class SampleBatch:
    """Gaussian sample paths drawn from one covariance factor."""

    grid: GeometricGrid
    paths: np.ndarray  # (n_trials, n) complex
    seed: int
    symmetry: str


def default_time_grid(n: int = 64) -> GeometricGrid:
    """Geometric grid over t in [e^-2, e^2]; covers the visible support of Q."""
    return GeometricGrid.from_log_span(-2.0, 2.0, n)


def covariance_matrix(model: ModelSpec, grid: GeometricGrid) -> CovarianceMatrix:
    """R[j, k] = R_X(t_j, t_k), Hermitian by construction."""
    u = grid.log_points
    R = covariance_from_logs(model, u[:, None], u[None, :])
    # mirror the upper triangle so Hermitian symmetry is exact regardless of rounding
    R = np.triu(R) + np.triu(R, 1).conj().T
    return CovarianceMatrix(grid=grid, entries=R)


def certify_psd(cov: CovarianceMatrix, tol_rel: float = 1e-8) -> CovarianceMatrix:
    """Attach the extreme eigenvalues; raise PsdError when min < -tol_rel * max."""
    eigs = np.linalg.eigvalsh(cov.entries)
    mn, mx = float(eigs[0]), float(eigs[-1])
    if mn < -tol_rel * max(mx, 0.0):
        raise PsdError(
            f"covariance is not PSD: min eigenvalue {mn:.6e} vs max {mx:.6e}",
            min_eigenvalue=mn,
        )
    return dataclasses.replace(cov, min_eigenvalue=mn, max_eigenvalue=mx)


def cholesky_factor(cov: CovarianceMatrix, jitter_rel: float = 1e-10) -> np.ndarray:
    """Lower-triangular L with L L* = R + eps I, eps = jitter_rel * trace/n.

    Certifies the matrix first if no certificate is attached.  The jitter
    keeps near-singular example covariances factorizable; the reconstruction
    error is bounded by ||L L* - R||_F <= 1e-8 ||R||_F + eps sqrt(n).
    """
    if not cov.certified:
        cov = certify_psd(cov)
    n = cov.grid.n
    eps = jitter_rel * float(np.trace(cov.entries).real) / n
    try:
        return np.linalg.cholesky(cov.entries + eps * np.eye(n))
    except np.linalg.LinAlgError as exc:
        raise PsdError(f"Cholesky failed even with jitter {eps:.3e}: {exc}") from exc


def sample_paths(
    L: np.ndarray,
    grid: GeometricGrid,
    n_trials: int,
    seed: int,
    symmetry: str = "circular",
) -> SampleBatch:
    """Draw n_trials paths X = L u; bit-reproducible for a given seed."""
    if n_trials <= 0:
        raise ValidationError(f"n_trials must be positive, got {n_trials}")
    if symmetry not in ("real", "circular"):
        raise ValidationError(f"symmetry must be 'real' or 'circular', got {symmetry!r}")
    L = np.asarray(L)
    n = L.shape[0]
    if L.shape != (n, n) or n != grid.n:
        raise ValidationError(f"factor shape {L.shape} does not match grid n={grid.n}")
    rng = np.random.default_rng(seed)
    if symmetry == "real":
        u = rng.standard_normal((n_trials, n))
    else:
        g = rng.standard_normal((2, n_trials, n))
        u = (g[0] + 1j * g[1]) / np.sqrt(2.0)
    paths = u @ L.T  # row i is L @ u_i
    return SampleBatch(grid=grid, paths=np.asarray(paths, dtype=complex), seed=seed, symmetry=symmetry)


def empirical_covariance(batch: SampleBatch) -> CovarianceMatrix:
    """(1/N) sum_i x_i x_i^*; Hermitian PSD by construction."""
    X = batch.paths
    if X.shape[0] < 1:
        raise ValidationError("empirical covariance needs at least one path")
    R = (X.T @ X.conj()) / X.shape[0]
    R = 0.5 * (R + R.conj().T)
    return CovarianceMatrix(grid=batch.grid, entries=R)


def pseudo_covariance(batch: SampleBatch) -> np.ndarray:
    """(1/N) sum_i x_i x_i^T; converges to zero for circular batches."""
    X = batch.paths
    return (X.T @ X) / X.shape[0]
