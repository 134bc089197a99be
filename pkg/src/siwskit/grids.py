"""Geometric/log-domain grids and Mellin transforms along the imaginary line.

Everything scale-invariant in this package lives on a geometric time grid
t_k = t_min * r^k, so that dilation by a power of r is an exact index shift.
The Mellin transform along the line s = i*2*pi*theta,

    (M g)(i2*pi*theta) = integral g(t) t^(-i2*pi*theta - 1) dt,

becomes an ordinary Fourier-type integral of g(e^u) after u = ln t, and is
evaluated with uniform weights h = ln r in u.  Uniform weights agree with the
trapezoid rule up to the grid's edge values (callers are expected to choose
grids where the integrand has decayed below ~1e-12 of its peak; see
``check_edge_decay``), and they make a forward/inverse pair on period-matched
grids an exact discrete orthogonality, which the time-frequency transforms
rely on.

The inverse transform g(t) = integral (M g)(i2*pi*theta) t^(i2*pi*theta)
d(theta) is discretized the same way with uniform weights in theta.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import GridError, QuadratureWarning, ValidationError

__all__ = [
    "GeometricGrid",
    "UniformTimeGrid",
    "FrequencyGrid",
    "MellinLine",
    "mellin_forward",
    "mellin_inverse",
    "partial_mellin",
    "edge_decay_ok",
    "check_edge_decay",
]


@dataclass(frozen=True)
class GeometricGrid:
    """Strictly increasing geometric time grid t_k = t_min * ratio^k."""

    t_min: float
    ratio: float
    n: int

    def __post_init__(self):
        if not (np.isfinite(self.t_min) and self.t_min > 0):
            raise GridError(f"grid origin must be positive, got t_min={self.t_min}")
        if not (np.isfinite(self.ratio) and self.ratio > 1.0):
            raise GridError(f"grid ratio must exceed 1, got ratio={self.ratio}")
        if self.n < 1:
            raise GridError(f"grid needs at least one point, got n={self.n}")

    @classmethod
    def from_log_span(cls, u_lo: float, u_hi: float, n: int) -> "GeometricGrid":
        """Grid with n points whose logarithms span [u_lo, u_hi] evenly."""
        if n < 2 or u_hi <= u_lo:
            raise GridError("log span needs u_hi > u_lo and n >= 2")
        step = (u_hi - u_lo) / (n - 1)
        return cls(t_min=float(np.exp(u_lo)), ratio=float(np.exp(step)), n=n)

    @property
    def log_step(self) -> float:
        return float(np.log(self.ratio))

    @property
    def log_points(self) -> np.ndarray:
        return np.log(self.t_min) + self.log_step * np.arange(self.n)

    @property
    def points(self) -> np.ndarray:
        return np.exp(self.log_points)


@dataclass(frozen=True)
class UniformTimeGrid:
    """Uniform (linear) time axis; used only by the classical-WVS baseline."""

    t_min: float
    step: float
    n: int

    def __post_init__(self):
        if self.step <= 0 or self.n < 1:
            raise GridError("uniform grid needs step > 0 and n >= 1")

    @property
    def points(self) -> np.ndarray:
        return self.t_min + self.step * np.arange(self.n)


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform frequency axis centered on ``center``.

    Houses both the SIWS frequency xi and the ambiguity frequency theta.
    Points are center + (k - (n-1)/2) * step for k = 0..n-1.
    """

    center: float
    step: float
    n: int

    def __post_init__(self):
        if not (np.isfinite(self.step) and self.step > 0):
            raise GridError(f"frequency step must be positive, got {self.step}")
        if self.n < 1:
            raise GridError(f"frequency grid needs at least one point, got n={self.n}")

    @classmethod
    def from_span(cls, lo: float, hi: float, n: int) -> "FrequencyGrid":
        if n < 2 or hi <= lo:
            raise GridError("frequency span needs hi > lo and n >= 2")
        return cls(center=0.5 * (lo + hi), step=(hi - lo) / (n - 1), n=n)

    @property
    def points(self) -> np.ndarray:
        return self.center + self.step * (np.arange(self.n) - 0.5 * (self.n - 1))


@dataclass(frozen=True)
class MellinLine:
    """Samples of a Mellin transform along s = line_offset + i*2*pi*theta."""

    grid: FrequencyGrid
    values: np.ndarray
    line_offset: float = 0.0

    def __post_init__(self):
        if len(self.values) != self.grid.n:
            raise GridError(
                f"line has {len(self.values)} values for a {self.grid.n}-point grid"
            )


def forward_matrix(grid: GeometricGrid, freqs: FrequencyGrid) -> np.ndarray:
    """(n_t, n_freq) matrix F with (M g)(i2*pi*theta_j) = sum_k g_k F[k, j]."""
    u = grid.log_points
    th = freqs.points
    return np.exp(-2j * np.pi * np.outer(u, th)) * grid.log_step


def inverse_matrix(freqs: FrequencyGrid, grid: GeometricGrid) -> np.ndarray:
    """(n_freq, n_t) matrix V with g_k = sum_j line_j V[j, k]."""
    u = grid.log_points
    th = freqs.points
    return np.exp(2j * np.pi * np.outer(th, u)) * freqs.step


def mellin_forward(samples: np.ndarray, grid: GeometricGrid, out: FrequencyGrid) -> MellinLine:
    """Mellin transform of samples on a geometric grid, evaluated on ``out``.

    Linear in the samples; quadrature error is governed by the edge decay of
    the integrand (use :func:`check_edge_decay`).
    """
    samples = np.asarray(samples)
    if grid.n < 2:
        raise GridError("mellin_forward needs a grid with at least 2 points")
    if len(samples) != grid.n:
        raise GridError(f"{len(samples)} samples on a {grid.n}-point grid")
    if not np.all(np.isfinite(samples.real)) or not np.all(np.isfinite(samples.imag)):
        raise ValidationError("samples contain NaN or Inf")
    values = np.asarray(samples, dtype=complex) @ forward_matrix(grid, out)
    return MellinLine(grid=out, values=values, line_offset=0.0)


def mellin_inverse(line: MellinLine, out: GeometricGrid) -> np.ndarray:
    """Inverse transform of a Mellin line back onto a geometric grid."""
    if not np.all(np.isfinite(line.values.real)) or not np.all(np.isfinite(line.values.imag)):
        raise ValidationError("line contains NaN or Inf")
    if line.line_offset != 0.0:
        raise ValidationError("only the line offset 0 (pure imaginary axis) is supported")
    return np.asarray(line.values, dtype=complex) @ inverse_matrix(line.grid, out)


def partial_mellin(
    matrix: np.ndarray,
    axis: int,
    grid_in,
    grid_out,
    inverse: bool = False,
) -> np.ndarray:
    """Apply the 1-D Mellin transform along one axis of a 2-D array.

    ``axis`` is 1 or 2 (first or second index).  Forward maps a GeometricGrid
    axis onto a FrequencyGrid; ``inverse=True`` maps a FrequencyGrid axis back
    onto a GeometricGrid.  Consistent with the 1-D operations applied per
    slice.
    """
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.ndim != 2:
        raise GridError(f"partial_mellin expects a 2-D array, got ndim={matrix.ndim}")
    if axis not in (1, 2):
        raise GridError(f"axis must be 1 or 2, got {axis}")
    size = matrix.shape[axis - 1]
    if inverse:
        if not isinstance(grid_in, FrequencyGrid) or not isinstance(grid_out, GeometricGrid):
            raise GridError("inverse partial transform maps FrequencyGrid -> GeometricGrid")
        op = inverse_matrix(grid_in, grid_out)
    else:
        if not isinstance(grid_in, GeometricGrid) or not isinstance(grid_out, FrequencyGrid):
            raise GridError("forward partial transform maps GeometricGrid -> FrequencyGrid")
        op = forward_matrix(grid_in, grid_out)
    if size != op.shape[0]:
        raise GridError(f"axis {axis} has {size} points, transform grid has {op.shape[0]}")
    if axis == 1:
        return op.T @ matrix
    return matrix @ op


def edge_decay_ok(values: np.ndarray, rel: float = 1e-12) -> bool:
    """True when both edge samples are below ``rel`` times the peak magnitude."""
    mags = np.abs(np.asarray(values))
    peak = mags.max()
    if peak == 0.0:
        return True
    return bool(max(mags.flat[0], mags.flat[-1]) <= rel * peak)


def check_edge_decay(values: np.ndarray, label: str = "integrand", rel: float = 1e-12) -> None:
    """Warn when a quadrature grid truncates visible mass at its edges."""
    if not edge_decay_ok(values, rel):
        warnings.warn(
            f"{label} has not decayed below {rel:g} of its peak at the grid edges; "
            "quadrature may be truncated (widen the grid)",
            QuadratureWarning,
            stacklevel=2,
        )
