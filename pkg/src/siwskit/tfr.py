"""Scale-invariant Wigner/ambiguity transforms and spectrum surfaces.

Discretization: on a geometric grid t_k = t_min r^k the multiplicative lag is
taken on the lattice tau_m = r^(2m), m = -M..M, so that both half-power
arguments land exactly on the grid: t_k sqrt(tau_m) = t_{k+m} and
t_k / sqrt(tau_m) = t_{k-m}.  The discrete scale-invariant Wigner distribution
of a path x is then

    W(t_k, xi) = sum_m x[k+m] conj(x[k-m]) tau_m^(-i 2 pi xi) * (2 ln r),

with terms outside the grid treated as zero (rectangular lag window; this
biases points within max_lag of the grid edges, which is why wide grids with
interior evaluation are the norm for statistics).  The scale-invariant
ambiguity transform replaces the lag sum by a Mellin sum over t at a fixed
lag, and the two are exact discrete Mellin duals when the frequency grids are
the period-matched ("canonical") ones produced by :func:`canonical_theta_grid`
and :func:`canonical_xi_grid`.

The xi axis must respect |xi| <= 1/(4 ln r), the alias limit of
tau_m^(-i 2 pi xi) on the lag lattice.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import GridError, ValidationError
from .grids import (
    FrequencyGrid,
    GeometricGrid,
    UniformTimeGrid,
    check_edge_decay,
    forward_matrix,
    inverse_matrix,
)
from .models import LsspParams, ModelSpec, slice_from_logs

__all__ = [
    "TFMatrix",
    "AmbiguityMatrix",
    "lag_grid",
    "canonical_theta_grid",
    "canonical_xi_grid",
    "xi_limit",
    "siwd",
    "siaf",
    "cohen_estimate",
    "true_siws",
    "esiaf",
    "classical_wvs_estimate",
]

# roles carried in file metadata
ROLE_SIWD = "SIWD"
ROLE_SIWS_TRUE = "SIWS_true"
ROLE_ESTIMATE = "ESTIMATE"
ROLE_TF_KERNEL = "TF_KERNEL"
ROLE_WVS = "WVS_classical"
ROLE_SIAF = "SIAF"
ROLE_ESIAF = "ESIAF"
ROLE_E_ABS2 = "E_ABS2"
ROLE_KERNEL = "KERNEL"

# integrands are resolved down to ~1e-15 of their peak
_DECAY = 34.5


@dataclass(frozen=True)
class TFMatrix:
    """Complex surface on (time grid) x (frequency grid)."""

    time_grid: Union[GeometricGrid, UniformTimeGrid]
    freq_grid: FrequencyGrid
    values: np.ndarray
    role: str

    def __post_init__(self):
        if self.values.shape != (self.time_grid.n, self.freq_grid.n):
            raise GridError(
                f"TF values shape {self.values.shape} does not match grids "
                f"({self.time_grid.n}, {self.freq_grid.n})"
            )


@dataclass(frozen=True)
class AmbiguityMatrix:
    """Complex surface on (theta grid) x (tau grid)."""

    theta_grid: FrequencyGrid
    tau_grid: GeometricGrid
    values: np.ndarray
    role: str

    def __post_init__(self):
        if self.values.shape != (self.theta_grid.n, self.tau_grid.n):
            raise GridError(
                f"ambiguity values shape {self.values.shape} does not match grids "
                f"({self.theta_grid.n}, {self.tau_grid.n})"
            )


# -- grid helpers ----------------------------------------------------------


def default_max_lag(grid: GeometricGrid) -> int:
    return (grid.n - 1) // 2


def _check_max_lag(grid: GeometricGrid, max_lag: int) -> int:
    if max_lag is None:
        max_lag = default_max_lag(grid)
    if not (1 <= max_lag <= (grid.n - 1) // 2):
        raise ValidationError(
            f"max_lag must lie in [1, (n-1)//2] = [1, {(grid.n - 1) // 2}], got {max_lag}"
        )
    return max_lag


def lag_grid(grid: GeometricGrid, max_lag: int) -> GeometricGrid:
    """The lag lattice tau_m = r^(2m), m = -max_lag..max_lag."""
    max_lag = _check_max_lag(grid, max_lag)
    r2 = grid.ratio**2
    return GeometricGrid(t_min=r2 ** (-max_lag), ratio=r2, n=2 * max_lag + 1)


def is_lag_grid(tau_grid: GeometricGrid, grid: GeometricGrid) -> bool:
    if tau_grid.n % 2 == 0:
        return False
    M = (tau_grid.n - 1) // 2
    ref = lag_grid(grid, M) if M <= (grid.n - 1) // 2 else None
    if ref is None:
        return False
    return np.isclose(tau_grid.ratio, ref.ratio, rtol=1e-12) and np.isclose(
        tau_grid.t_min, ref.t_min, rtol=1e-9
    )


def canonical_theta_grid(grid: GeometricGrid, n_theta: int | None = None) -> FrequencyGrid:
    """Theta grid spanning one period 1/ln(r); exact Mellin-pair orthogonality."""
    n_theta = grid.n if n_theta is None else n_theta
    if n_theta < grid.n:
        raise GridError(f"canonical theta grid needs >= {grid.n} bins, got {n_theta}")
    return FrequencyGrid(center=0.0, step=1.0 / (grid.log_step * n_theta), n=n_theta)


def canonical_xi_grid(grid: GeometricGrid, max_lag: int, n_xi: int | None = None) -> FrequencyGrid:
    """Xi grid spanning one period 1/(2 ln r) of the lag lattice."""
    max_lag = _check_max_lag(grid, max_lag)
    m = 2 * max_lag + 1
    n_xi = m if n_xi is None else n_xi
    if n_xi < m:
        raise GridError(f"canonical xi grid needs >= {m} bins, got {n_xi}")
    return FrequencyGrid(center=0.0, step=1.0 / (2.0 * grid.log_step * n_xi), n=n_xi)


def xi_limit(grid: GeometricGrid) -> float:
    """Alias bound for the xi axis on this grid's lag lattice."""
    return 1.0 / (4.0 * grid.log_step)


def _check_xi(grid: GeometricGrid, xi_grid: FrequencyGrid) -> None:
    bound = xi_limit(grid) * (1.0 + 1e-12)
    worst = np.abs(xi_grid.points).max()
    if worst > bound:
        raise GridError(
            f"|xi| up to {worst:.6g} exceeds the alias limit 1/(4 ln r) = {xi_limit(grid):.6g}"
        )


# -- bilinear transforms ---------------------------------------------------


def lag_products(path: np.ndarray, max_lag: int) -> np.ndarray:
    """z[m + max_lag, k] = x[k+m] conj(x[k-m]), zero outside the grid."""
    x = np.asarray(path, dtype=complex)
    n = len(x)
    z = np.zeros((2 * max_lag + 1, n), dtype=complex)
    for m in range(-max_lag, max_lag + 1):
        lo, hi = abs(m), n - abs(m)
        if lo < hi:
            z[m + max_lag, lo:hi] = x[lo + m : hi + m] * np.conj(x[lo - m : hi - m])
    return z


def _xi_kernel(grid: GeometricGrid, max_lag: int, xi_grid: FrequencyGrid) -> np.ndarray:
    """(2M+1, n_xi) matrix tau_m^(-i 2 pi xi) * 2 ln r."""
    v = 2.0 * grid.log_step * np.arange(-max_lag, max_lag + 1)
    return np.exp(-2j * np.pi * np.outer(v, xi_grid.points)) * (2.0 * grid.log_step)


def siwd(
    grid: GeometricGrid,
    path: np.ndarray,
    xi_grid: FrequencyGrid,
    max_lag: int | None = None,
) -> TFMatrix:
    """Discrete scale-invariant Wigner distribution of one path.

    Real up to rounding for any complex path (conjugate lag symmetry).
    """
    if len(path) != grid.n:
        raise GridError(f"path length {len(path)} does not match grid n={grid.n}")
    max_lag = _check_max_lag(grid, max_lag)
    _check_xi(grid, xi_grid)
    z = lag_products(path, max_lag)
    values = z.T @ _xi_kernel(grid, max_lag, xi_grid)
    return TFMatrix(time_grid=grid, freq_grid=xi_grid, values=values, role=ROLE_SIWD)


def siaf(
    grid: GeometricGrid,
    path: np.ndarray,
    theta_grid: FrequencyGrid,
    max_lag: int | None = None,
) -> AmbiguityMatrix:
    """Scale-invariant ambiguity transform; Mellin dual of :func:`siwd`."""
    if len(path) != grid.n:
        raise GridError(f"path length {len(path)} does not match grid n={grid.n}")
    max_lag = _check_max_lag(grid, max_lag)
    z = lag_products(path, max_lag)
    values = (z @ forward_matrix(grid, theta_grid)).T  # (n_theta, 2M+1)
    return AmbiguityMatrix(
        theta_grid=theta_grid, tau_grid=lag_grid(grid, max_lag), values=values, role=ROLE_SIAF
    )


def cohen_estimate(
    grid: GeometricGrid,
    path: np.ndarray,
    kernel: AmbiguityMatrix,
    xi_grid: FrequencyGrid,
) -> TFMatrix:
    """Kernel-smoothed spectrum estimate: transform back A(theta,tau)*phi.

    The kernel's tau grid must be the lag lattice of ``grid``; its theta grid
    sets the ambiguity frequency sampling.  With phi identically 1 on a
    canonical theta grid this reproduces :func:`siwd` exactly.
    """
    if not is_lag_grid(kernel.tau_grid, grid):
        raise GridError("kernel tau grid is not the lag lattice of the time grid")
    max_lag = (kernel.tau_grid.n - 1) // 2
    _check_xi(grid, xi_grid)
    amb = siaf(grid, path, kernel.theta_grid, max_lag)
    weighted = amb.values * kernel.values
    # theta -> t (inverse Mellin), then lag -> xi
    z_smooth = inverse_matrix(kernel.theta_grid, grid).T @ weighted  # (n_t, 2M+1)
    values = z_smooth @ _xi_kernel(grid, max_lag, xi_grid)
    return TFMatrix(time_grid=grid, freq_grid=xi_grid, values=values, role=ROLE_ESTIMATE)


# -- expected surfaces -----------------------------------------------------


def _chirp_rate_bound(model: ModelSpec) -> float:
    return max((abs(ch.a) for _, ch in model.components), default=0.0)


def _chirp_start_bound(model: ModelSpec) -> float:
    return max((abs(ch.b) for _, ch in model.components), default=0.0)


def _base_log_span(model: ModelSpec, pad: float = 0.0) -> tuple[float, float]:
    """Log-time span outside which every Q_j factor is below ~1e-15 of peak."""
    half = np.sqrt(2.0 * _DECAY)  # exp(-(u-2H)^2/2) decay radius
    centers = [
        2.0 * p.H if isinstance(p, LsspParams) else 1.0 for p, _ in model.components
    ]
    return min(centers) - half - pad, max(centers) + half + pad


def _ratio_log_halfwidth(model: ModelSpec, pad: float = 0.0) -> float:
    """Half-width in ln(tau) covering every C_j factor down to ~1e-15."""
    widths = [
        np.sqrt(8.0 * _DECAY / (p.c if isinstance(p, LsspParams) else 1.0))
        for p, _ in model.components
    ]
    return max(widths) + pad


def _quad_step(fmax: float) -> float:
    """Log-domain spacing resolving oscillations up to frequency fmax."""
    return min(0.05, 0.2 / max(fmax, 1.0))


def _log_quad_grid(lo: float, hi: float, step: float) -> np.ndarray:
    n = max(int(np.ceil((hi - lo) / step)) + 1, 9)
    return np.linspace(lo, hi, n)


def siws_values(
    model: ModelSpec,
    log_times: np.ndarray,
    xi_values: np.ndarray,
    tau_log_grid: np.ndarray | None = None,
) -> np.ndarray:
    """Expected Wigner surface W(t, xi) = (M_tau R)(i 2 pi xi) by quadrature."""
    log_times = np.atleast_1d(np.asarray(log_times, dtype=float))
    xi_values = np.atleast_1d(np.asarray(xi_values, dtype=float))
    if tau_log_grid is None:
        u_abs = np.abs(log_times).max()
        fmax = np.abs(xi_values).max() + _chirp_rate_bound(model) * (
            u_abs + _chirp_start_bound(model)
        ) / (2.0 * np.pi)
        half = _ratio_log_halfwidth(model)
        tau_log_grid = _log_quad_grid(-half, half, _quad_step(fmax))
    if len(tau_log_grid) < 2:
        raise GridError("SIWS quadrature needs at least 2 tau points")
    h = tau_log_grid[1] - tau_log_grid[0]
    S = slice_from_logs(model, log_times[:, None], tau_log_grid[None, :])
    check_edge_decay(np.abs(S).max(axis=0), "SIWS tau integrand")
    E = np.exp(-2j * np.pi * np.outer(tau_log_grid, xi_values)) * h
    return S @ E


def true_siws(
    model: ModelSpec,
    time_grid: GeometricGrid,
    xi_grid: FrequencyGrid,
    tau_grid: GeometricGrid | None = None,
) -> TFMatrix:
    """True scale-invariant Wigner spectrum of the model on a TF grid.

    A pure LSSP factorizes as Q(t) * (M C)(i 2 pi xi); the general case
    integrates the covariance slice over a log-tau quadrature grid
    (auto-chosen wide enough for the model unless ``tau_grid`` is given).
    """
    tau_logs = None if tau_grid is None else tau_grid.log_points
    values = siws_values(model, time_grid.log_points, xi_grid.points, tau_logs)
    return TFMatrix(time_grid=time_grid, freq_grid=xi_grid, values=values, role=ROLE_SIWS_TRUE)


def esiaf(
    model: ModelSpec,
    theta_grid: FrequencyGrid,
    tau_grid: GeometricGrid,
    base_log_grid: np.ndarray | None = None,
) -> AmbiguityMatrix:
    """Expected ambiguity surface A_E(theta, tau) = (M_t R)(i 2 pi theta)."""
    v = tau_grid.log_points
    if base_log_grid is None:
        fmax = np.abs(theta_grid.points).max() + _chirp_rate_bound(model) * np.abs(v).max() / (
            2.0 * np.pi
        )
        lo, hi = _base_log_span(model, pad=0.5 * np.abs(v).max())
        base_log_grid = _log_quad_grid(lo, hi, _quad_step(fmax))
    h = base_log_grid[1] - base_log_grid[0]
    S = slice_from_logs(model, base_log_grid[:, None], v[None, :])  # (n_u, n_tau)
    check_edge_decay(np.abs(S).max(axis=1), "ESIAF base-time integrand")
    E = np.exp(-2j * np.pi * np.outer(theta_grid.points, base_log_grid)) * h
    return AmbiguityMatrix(theta_grid=theta_grid, tau_grid=tau_grid, values=E @ S, role=ROLE_ESIAF)


# -- classical baseline ----------------------------------------------------


def resample_uniform(grid: GeometricGrid, path: np.ndarray) -> tuple[UniformTimeGrid, np.ndarray]:
    """Linear-in-ln(t) interpolation of a path onto a uniform time axis."""
    if len(path) != grid.n:
        raise GridError(f"path length {len(path)} does not match grid n={grid.n}")
    t = grid.points
    tu = np.linspace(t[0], t[-1], grid.n)
    lu = np.log(tu)
    u = grid.log_points
    y = np.interp(lu, u, np.asarray(path).real) + 1j * np.interp(lu, u, np.asarray(path).imag)
    return UniformTimeGrid(t_min=float(tu[0]), step=float(tu[1] - tu[0]), n=grid.n), y


def classical_wvs_estimate(
    grid: GeometricGrid,
    path: np.ndarray,
    freq_grid: FrequencyGrid,
    smooth_time: float,
    smooth_freq: float,
) -> TFMatrix:
    """Benchmark baseline: smoothed pseudo-Wigner on a uniform time grid.

    The path is resampled to uniform time, a rectangular-window discrete
    Wigner distribution is evaluated with the frequency axis read as linear
    frequency, and the surface is smoothed with a separable Gaussian
    (sigmas in bins).  This is a declared stand-in for a conventional
    stationary-style spectrum estimator, used only for benchmark comparison.
    """
    ugrid, y = resample_uniform(grid, path)
    n = ugrid.n
    M = (n - 1) // 2
    f = freq_grid.points
    if np.abs(f).max() > 1.0 / (4.0 * ugrid.step):
        raise GridError("frequency axis exceeds the uniform grid's alias limit 1/(4 dt)")
    z = lag_products(y, M)
    lags = 2.0 * ugrid.step * np.arange(-M, M + 1)
    K = np.exp(-2j * np.pi * np.outer(lags, f)) * (2.0 * ugrid.step)
    W = (z.T @ K).real
    if smooth_time > 0 or smooth_freq > 0:
        W = gaussian_filter(W, sigma=(smooth_time, smooth_freq), mode="nearest")
    return TFMatrix(time_grid=ugrid, freq_grid=freq_grid, values=W.astype(complex), role=ROLE_WVS)
