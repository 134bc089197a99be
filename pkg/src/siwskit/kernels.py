"""MMSE-optimal ambiguity-domain kernels, closed-form and numeric.

The globally optimal kernel for a circularly symmetric Gaussian model is

    phi(theta, tau) = |A_E(theta, tau)|^2 / E|A(theta, tau)|^2

on the set U where the denominator is meaningfully positive (realized here as
a threshold delta * max).  Gaussian moment factorization splits the
denominator into |A_E|^2 plus a covariance-pairing term (named D1 below), and
for real-valued processes an additional pseudo-covariance pairing term (D2).
Both pairing terms reduce, after the substitution t1 = u sqrt(v),
t2 = u / sqrt(v), to an inner log-domain integral over u followed by a Mellin
transform in v, which is how they are evaluated for arbitrary models.

For the built-in parametric family the same kernels have closed forms; the
single-component version is

    phi(theta, tau) = 1 / (1 + c^(-1/2) exp((1 - 1/c)(2 pi theta)^2)
                                        * tau^(((c-1)/4) ln tau)).

``as_printed=True`` variants add the complex factor exp(4 H i (2 pi theta))
to the denominator term.  That factor drops out of a modulus-squared
derivation and is inconsistent with both the numeric pipeline and the
multicomponent closed form's single-component limit, so the real form is the
default; the complex variant is kept for comparison reports.

The locally optimal kernel solves, for a fixed (t, xi), the normal equations
E{A(p) A*(q)} weighted-kernel = W(t, xi) conj(A_E(q)) over the ambiguity grid
via a truncated-SVD pseudo-inverse of the (Hermitian PSD) Gram matrix.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import GridError, ModelError, NumericalError, QuadratureWarning, ValidationError
from .grids import FrequencyGrid, GeometricGrid
from .models import (
    ChirpParams,
    LsspParams,
    ModelSpec,
    covariance_from_logs,
    model_from_dict,
    model_to_dict,
    slice_from_logs,
)
from .tfr import (
    ROLE_KERNEL,
    ROLE_TF_KERNEL,
    AmbiguityMatrix,
    TFMatrix,
    esiaf,
    siws_values,
    _base_log_span,
    _chirp_rate_bound,
    _chirp_start_bound,
    _log_quad_grid,
    _quad_step,
    _ratio_log_halfwidth,
)

__all__ = [
    "KernelSpec",
    "closed_kernel_lssp",
    "closed_kernel_lsscp",
    "closed_kernel_mlssp",
    "closed_kernel_mlsscp",
    "closed_kernel_matrix",
    "ambiguity_power_terms",
    "numeric_global_kernel",
    "tf_domain_kernel",
    "LocalKernelSolver",
    "local_optimal_kernel",
    "closed_vs_numeric_report",
]

_TWO_PI = 2.0 * np.pi
_EXP_CAP = 700.0  # exp overflow guard


@dataclass(frozen=True)
class KernelSpec:
    """Serializable description of a kernel computation."""

    mode: str  # closed_lssp | closed_lsscp | closed_mlssp | closed_mlsscp | numeric_global | local
    model: ModelSpec
    symmetry: str = "circular"
    threshold_delta: float = 1e-6
    svd_tol: float = 1e-8

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "model": model_to_dict(self.model),
            "symmetry": self.symmetry,
            "threshold_delta": self.threshold_delta,
            "svd_tol": self.svd_tol,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "KernelSpec":
        return cls(
            mode=data["mode"],
            model=model_from_dict(data["model"]),
            symmetry=data.get("symmetry", "circular"),
            threshold_delta=float(data.get("threshold_delta", 1e-6)),
            svd_tol=float(data.get("svd_tol", 1e-8)),
        )


# -- closed forms ----------------------------------------------------------


def closed_kernel_lssp(p: LsspParams, theta, tau, as_printed: bool = False):
    """Optimal kernel of a single unchirped component.

    Default is the real modulus-squared form; ``as_printed`` multiplies the
    denominator term by exp(4 H i 2 pi theta) (complex off theta = 0).
    """
    theta = np.asarray(theta, dtype=float)
    ltau = np.log(np.asarray(tau, dtype=float))
    log_rho = (
        -0.5 * np.log(p.c)
        + (1.0 - 1.0 / p.c) * (_TWO_PI * theta) ** 2
        + 0.25 * (p.c - 1.0) * ltau**2
    )
    if not as_printed:
        return expit(-log_rho)
    rho = np.exp(np.minimum(log_rho, _EXP_CAP)) * np.exp(1j * 4.0 * p.H * _TWO_PI * theta)
    out = 1.0 / (1.0 + rho)
    return np.where(log_rho > _EXP_CAP, 0.0, out)


def closed_kernel_lsscp(p: LsspParams, ch: ChirpParams, theta, tau, as_printed: bool = False):
    """Chirp-shifted kernel: the LSSP kernel at theta - (a / 2 pi) ln tau."""
    theta = np.asarray(theta, dtype=float)
    ltau = np.log(np.asarray(tau, dtype=float))
    return closed_kernel_lssp(p, theta - ch.a * ltau / _TWO_PI, tau, as_printed=as_printed)


def _mlssp_ratio(params: list[LsspParams], theta, ltau):
    """Denominator-over-numerator ratio of the multicomponent closed form."""
    theta = np.asarray(theta, dtype=float)
    ltau = np.asarray(ltau, dtype=float)
    w = _TWO_PI * theta
    num = np.zeros(np.broadcast(theta, ltau).shape, dtype=complex)
    for p in params:
        z = 2.0 * p.H - 1j * w
        num = num + np.exp(0.5 * z * z - (p.c / 8.0) * ltau**2)
    den = np.zeros_like(num, dtype=float)
    for pj in params:
        for pk in params:
            cjk = pj.c + pk.c
            den = den + np.sqrt(2.0 / cjk) * np.exp(
                -(2.0 / cjk) * w**2
                + (pj.H + pk.H) ** 2
                + (pj.H - pk.H) * ltau
                - 0.25 * ltau**2
            )
    return num, den


def closed_kernel_mlssp(params: list[LsspParams], theta, tau):
    """Multicomponent closed-form kernel (circularly symmetric case)."""
    if not params:
        raise ModelError("multicomponent kernel needs at least one component")
    ltau = np.log(np.asarray(tau, dtype=float))
    num, den = _mlssp_ratio(params, theta, ltau)
    n2 = np.abs(num) ** 2
    total = n2 + den
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(total > 0.0, n2 / np.where(total > 0.0, total, 1.0), 0.0)
    return out


def closed_kernel_mlsscp(components, theta, tau):
    """Multicomponent chirped kernel; requires one common chirp (a, b).

    With differing rates, or differing starts at a nonzero rate, the
    per-component phases tau^(-i a_j b_j) no longer cancel in the coherent
    term and the pairing cross terms pick up extra shifts; only
    :func:`numeric_global_kernel` handles that case.
    """
    params = []
    rates = set()
    starts = set()
    for pair, ch in components:
        if not isinstance(pair, LsspParams):
            raise ModelError("closed kernels require the parametric family")
        params.append(pair)
        rates.add(ch.a)
        starts.add(ch.b)
    if len(rates) > 1 or (len(starts) > 1 and rates != {0.0}):
        raise ModelError(
            "closed MLSSCP kernel requires one common chirp (a, b); use numeric_global_kernel"
        )
    a = rates.pop()
    theta = np.asarray(theta, dtype=float)
    ltau = np.log(np.asarray(tau, dtype=float))
    return closed_kernel_mlssp(params, theta - a * ltau / _TWO_PI, tau)


def closed_kernel_matrix(
    model: ModelSpec, theta_grid: FrequencyGrid, tau_grid: GeometricGrid
) -> AmbiguityMatrix:
    """Dispatch on the model kind and evaluate the closed form on a grid."""
    if not model.is_parametric:
        raise ModelError("closed kernels require the parametric family")
    TT, TAU = np.meshgrid(theta_grid.points, tau_grid.points, indexing="ij")
    kind = model.kind
    if kind == "LSSP":
        vals = closed_kernel_lssp(model.components[0][0], TT, TAU)
    elif kind == "LSSCP":
        vals = closed_kernel_lsscp(model.components[0][0], model.components[0][1], TT, TAU)
    elif kind == "MLSSP":
        vals = closed_kernel_mlssp([p for p, _ in model.components], TT, TAU)
    else:
        vals = closed_kernel_mlsscp(model.components, TT, TAU)
    return AmbiguityMatrix(
        theta_grid=theta_grid,
        tau_grid=tau_grid,
        values=np.asarray(vals, dtype=complex),
        role=ROLE_KERNEL,
    )


# -- numeric pipeline ------------------------------------------------------


def _pairing_quad_grids(model, theta_grid, tau_grid, need_pseudo, step=None):
    v_abs = np.abs(tau_grid.log_points).max()
    amax = _chirp_rate_bound(model)
    bmax = _chirp_start_bound(model)
    u_lo, u_hi = _base_log_span(model, pad=0.5 * v_abs)
    v_half = _ratio_log_halfwidth(model, pad=v_abs if need_pseudo else 0.0)
    th_abs = np.abs(theta_grid.points).max()
    fmax = th_abs + 2.0 * amax * (max(abs(u_lo), abs(u_hi)) + bmax + v_abs) / _TWO_PI
    h = _quad_step(fmax) if step is None else step
    return _log_quad_grid(u_lo, u_hi, h), _log_quad_grid(-v_half, v_half, h)


def ambiguity_power_terms(
    model: ModelSpec,
    symmetry: str,
    theta_grid: FrequencyGrid,
    tau_grid: GeometricGrid,
    quad_step: float | None = None,
) -> dict:
    """Second-moment pieces of the ambiguity transform on a grid.

    Returns ``coherent`` = |A_E|^2, ``pairing`` = the covariance-pairing term,
    ``pseudo`` = the extra pairing for real-valued processes (None for
    circular symmetry), and ``total`` = E|A|^2, each (n_theta, n_tau) real.
    """
    if symmetry not in ("real", "circular"):
        raise ValidationError(f"symmetry must be 'real' or 'circular', got {symmetry!r}")
    if symmetry == "real" and model.has_chirp:
        raise ModelError("real-valued symmetry is inconsistent with a chirped (complex) covariance")
    need_pseudo = symmetry == "real"
    u, v = _pairing_quad_grids(model, theta_grid, tau_grid, need_pseudo, quad_step)
    hu = u[1] - u[0]
    hv = v[1] - v[0]
    th = theta_grid.points
    Ev = np.exp(-2j * np.pi * np.outer(v, th)) * hv  # (n_v, n_theta)

    AE = esiaf(model, theta_grid, tau_grid, base_log_grid=u).values
    coherent = np.abs(AE) ** 2

    ltaus = tau_grid.log_points
    W = u[:, None]
    V = v[None, :]
    pairing = np.empty((theta_grid.n, tau_grid.n))
    pseudo = np.empty((theta_grid.n, tau_grid.n)) if need_pseudo else None
    imag_worst = 0.0
    for j, lt in enumerate(ltaus):
        s1 = slice_from_logs(model, W + 0.5 * lt, V)
        s2 = slice_from_logs(model, W - 0.5 * lt, V)
        g = (s1 * np.conj(s2)).sum(axis=0) * hu  # inner u integral -> function of v
        row = g @ Ev
        imag_worst = max(imag_worst, np.abs(row.imag).max())
        pairing[:, j] = row.real
        if need_pseudo:
            p1 = slice_from_logs(model, W, V + lt)
            p2 = slice_from_logs(model, W, V - lt)
            gp = (p1 * p2).sum(axis=0) * hu
            pseudo[:, j] = (gp @ Ev).real
    scale = max(pairing.max(), coherent.max())
    if imag_worst > 1e-6 * scale:
        warnings.warn(
            f"pairing-term imaginary residue {imag_worst:.2e} vs scale {scale:.2e}; "
            "quadrature may be under-resolved",
            QuadratureWarning,
            stacklevel=2,
        )
    total = coherent + pairing + (pseudo if need_pseudo else 0.0)
    return {"coherent": coherent, "pairing": pairing, "pseudo": pseudo, "total": total}


def numeric_global_kernel(
    model: ModelSpec,
    symmetry: str,
    theta_grid: FrequencyGrid,
    tau_grid: GeometricGrid,
    delta: float = 1e-6,
    quad_step: float | None = None,
) -> AmbiguityMatrix:
    """Globally optimal kernel by quadrature, for any model.

    phi = |A_E|^2 / E|A|^2 on U = { E|A|^2 > delta * max }, zero elsewhere.
    """
    terms = ambiguity_power_terms(model, symmetry, theta_grid, tau_grid, quad_step)
    total = terms["total"]
    mask = total > delta * total.max()
    with np.errstate(invalid="ignore", divide="ignore"):
        phi = np.where(mask, terms["coherent"] / np.where(mask, total, 1.0), 0.0)
    return AmbiguityMatrix(
        theta_grid=theta_grid, tau_grid=tau_grid, values=phi.astype(complex), role=ROLE_KERNEL
    )


def tf_domain_kernel(
    phi: AmbiguityMatrix, time_grid: GeometricGrid, xi_grid: FrequencyGrid
) -> TFMatrix:
    """Time-frequency form of an ambiguity kernel: inverse Mellin in theta, forward in tau."""
    th = phi.theta_grid.points
    v = phi.tau_grid.log_points
    if len(v) > 1:
        hv = v[1] - v[0]
    else:
        hv = 1.0
    E1 = np.exp(2j * np.pi * np.outer(time_grid.log_points, th)) * phi.theta_grid.step
    E2 = np.exp(-2j * np.pi * np.outer(v, xi_grid.points)) * hv
    return TFMatrix(
        time_grid=time_grid,
        freq_grid=xi_grid,
        values=(E1 @ phi.values) @ E2,
        role=ROLE_TF_KERNEL,
    )


# -- local kernel ----------------------------------------------------------


class LocalKernelSolver:
    """Gram-matrix solver for locally optimal kernels on a small ambiguity grid.

    Assembles G[p, q] = E{A(theta_p, tau_p) A*(theta_q, tau_q)} once (cost
    O(n_tau^2 n_u^2); intended for grids up to 32 x 32) and solves for any
    number of (t, xi) points.  Circularly symmetric Gaussian moments are
    assumed.
    """

    MAX_AXIS = 32

    def __init__(
        self,
        model: ModelSpec,
        theta_grid: FrequencyGrid,
        tau_grid: GeometricGrid,
        svd_tol: float = 1e-8,
        quad_step: float | None = None,
    ):
        if theta_grid.n > self.MAX_AXIS or tau_grid.n > self.MAX_AXIS:
            raise ValidationError(
                f"local solver is desk-scale only (axes <= {self.MAX_AXIS}), "
                f"got {theta_grid.n} x {tau_grid.n}"
            )
        self.model = model
        self.theta_grid = theta_grid
        self.tau_grid = tau_grid
        self.svd_tol = svd_tol

        ltaus = tau_grid.log_points
        v_abs = np.abs(ltaus).max()
        amax = _chirp_rate_bound(model)
        bmax = _chirp_start_bound(model)
        u_lo, u_hi = _base_log_span(model, pad=0.5 * v_abs)
        th_abs = np.abs(theta_grid.points).max()
        fmax = th_abs + amax * (max(abs(u_lo), abs(u_hi)) + bmax) / _TWO_PI
        h = _quad_step(fmax) if quad_step is None else quad_step
        w = _log_quad_grid(u_lo, u_hi, h)
        hw = w[1] - w[0]
        F = np.exp(-2j * np.pi * np.outer(theta_grid.points, w)) * hw  # (n_th, n_w)

        AE = esiaf(model, theta_grid, tau_grid, base_log_grid=w).values
        if np.abs(AE).max() == 0.0:
            raise ModelError("model has an identically zero expected ambiguity surface")
        self._ae_flat = AE.reshape(-1)

        n_th, n_tau = theta_grid.n, tau_grid.n
        npts = n_th * n_tau
        G = np.outer(self._ae_flat, self._ae_flat.conj())
        W1 = w[:, None]
        W2 = w[None, :]
        for jp, lp in enumerate(ltaus):
            for jq, lq in enumerate(ltaus):
                B = covariance_from_logs(
                    self.model, W1 + 0.5 * lp, W2 + 0.5 * lq
                ) * np.conj(covariance_from_logs(self.model, W1 - 0.5 * lp, W2 - 0.5 * lq))
                blk = F @ B @ F.conj().T  # (n_th, n_th)
                G[jp::n_tau, jq::n_tau] += blk
        M = np.conj(G)  # normal-equation matrix; Hermitian PSD
        herm_dev = np.abs(M - M.conj().T).max()
        scale = np.abs(M).max()
        if herm_dev > 1e-8 * scale:
            raise NumericalError(
                f"ambiguity Gram is not Hermitian within tolerance ({herm_dev:.2e} vs {scale:.2e})"
            )
        M = 0.5 * (M + M.conj().T)
        eigs = np.linalg.eigvalsh(M)
        if eigs[0] < -1e-8 * max(eigs[-1], 0.0):
            raise NumericalError(
                f"ambiguity Gram has negative eigenvalue {eigs[0]:.3e} (max {eigs[-1]:.3e})"
            )
        self._M = M
        self._Minv = np.linalg.pinv(M, rcond=svd_tol, hermitian=True)
        self._b = np.conj(self._ae_flat)

        # per-point quadrature weights of the kernel integral (point mass on
        # degenerate single-bin axes)
        wth = theta_grid.step if n_th > 1 else 1.0
        wv = tau_grid.log_step if n_tau > 1 else 1.0
        self._weights = wth * wv

    def _phases(self, t: float, xi: float) -> np.ndarray:
        TT, LL = np.meshgrid(self.theta_grid.points, self.tau_grid.log_points, indexing="ij")
        return np.exp(2j * np.pi * (TT * np.log(t) - xi * LL)).reshape(-1)

    def mse_of_weighted(self, psi: np.ndarray, w_true: complex) -> float:
        """Predicted E|P - W|^2 for a weighted kernel vector psi."""
        ep = np.vdot(self._b, psi)  # = E{P}
        quad = np.real(np.vdot(psi, self._M @ psi))
        return float(quad - 2.0 * np.real(np.conj(w_true) * ep) + abs(w_true) ** 2)

    def weighted_from_kernel(self, phi_values: np.ndarray, t: float, xi: float) -> np.ndarray:
        return phi_values.reshape(-1) * self._phases(t, xi) * self._weights

    def solve(self, t: float, xi: float) -> tuple[AmbiguityMatrix, float]:
        """Locally optimal kernel at (t, xi) and its predicted MSE."""
        if not t > 0:
            raise ValidationError(f"t must be positive, got {t}")
        w_true = complex(siws_values(self.model, np.log(t), xi)[0, 0])
        psi = w_true * (self._Minv @ self._b)
        j_val = self.mse_of_weighted(psi, w_true)
        phi = psi / (self._phases(t, xi) * self._weights)
        kern = AmbiguityMatrix(
            theta_grid=self.theta_grid,
            tau_grid=self.tau_grid,
            values=phi.reshape(self.theta_grid.n, self.tau_grid.n),
            role=ROLE_KERNEL,
        )
        return kern, j_val

    def mse_of_kernel(self, kernel: AmbiguityMatrix, t: float, xi: float) -> float:
        """Predicted MSE of an arbitrary fixed kernel on the same grid."""
        if kernel.values.shape != (self.theta_grid.n, self.tau_grid.n):
            raise GridError("kernel grid does not match the solver grid")
        w_true = complex(siws_values(self.model, np.log(t), xi)[0, 0])
        psi = self.weighted_from_kernel(kernel.values, t, xi)
        return self.mse_of_weighted(psi, w_true)


def local_optimal_kernel(
    model: ModelSpec,
    t: float,
    xi: float,
    theta_grid: FrequencyGrid,
    tau_grid: GeometricGrid,
    svd_tol: float = 1e-8,
) -> tuple[AmbiguityMatrix, float]:
    """One-shot locally optimal kernel at (t, xi); see :class:`LocalKernelSolver`."""
    solver = LocalKernelSolver(model, theta_grid, tau_grid, svd_tol=svd_tol)
    return solver.solve(t, xi)


# -- cross-validation report -----------------------------------------------


def closed_vs_numeric_report(
    model: ModelSpec,
    theta_grid: FrequencyGrid,
    tau_grid: GeometricGrid,
    delta: float = 1e-6,
    quad_step: float | None = None,
) -> dict:
    """Compare the closed-form kernel against the quadrature pipeline on U.

    Also reports how far the literal printed single-component formula (with
    its complex exp(4 H i 2 pi theta) factor) deviates from the modulus-squared
    form, with the numeric pipeline as the arbiter.
    """
    terms = ambiguity_power_terms(model, "circular", theta_grid, tau_grid, quad_step)
    total = terms["total"]
    mask = total > delta * total.max()
    with np.errstate(invalid="ignore", divide="ignore"):
        numeric = np.where(mask, terms["coherent"] / np.where(mask, total, 1.0), 0.0)
    closed = closed_kernel_matrix(model, theta_grid, tau_grid).values.real
    # pointwise relative error is meaningful only where the kernel is above
    # the quadrature's cancellation floor; below it both values are noise-level
    resolvable = mask & (np.abs(closed) >= 1e-12)
    tail = mask & ~resolvable
    diff = np.abs(numeric - closed)
    rel = diff[resolvable] / np.abs(closed)[resolvable]
    report = {
        "kind": model.kind,
        "points_on_U": int(mask.sum()),
        "resolvable_points_on_U": int(resolvable.sum()),
        "max_rel_diff_on_U": float(rel.max()) if resolvable.any() else 0.0,
        "tail_max_abs_diff_on_U": float(diff[tail].max()) if tail.any() else 0.0,
        "delta": delta,
    }
    if model.kind in ("LSSP", "LSSCP"):
        p, ch = model.components[0]
        TT, TAU = np.meshgrid(theta_grid.points, tau_grid.points, indexing="ij")
        printed = (
            closed_kernel_lssp(p, TT, TAU, as_printed=True)
            if model.kind == "LSSP"
            else closed_kernel_lsscp(p, ch, TT, TAU, as_printed=True)
        )
        dev = np.abs(printed - closed)[mask] / np.abs(closed)[mask]
        report["printed_form_max_rel_dev_on_U"] = float(dev.max()) if mask.any() else 0.0
        report["printed_form_note"] = (
            "literal formula carries a complex factor exp(4*H*i*2*pi*theta); "
            "modulus-squared derivation (real) matches the numeric pipeline"
        )
    return report
