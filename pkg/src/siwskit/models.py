"""Locally self-similar process models and pointwise covariance evaluation.

A single component contributes Q(sqrt(t*s)) * C(t/s) * l_{a,b}(t, s) to the
covariance, where for the built-in parametric family

    Q(t)  = t^(2H - (1/2) ln t)  = exp(2H ln t - (ln t)^2 / 2),   0 < H < 1,
    C(tau) = tau^(-(c/8) ln tau) = exp(-(c/8) (ln tau)^2),        c >= 1,
    l_{a,b}(t, s) = (t/s)^(i a (ln sqrt(t*s) - b)).

Sums of components give multicomponent models; a != 0 gives chirped ones.
All powers are computed in log space, which keeps evaluation stable on wide
geometric grids and makes Hermitian symmetry exact in floating point.

Arbitrary (Q, C) pairs can be supplied as callables through
:class:`FunctionPair`; the transform and numeric-kernel machinery accepts
them, while the closed-form kernel formulas require the parametric family.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .errors import ModelError

__all__ = [
    "LsspParams",
    "ChirpParams",
    "FunctionPair",
    "ModelSpec",
    "eval_Q",
    "eval_C",
    "eval_chirp",
    "eval_covariance",
    "eval_local_slice",
    "covariance_from_logs",
    "slice_from_logs",
    "model_to_dict",
    "model_from_dict",
]


@dataclass(frozen=True)
class LsspParams:
    """Hurst-type index H in (0,1) and local-covariance width c >= 1."""

    H: float
    c: float

    def __post_init__(self):
        if not (0.0 < self.H < 1.0):
            raise ModelError(f"H must lie in (0,1), got {self.H}")
        if not (self.c >= 1.0):
            raise ModelError(f"c must be >= 1, got {self.c}")


@dataclass(frozen=True)
class ChirpParams:
    """Chirp rate a and chirp start b; a = 0 means no chirp."""

    a: float = 0.0
    b: float = 0.0


@dataclass(frozen=True)
class FunctionPair:
    """User-supplied (Q, C) callables, each vectorized over positive arrays.

    C is expected to satisfy C(1) = 1 (unit local covariance at zero lag).
    """

    Q: Callable[[np.ndarray], np.ndarray]
    C: Callable[[np.ndarray], np.ndarray]


PairKind = Union[LsspParams, FunctionPair]


@dataclass(frozen=True)
class ModelSpec:
    """A finite sum of (Q, C, chirp) components."""

    components: tuple[tuple[PairKind, ChirpParams], ...]

    def __post_init__(self):
        if len(self.components) == 0:
            raise ModelError("model needs at least one component")

    # -- constructors -------------------------------------------------

    @classmethod
    def lssp(cls, H: float, c: float) -> "ModelSpec":
        return cls(((LsspParams(H, c), ChirpParams()),))

    @classmethod
    def lsscp(cls, H: float, c: float, a: float, b: float = 0.0) -> "ModelSpec":
        return cls(((LsspParams(H, c), ChirpParams(a, b)),))

    @classmethod
    def mlssp(cls, params: list[tuple[float, float]]) -> "ModelSpec":
        return cls(tuple((LsspParams(H, c), ChirpParams()) for H, c in params))

    @classmethod
    def from_components(cls, comps: list[tuple[float, float, float, float]]) -> "ModelSpec":
        """Components given as (H, c, a, b) tuples."""
        return cls(tuple((LsspParams(H, c), ChirpParams(a, b)) for H, c, a, b in comps))

    @classmethod
    def custom(cls, Q, C, a: float = 0.0, b: float = 0.0) -> "ModelSpec":
        return cls(((FunctionPair(Q, C), ChirpParams(a, b)),))

    # -- classification ------------------------------------------------

    @property
    def kind(self) -> str:
        chirped = any(ch.a != 0.0 for _, ch in self.components)
        if len(self.components) == 1:
            return "LSSCP" if chirped else "LSSP"
        return "MLSSCP" if chirped else "MLSSP"

    @property
    def is_parametric(self) -> bool:
        return all(isinstance(p, LsspParams) for p, _ in self.components)

    @property
    def has_chirp(self) -> bool:
        return any(ch.a != 0.0 for _, ch in self.components)


# -- pointwise evaluation ------------------------------------------------


def _require_positive(name, *arrays):
    for arr in arrays:
        arr = np.asarray(arr)
        if np.any(~(arr > 0)):
            raise ModelError(f"{name} requires strictly positive arguments")


def eval_Q(p: LsspParams, t) -> np.ndarray:
    """Q(t) = exp(2H ln t - (ln t)^2 / 2)."""
    _require_positive("eval_Q", t)
    u = np.log(t)
    return np.exp(2.0 * p.H * u - 0.5 * u * u)


def eval_C(p: LsspParams, tau) -> np.ndarray:
    """C(tau) = exp(-(c/8)(ln tau)^2); even in ln tau with C(1) = 1."""
    _require_positive("eval_C", tau)
    v = np.log(tau)
    return np.exp(-(p.c / 8.0) * v * v)


def eval_chirp(ch: ChirpParams, t, s) -> np.ndarray:
    """Unit-modulus chirp factor (t/s)^(i a (ln sqrt(t s) - b))."""
    _require_positive("eval_chirp", t, s)
    x, y = np.log(t), np.log(s)
    return np.exp(1j * ch.a * (0.5 * (x + y) - ch.b) * (x - y))


def _component_from_logs(pair: PairKind, ch: ChirpParams, x, y):
    """One component's covariance at t = e^x, s = e^y (broadcasting)."""
    m = 0.5 * (x + y)   # ln sqrt(t s)
    d = x - y           # ln (t/s)
    if isinstance(pair, LsspParams):
        val = np.exp(2.0 * pair.H * m - 0.5 * m * m - (pair.c / 8.0) * d * d)
    else:
        val = np.asarray(pair.Q(np.exp(m)), dtype=complex) * np.asarray(
            pair.C(np.exp(d)), dtype=complex
        )
    if ch.a != 0.0:
        val = val * np.exp(1j * ch.a * (m - ch.b) * d)
    return val


def covariance_from_logs(model: ModelSpec, x, y) -> np.ndarray:
    """Covariance R(e^x, e^y); the stable path for wide log-domain grids."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    total = None
    for pair, ch in model.components:
        term = _component_from_logs(pair, ch, x, y)
        total = term if total is None else total + term
    return np.asarray(total, dtype=complex)


def slice_from_logs(model: ModelSpec, x, v) -> np.ndarray:
    """Covariance slice R(t sqrt(tau), t / sqrt(tau)) at x = ln t, v = ln tau."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    return covariance_from_logs(model, x + 0.5 * v, x - 0.5 * v)


def eval_covariance(model: ModelSpec, t, s) -> np.ndarray:
    """R(t, s) = sum_j Q_j(sqrt(t s)) C_j(t/s) l_{a_j,b_j}(t, s)."""
    _require_positive("eval_covariance", t, s)
    return covariance_from_logs(model, np.log(t), np.log(s))


def eval_local_slice(model: ModelSpec, t, tau) -> np.ndarray:
    """R(t sqrt(tau), t / sqrt(tau)); factorizes as Q(t) C(tau) for a pure LSSP."""
    _require_positive("eval_local_slice", t, tau)
    return slice_from_logs(model, np.log(t), np.log(tau))


# -- serialization --------------------------------------------------------


def model_to_dict(model: ModelSpec) -> dict:
    comps = []
    for pair, ch in model.components:
        if not isinstance(pair, LsspParams):
            raise ModelError("custom function-pair models do not serialize to JSON")
        comps.append({"H": pair.H, "c": pair.c, "a": ch.a, "b": ch.b})
    return {"components": comps}


def model_from_dict(data: dict) -> ModelSpec:
    try:
        comps = data["components"]
    except (TypeError, KeyError):
        raise ModelError("model JSON must be an object with a 'components' list")
    if not isinstance(comps, list) or not comps:
        raise ModelError("model 'components' must be a nonempty list")
    out = []
    for entry in comps:
        try:
            H = float(entry["H"])
            c = float(entry["c"])
        except (TypeError, KeyError, ValueError):
            raise ModelError(f"component needs numeric H and c: {entry!r}")
        a = float(entry.get("a", 0.0))
        b = float(entry.get("b", 0.0))
        out.append((LsspParams(H, c), ChirpParams(a, b)))
    return ModelSpec(tuple(out))


def model_to_json(model: ModelSpec) -> str:
    return json.dumps(model_to_dict(model), sort_keys=True)


def model_from_json(text: str) -> ModelSpec:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"invalid model JSON: {exc}")
    return model_from_dict(data)
