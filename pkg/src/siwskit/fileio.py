"""Deterministic CSV/JSON output with self-describing metadata headers.

Matrix files are CSV with complex entries stored as adjacent re,im column
pairs, preceded by '#' header lines::

    # siws-kit <kind>; key=<json>; key=<json>
    # meta=<json>

The meta object carries the package version, the effective command
configuration, the seed, and the pinned RNG name, so any output file is
sufficient to re-run the command that produced it.  Floats are written with
``repr`` (shortest round-trip), which makes files bit-stable across runs for
identical inputs.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .grids import FrequencyGrid, GeometricGrid, UniformTimeGrid
from .tfr import AmbiguityMatrix, TFMatrix

VERSION = "0.1.0"

__all__ = [
    "VERSION",
    "grid_to_dict",
    "grid_from_dict",
    "write_json",
    "write_complex_matrix",
    "read_complex_matrix",
    "write_tf",
    "read_tf",
    "write_ambiguity",
    "read_ambiguity",
    "write_samples",
    "read_samples",
]


def grid_to_dict(grid) -> dict:
    if isinstance(grid, GeometricGrid):
        return {"kind": "geometric", "t_min": grid.t_min, "ratio": grid.ratio, "n": grid.n}
    if isinstance(grid, UniformTimeGrid):
        return {"kind": "uniform", "t_min": grid.t_min, "step": grid.step, "n": grid.n}
    if isinstance(grid, FrequencyGrid):
        return {"kind": "frequency", "center": grid.center, "step": grid.step, "n": grid.n}
    raise ValidationError(f"unknown grid type {type(grid).__name__}")


def grid_from_dict(data: dict):
    kind = data.get("kind")
    if kind == "geometric":
        return GeometricGrid(t_min=data["t_min"], ratio=data["ratio"], n=int(data["n"]))
    if kind == "uniform":
        return UniformTimeGrid(t_min=data["t_min"], step=data["step"], n=int(data["n"]))
    if kind == "frequency":
        return FrequencyGrid(center=data["center"], step=data["step"], n=int(data["n"]))
    raise ValidationError(f"unknown grid kind {kind!r}")


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", newline="\n")


def _header_lines(kind: str, fields: dict, meta: dict | None) -> list[str]:
    parts = [f"{k}={_dumps(v)}" for k, v in fields.items()]
    lines = ["# siws-kit " + "; ".join([kind] + parts)]
    if meta is not None:
        lines.append("# meta=" + _dumps(meta))
    return lines


def write_complex_matrix(path, values: np.ndarray, kind: str, fields: dict, meta: dict | None = None) -> None:
    values = np.atleast_2d(np.asarray(values, dtype=complex))
    lines = _header_lines(kind, fields, meta)
    for row in values:
        cells = []
        for z in row:
            cells.append(repr(float(z.real)))
            cells.append(repr(float(z.imag)))
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


def _parse_header(line: str) -> tuple[str, dict]:
    body = line[len("# siws-kit "):].strip()
    parts = body.split("; ")
    fields = {}
    for part in parts[1:]:
        key, _, raw = part.partition("=")
        fields[key] = json.loads(raw)
    return parts[0], fields


def read_complex_matrix(path) -> tuple[np.ndarray, str, dict, dict | None]:
    kind, fields, meta = None, {}, None
    rows = []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        if line.startswith("# meta="):
            meta = json.loads(line[len("# meta="):])
        elif line.startswith("# siws-kit "):
            kind, fields = _parse_header(line)
        elif line.startswith("#"):
            continue
        else:
            nums = [float(tok) for tok in line.split(",")]
            if len(nums) % 2 != 0:
                raise ValidationError(f"odd column count in {path}; expected re,im pairs")
            arr = np.asarray(nums)
            rows.append(arr[0::2] + 1j * arr[1::2])
    if kind is None:
        raise ValidationError(f"{path} has no siws-kit header line")
    return np.asarray(rows, dtype=complex), kind, fields, meta


# -- typed wrappers --------------------------------------------------------


def write_tf(path, tf: TFMatrix, meta: dict | None = None, extra_fields: dict | None = None) -> None:
    fields = {
        "role": tf.role,
        "time_grid": grid_to_dict(tf.time_grid),
        "freq_grid": grid_to_dict(tf.freq_grid),
    }
    fields.update(extra_fields or {})
    write_complex_matrix(path, tf.values, "tf", fields, meta)


def read_tf(path) -> TFMatrix:
    values, kind, fields, _ = read_complex_matrix(path)
    if kind != "tf":
        raise ValidationError(f"{path} holds {kind!r}, expected a tf matrix")
    return TFMatrix(
        time_grid=grid_from_dict(fields["time_grid"]),
        freq_grid=grid_from_dict(fields["freq_grid"]),
        values=values,
        role=fields.get("role", "ESTIMATE"),
    )


def write_ambiguity(path, amb: AmbiguityMatrix, meta: dict | None = None, extra_fields: dict | None = None) -> None:
    fields = {
        "role": amb.role,
        "theta_grid": grid_to_dict(amb.theta_grid),
        "tau_grid": grid_to_dict(amb.tau_grid),
    }
    fields.update(extra_fields or {})
    write_complex_matrix(path, amb.values, "ambiguity", fields, meta)


def read_ambiguity(path) -> AmbiguityMatrix:
    values, kind, fields, _ = read_complex_matrix(path)
    if kind != "ambiguity":
        raise ValidationError(f"{path} holds {kind!r}, expected an ambiguity matrix")
    return AmbiguityMatrix(
        theta_grid=grid_from_dict(fields["theta_grid"]),
        tau_grid=grid_from_dict(fields["tau_grid"]),
        values=values,
        role=fields.get("role", "KERNEL"),
    )


def write_samples(path, batch, meta: dict | None = None, extra_fields: dict | None = None) -> None:
    fields = {
        "grid": grid_to_dict(batch.grid),
        "seed": batch.seed,
        "symmetry": batch.symmetry,
    }
    fields.update(extra_fields or {})
    write_complex_matrix(path, batch.paths, "samples", fields, meta)


def read_samples(path):
    """Returns (grid, paths, fields) for a samples CSV."""
    values, kind, fields, _ = read_complex_matrix(path)
    if kind != "samples":
        raise ValidationError(f"{path} holds {kind!r}, expected samples")
    return grid_from_dict(fields["grid"]), values, fields
