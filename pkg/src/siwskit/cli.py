"""Command-line surface: cov, sample, kernel, estimate, bench, mellin.

Every command reads an optional JSON config file; explicit flags override
config values, and the effective configuration is echoed into each output
file's metadata header together with the seed, RNG name, and package version,
so outputs are self-describing and re-runnable.  Outputs are bit-stable for
identical configs and seeds (wall-clock timings go to a separate
``*_timing.json`` sidecar that is excluded from that guarantee).

Exit codes: 0 success, 2 validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import bench as bench_mod
from . import fileio
from .errors import NumericalError, SiwsKitError, ValidationError
from .grids import FrequencyGrid, GeometricGrid, mellin_forward
from .kernels import (
    KernelSpec,
    closed_kernel_matrix,
    closed_vs_numeric_report,
    numeric_global_kernel,
)
from .models import ModelSpec, eval_C, eval_Q, model_from_dict, model_to_dict
from .synth import (
    RNG_NAME,
    certify_psd,
    cholesky_factor,
    covariance_matrix,
    empirical_covariance,
    pseudo_covariance,
    sample_paths,
)
from .tfr import cohen_estimate

__all__ = ["main"]


def _parse_triplet(text: str, label: str) -> tuple[float, float, int]:
    try:
        lo_s, hi_s, n_s = text.split(",")
        return float(lo_s), float(hi_s), int(n_s)
    except ValueError:
        raise ValidationError(f"{label} must be 'lo,hi,n', got {text!r}")


def _freq_grid(text: str, label: str) -> FrequencyGrid:
    lo, hi, n = _parse_triplet(text, label)
    return FrequencyGrid.from_span(lo, hi, n)


def _resolve(args, config: dict, key: str, default=None):
    val = getattr(args, key, None)
    if val is not None:
        return val
    if key in config:
        return config[key]
    return default


def _load_config(args) -> dict:
    if getattr(args, "config", None) is None:
        return {}
    path = Path(args.config)
    if not path.exists():
        raise ValidationError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config file is not valid JSON: {exc}")
    if not isinstance(data, dict):
        raise ValidationError("config file must hold a JSON object")
    return data


def _resolve_seed(args, config) -> int:
    seed = _resolve(args, config, "seed")
    if seed is None:
        env = os.environ.get("SIWS_SEED")
        seed = int(env) if env else 0
    return int(seed)


def _resolve_model(args, config) -> ModelSpec:
    raw = _resolve(args, config, "model")
    model_file = _resolve(args, config, "model_file")
    components = getattr(args, "component", None) or config.get("components")
    if model_file is not None:
        raw = json.loads(Path(model_file).read_text())
    if raw is not None:
        if isinstance(raw, str):
            raw = json.loads(raw)
        return model_from_dict(raw)
    if components:
        comps = []
        for comp in components:
            if isinstance(comp, str):
                vals = [float(tok) for tok in comp.split(",")]
            else:
                vals = [float(v) for v in comp]
            if len(vals) < 2:
                raise ValidationError(f"component needs at least H,c: {comp!r}")
            vals += [0.0] * (4 - len(vals))
            comps.append(tuple(vals[:4]))
        return ModelSpec.from_components(comps)
    H = _resolve(args, config, "H")
    c = _resolve(args, config, "c")
    if H is None or c is None:
        raise ValidationError("model needs --model/--model-file, --component, or --H and --c")
    a = float(_resolve(args, config, "a", 0.0))
    b = float(_resolve(args, config, "b", 0.0))
    return ModelSpec.from_components([(float(H), float(c), a, b)])


def _resolve_time_grid(args, config) -> GeometricGrid:
    span = _resolve(args, config, "log_span")
    if span is not None:
        lo, hi, n = _parse_triplet(span, "--log-span") if isinstance(span, str) else span
        return GeometricGrid.from_log_span(float(lo), float(hi), int(n))
    t_min = _resolve(args, config, "t_min")
    ratio = _resolve(args, config, "ratio")
    n = _resolve(args, config, "n_time")
    if t_min is None or ratio is None or n is None:
        return GeometricGrid.from_log_span(-2.0, 2.0, 64)
    return GeometricGrid(t_min=float(t_min), ratio=float(ratio), n=int(n))


def _meta(command: str, cfg: dict, seed: int | None = None) -> dict:
    meta = {"version": fileio.VERSION, "command": command, "rng": RNG_NAME, "config": cfg}
    if seed is not None:
        meta["seed"] = seed
    return meta


def _outdir(args, config) -> Path:
    out = Path(_resolve(args, config, "outdir", "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- commands ---------------------------------------------------------------


def _cmd_cov(args) -> int:
    config = _load_config(args)
    model = _resolve_model(args, config)
    grid = _resolve_time_grid(args, config)
    out = _outdir(args, config)
    cfg = {
        "model": model_to_dict(model),
        "grid": fileio.grid_to_dict(grid),
        "tol_rel": float(_resolve(args, config, "tol_rel", 1e-8)),
    }
    cov = certify_psd(covariance_matrix(model, grid), tol_rel=cfg["tol_rel"])
    meta = _meta("cov", cfg)
    fileio.write_complex_matrix(
        out / "covariance.csv",
        cov.entries,
        "covariance",
        {"grid": cfg["grid"], "model": cfg["model"]},
        meta,
    )
    fileio.write_json(
        out / "psd_certificate.json",
        {
            "meta": meta,
            "min_eigenvalue": cov.min_eigenvalue,
            "max_eigenvalue": cov.max_eigenvalue,
            "tol_rel": cfg["tol_rel"],
            "passed": True,
        },
    )
    print(f"wrote {out / 'covariance.csv'} and psd_certificate.json "
          f"(min eig {cov.min_eigenvalue:.3e})")
    return 0


def _cmd_sample(args) -> int:
    config = _load_config(args)
    model = _resolve_model(args, config)
    grid = _resolve_time_grid(args, config)
    seed = _resolve_seed(args, config)
    out = _outdir(args, config)
    trials = int(_resolve(args, config, "trials", 8))
    symmetry = _resolve(args, config, "symmetry", "circular")
    cfg = {
        "model": model_to_dict(model),
        "grid": fileio.grid_to_dict(grid),
        "trials": trials,
        "symmetry": symmetry,
        "seed": seed,
    }
    cov = certify_psd(covariance_matrix(model, grid))
    L = cholesky_factor(cov)
    batch = sample_paths(L, grid, trials, seed, symmetry)
    meta = _meta("sample", cfg, seed=seed)
    fileio.write_samples(out / "samples.csv", batch, meta, extra_fields={"model": cfg["model"]})
    print(f"wrote {out / 'samples.csv'} ({trials} {symmetry} paths, seed {seed}, {RNG_NAME})")
    if _resolve(args, config, "validate", False):
        tol = float(_resolve(args, config, "validate_tol", 0.05))
        emp = empirical_covariance(batch)
        ref = np.linalg.norm(cov.entries)
        cov_err = float(np.linalg.norm(emp.entries - cov.entries) / ref)
        pseudo_err = float(np.linalg.norm(pseudo_covariance(batch)) / ref)
        passed = cov_err <= tol and (symmetry != "circular" or pseudo_err <= tol)
        fileio.write_json(
            out / "sample_validation.json",
            {
                "meta": meta,
                "covariance_rel_frobenius_error": cov_err,
                "pseudo_covariance_rel_frobenius": pseudo_err,
                "tolerance": tol,
                "passed": passed,
            },
        )
        print(f"validation: cov err {cov_err:.4f}, pseudo {pseudo_err:.4f}, tol {tol} "
              f"-> {'pass' if passed else 'FAIL'}")
        if not passed:
            raise NumericalError("sample validation exceeded tolerance")
    return 0


def _cmd_kernel(args) -> int:
    config = _load_config(args)
    model = _resolve_model(args, config)
    out = _outdir(args, config)
    mode = _resolve(args, config, "mode", "auto")
    symmetry = _resolve(args, config, "symmetry", "circular")
    delta = float(_resolve(args, config, "delta", 1e-6))
    theta_spec = _resolve(args, config, "theta", "-0.9,0.9,37")
    tau_spec = _resolve(args, config, "tau_log", "-8,8,33")
    theta_grid = _freq_grid(theta_spec, "--theta")
    lo, hi, n = _parse_triplet(tau_spec, "--tau-log") if isinstance(tau_spec, str) else tau_spec
    tau_grid = GeometricGrid.from_log_span(float(lo), float(hi), int(n))
    cfg = {
        "model": model_to_dict(model),
        "mode": mode,
        "symmetry": symmetry,
        "delta": delta,
        "theta": theta_spec,
        "tau_log": tau_spec,
    }
    if mode == "auto":
        mode = "closed" if (model.is_parametric and symmetry == "circular") else "numeric"
    if mode == "closed":
        kern = closed_kernel_matrix(model, theta_grid, tau_grid)
    elif mode == "numeric":
        kern = numeric_global_kernel(model, symmetry, theta_grid, tau_grid, delta=delta)
    else:
        raise ValidationError(f"kernel mode must be closed|numeric|auto, got {mode!r}")
    meta = _meta("kernel", cfg)
    spec = KernelSpec(mode=f"{'closed' if mode == 'closed' else 'numeric_global'}",
                      model=model, symmetry=symmetry, threshold_delta=delta)
    fileio.write_ambiguity(out / "kernel.csv", kern, meta, extra_fields={"spec": spec.to_dict()})
    print(f"wrote {out / 'kernel.csv'} (mode {mode})")
    if _resolve(args, config, "diff_report", False):
        report = closed_vs_numeric_report(model, theta_grid, tau_grid, delta=delta)
        fileio.write_json(out / "kernel_diff.json", {"meta": meta, "report": report})
        print(f"closed-vs-numeric max rel diff on U: {report['max_rel_diff_on_U']:.3e}")
    return 0


def _cmd_estimate(args) -> int:
    config = _load_config(args)
    out = _outdir(args, config)
    path_file = _resolve(args, config, "path_file")
    kernel_file = _resolve(args, config, "kernel_file")
    if path_file is None or kernel_file is None:
        raise ValidationError("estimate needs --path-file and --kernel-file")
    index = int(_resolve(args, config, "path_index", 0))
    grid, paths, _ = fileio.read_samples(path_file)
    if not (0 <= index < len(paths)):
        raise ValidationError(f"path index {index} out of range (file holds {len(paths)})")
    kernel = fileio.read_ambiguity(kernel_file)
    xi_spec = _resolve(args, config, "xi", "-0.6,0.6,33")
    xi_grid = _freq_grid(xi_spec, "--xi")
    cfg = {"path_file": str(path_file), "kernel_file": str(kernel_file),
           "path_index": index, "xi": xi_spec}
    est = cohen_estimate(grid, paths[index], kernel, xi_grid)
    fileio.write_tf(out / "estimate.csv", est, _meta("estimate", cfg))
    print(f"wrote {out / 'estimate.csv'}")
    return 0


def _cmd_bench(args) -> int:
    config = _load_config(args)
    out = _outdir(args, config)
    scen_file = _resolve(args, config, "scenario")
    if scen_file is not None:
        scen_data = json.loads(Path(scen_file).read_text())
        scenario = bench_mod.scenario_from_dict(scen_data)
        if getattr(args, "seed", None) is not None:
            scen_data["seed"] = int(args.seed)
            scenario = bench_mod.scenario_from_dict(scen_data)
    else:
        seed = _resolve_seed(args, config)
        trials = int(_resolve(args, config, "trials", 500))
        scenario = bench_mod.default_benchmark_scenario(seed=seed, n_trials=trials)
    cfg = bench_mod.scenario_to_dict(scenario)
    report = bench_mod.run_benchmark(scenario)
    meta = _meta("bench", cfg, seed=scenario.seed)

    payload = {
        "meta": meta,
        "config_hash": report.config_hash,
        "estimators": [],
    }
    timing = {"total_runtime_s": report.total_runtime_s, "estimators": {}}
    fileio.write_tf(out / "bench_truth.csv", report.truth, meta)
    for er in report.estimators:
        entry = {
            "name": er.name,
            "options": {k: v for k, v in er.options.items()
                        if isinstance(v, (int, float, str, bool))},
            "failed": er.failed,
            "error": er.error,
            "mean_mse": er.mean_mse,
            "std_err": er.std_err,
        }
        payload["estimators"].append(entry)
        timing["estimators"][er.name] = er.runtime_s
        if er.mse_surface is not None:
            fileio.write_tf(out / f"bench_mse_{er.name}.csv", er.mse_surface, meta)
    fileio.write_json(out / "bench.json", payload)
    fileio.write_json(out / "bench_timing.json", timing)
    for entry in payload["estimators"]:
        status = "FAILED: " + str(entry["error"]) if entry["failed"] else (
            f"mean MSE {entry['mean_mse']:.6g} +- {entry['std_err']:.2g}")
        print(f"  {entry['name']:14s} {status}")
    print(f"wrote bench.json + surfaces to {out}")
    return 0


def _cmd_mellin(args) -> int:
    config = _load_config(args)
    out = _outdir(args, config)
    theta_grid = _freq_grid(_resolve(args, config, "theta", "-2,2,81"), "--theta")
    input_file = _resolve(args, config, "input")
    if input_file is not None:
        grid, paths, _ = fileio.read_samples(input_file)
        samples = paths[0]
        cfg = {"input": str(input_file), "theta": _resolve(args, config, "theta", "-2,2,81")}
    else:
        model = _resolve_model(args, config)
        which = _resolve(args, config, "function", "Q")
        span = _resolve(args, config, "log_span", "-10,12,441")
        lo, hi, n = _parse_triplet(span, "--log-span") if isinstance(span, str) else span
        grid = GeometricGrid.from_log_span(float(lo), float(hi), int(n))
        pair = model.components[0][0]
        samples = eval_Q(pair, grid.points) if which == "Q" else eval_C(pair, grid.points)
        cfg = {"model": model_to_dict(model), "function": which, "log_span": span,
               "theta": _resolve(args, config, "theta", "-2,2,81")}
    line = mellin_forward(samples, grid, theta_grid)
    fileio.write_complex_matrix(
        out / "mellin_line.csv",
        line.values[None, :],
        "mellin-line",
        {"freq_grid": fileio.grid_to_dict(theta_grid), "line_offset": line.line_offset},
        _meta("mellin", cfg),
    )
    print(f"wrote {out / 'mellin_line.csv'}")
    return 0


# -- parser -----------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--outdir", help="output directory (default .)")
    p.add_argument("--seed", type=int, help="RNG seed (fallback: env SIWS_SEED, then 0)")
    p.add_argument("--threads", type=int, help="cap internal (BLAS) parallelism")


def _add_model(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", help="model JSON string: {\"components\":[{\"H\":..,\"c\":..},..]}")
    p.add_argument("--model-file", dest="model_file", help="file holding model JSON")
    p.add_argument("--component", action="append",
                   help="component as 'H,c[,a[,b]]' (repeatable)")
    p.add_argument("--H", type=float, help="Hurst-type index of a single component")
    p.add_argument("--c", type=float, help="local-covariance width (>= 1)")
    p.add_argument("--a", type=float, help="chirp rate (default 0)")
    p.add_argument("--b", type=float, help="chirp start (default 0)")


def _add_time_grid(p: argparse.ArgumentParser) -> None:
    p.add_argument("--log-span", dest="log_span",
                   help="time grid as 'lnlo,lnhi,n' (default -2,2,64)")
    p.add_argument("--t-min", dest="t_min", type=float)
    p.add_argument("--ratio", type=float)
    p.add_argument("--n-time", dest="n_time", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="siws-kit",
        description="Scale-invariant Wigner spectrum estimation toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cov", help="covariance matrix + PSD certificate")
    _add_common(p); _add_model(p); _add_time_grid(p)
    p.add_argument("--tol-rel", dest="tol_rel", type=float, help="PSD tolerance (default 1e-8)")
    p.set_defaults(func=_cmd_cov)

    p = sub.add_parser("sample", help="draw Gaussian sample paths")
    _add_common(p); _add_model(p); _add_time_grid(p)
    p.add_argument("--trials", type=int, help="number of paths (default 8)")
    p.add_argument("--symmetry", choices=["real", "circular"])
    p.add_argument("--validate", action="store_true", default=None,
                   help="check empirical and pseudo covariance against the model")
    p.add_argument("--validate-tol", dest="validate_tol", type=float)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("kernel", help="MMSE-optimal ambiguity kernel")
    _add_common(p); _add_model(p)
    p.add_argument("--mode", choices=["closed", "numeric", "auto"])
    p.add_argument("--symmetry", choices=["real", "circular"])
    p.add_argument("--delta", type=float, help="support threshold (default 1e-6)")
    p.add_argument("--theta", help="theta grid 'lo,hi,n' (default -0.9,0.9,37)")
    p.add_argument("--tau-log", dest="tau_log", help="ln tau grid 'lo,hi,n' (default -8,8,33)")
    p.add_argument("--diff-report", dest="diff_report", action="store_true", default=None,
                   help="also write closed-vs-numeric comparison JSON")
    p.set_defaults(func=_cmd_kernel)

    p = sub.add_parser("estimate", help="kernel-smoothed spectrum estimate of a stored path")
    _add_common(p)
    p.add_argument("--path-file", dest="path_file", help="samples CSV")
    p.add_argument("--path-index", dest="path_index", type=int, help="row to use (default 0)")
    p.add_argument("--kernel-file", dest="kernel_file", help="ambiguity kernel CSV")
    p.add_argument("--xi", help="xi grid 'lo,hi,n' (default -0.6,0.6,33)")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("bench", help="Monte-Carlo estimator comparison")
    _add_common(p)
    p.add_argument("--scenario", help="scenario JSON file (default: built-in comparison)")
    p.add_argument("--trials", type=int, help="trials for the default scenario (default 500)")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("mellin", help="forward Mellin transform (debug access)")
    _add_common(p); _add_model(p)
    p.add_argument("--input", help="samples CSV to transform (first row)")
    p.add_argument("--function", choices=["Q", "C"], help="model function to transform")
    p.add_argument("--log-span", dest="log_span", help="quadrature grid 'lnlo,lnhi,n'")
    p.add_argument("--theta", help="theta grid 'lo,hi,n' (default -2,2,81)")
    p.set_defaults(func=_cmd_mellin)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    threads = getattr(args, "threads", None)
    try:
        if threads is not None:
            if threads < 1:
                raise ValidationError(f"--threads must be >= 1, got {threads}")
            with threadpool_limits(limits=threads):
                return args.func(args)
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except SiwsKitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
