"""Command-line surface: field maps, ensemble runs, analysis, calibration,
plotting, and run reports.

Exit codes: 0 success, 2 configuration error, 3 numerical abort,
4 I/O failure.
"""

import argparse
import os
import sys
import time

import numpy as np

from . import __version__, _kernels
from .analysis import (convolve_nas, fractal_dimension, qm_pdown, rmse,
                       scaled_half_width, sensitivity_pairs)
from .config import (FULL_GRID_ANGLES, FULL_GRID_RUNS, Config, ConfigError,
                     build_model_params, load_config, parse_config)
from .ensemble import (EnsembleAbortError, EnsembleResult, angle_grid,
                       calibrate, estimate_pdown, run_ensemble)
from .fileio import (read_curve_csv, read_manifest, read_outcomes_csv,
                     sha256_of, svg_plot, write_curve_csv,
                     write_dimension_report, write_field_csv, write_manifest,
                     write_outcomes_csv)
from .magnetics import DomainError, loop_field_grid

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def _common_flags(sub):
    sub.add_argument("--config", default=None, help="config file (defaults apply if omitted)")
    sub.add_argument("--out", default=None, help="output directory (default from config)")
    sub.add_argument("--seed", type=int, default=None, help="override master_seed")
    sub.add_argument("--workers", type=int, default=None, help="kernel worker threads")
    sub.add_argument("--full", action="store_true",
                     help=f"run the full {FULL_GRID_ANGLES}x{FULL_GRID_RUNS} "
                          f"experiment instead of the reduced default")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="spinchaos",
        description="Deterministic-chaos simulator of two-outcome spin "
                    "statistics from a damped, driven magnetic moment.")
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("field", help="dump the loop field on a rectangular grid")
    _common_flags(p)
    p.add_argument("--x-min", type=float, default=None)
    p.add_argument("--x-max", type=float, default=None)
    p.add_argument("--nx", type=int, default=101)
    p.add_argument("--z-min", type=float, default=None)
    p.add_argument("--z-max", type=float, default=None)
    p.add_argument("--nz", type=int, default=101)

    p = subs.add_parser("simulate", help="run the ensemble and persist outcomes")
    _common_flags(p)

    p = subs.add_parser("analyze", help="estimate, smooth and measure the result curves")
    _common_flags(p)
    p.add_argument("--outcomes", default=None, help="outcome CSV (default OUT/outcomes.csv)")

    p = subs.add_parser("calibrate", help="grid-search damping and inertia")
    _common_flags(p)
    p.add_argument("--span", type=float, default=4.0,
                   help="search half-span in octaves around the config values")
    p.add_argument("--points", type=int, default=7, help="grid points per axis and stage")
    p.add_argument("--runs", type=int, default=10, help="runs per candidate")

    p = subs.add_parser("plot", help="render curves against the quantum reference")
    _common_flags(p)
    p.add_argument("curves", nargs="*", help="curve CSV files (labels from file names)")

    p = subs.add_parser("report", help="summarize a finished run directory")
    _common_flags(p)
    return parser


def _load(args) -> Config:
    if args.config is None:
        return parse_config("")
    return load_config(args.config)


def _apply_overrides(config: Config, args) -> Config:
    from dataclasses import replace

    if getattr(args, "seed", None) is not None:
        config = replace(config, master_seed=args.seed)
    if getattr(args, "full", False):
        config = replace(config, n_angles=FULL_GRID_ANGLES, n_runs=FULL_GRID_RUNS)
    if getattr(args, "out", None) is not None:
        config = replace(config, output_dir=args.out)
    return config


def _outdir(config: Config):
    os.makedirs(config.output_dir, exist_ok=True)
    return config.output_dir


def cmd_field(args):
    config = _apply_overrides(_load(args), args)
    params = build_model_params(config)
    loop = params.loop
    x_min = args.x_min if args.x_min is not None else loop.center_x - 2 * loop.radius
    x_max = args.x_max if args.x_max is not None else loop.center_x + 2 * loop.radius
    z_min = args.z_min if args.z_min is not None else loop.center_z - 2 * loop.radius
    z_max = args.z_max if args.z_max is not None else loop.center_z + 2 * loop.radius
    xs = np.linspace(x_min, x_max, args.nx) if args.nx > 1 else np.array([x_min])
    zs = np.linspace(z_min, z_max, args.nz) if args.nz > 1 else np.array([z_min])
    gx, gz = np.meshgrid(xs, zs, indexing="ij")
    bx, bz = loop_field_grid(gx, gz, loop)
    n_bad = int(np.isnan(bx).sum())
    if n_bad:
        print(f"warning: {n_bad} grid points inside the wire exclusion zone "
              f"written as NaN", file=sys.stderr)
    out = _outdir(config)
    path = os.path.join(out, "field.csv")
    write_field_csv(path, gx, gz, bx, bz)
    print(f"wrote {path} ({gx.size} samples)")
    return EXIT_OK


def _run_manifest(config: Config, result: EnsembleResult, elapsed, workers):
    return {
        "tool_version": __version__,
        "backend": _kernels.BACKEND,
        "master_seed": result.master_seed,
        "n_angles": result.n_angles,
        "n_runs": result.n_runs,
        "workers": workers,
        "wall_clock_s": round(elapsed, 3),
        "config": config.as_dict(),
        "perturbations": [
            {"run_index": p.run_index, "dt_factor": p.dt_factor,
             "x_start_offset": p.x_start_offset, "seed": p.seed}
            for p in result.perturbations
        ],
        "files": {},
    }


def cmd_simulate(args):
    config = _apply_overrides(_load(args), args)
    params = build_model_params(config)
    out = _outdir(config)
    start = time.perf_counter()
    result = run_ensemble(params, config.n_angles, config.n_runs,
                          config.master_seed, workers=args.workers)
    elapsed = time.perf_counter() - start
    outcome_path = os.path.join(out, "outcomes.csv")
    write_outcomes_csv(outcome_path, result)
    manifest = _run_manifest(config, result, elapsed, args.workers)
    manifest["files"]["outcomes.csv"] = sha256_of(outcome_path)
    write_manifest(os.path.join(out, "manifest.json"), manifest)
    n_unsettled = int(result.unsettled.sum())
    print(f"wrote {outcome_path}: {result.n_angles * result.n_runs} outcomes "
          f"in {elapsed:.1f}s ({n_unsettled} unsettled)")
    return EXIT_OK


def cmd_analyze(args):
    config = _apply_overrides(_load(args), args)
    out = _outdir(config)
    outcome_path = args.outcomes or os.path.join(out, "outcomes.csv")
    outcomes, unsettled = read_outcomes_csv(outcome_path)
    n_angles = outcomes.shape[0]
    result = EnsembleResult(angle_grid(n_angles), outcomes, (None,) * outcomes.shape[1],
                            unsettled, config.master_seed)
    raw = estimate_pdown(result)
    w_full = scaled_half_width(config.smooth_half_width, n_angles)
    w_half = scaled_half_width(config.smooth_half_width // 3, n_angles)
    smooth_full = convolve_nas(raw, w_full)

    files = {}

    def emit_curve(name, curve):
        path = os.path.join(out, name)
        write_curve_csv(path, curve)
        files[name] = sha256_of(path)
        return path

    emit_curve("pdown_raw.csv", raw)
    path_full = emit_curve(f"pdown_smooth_w{w_full}.csv", smooth_full)

    def measure(curve):
        return fractal_dimension(curve, ruler_count=config.ruler_count,
                                 max_frac=config.ruler_max_frac,
                                 min_frac=config.ruler_min_frac)

    dims = {"raw": measure(raw)}
    if w_half != w_full:
        smooth_half = convolve_nas(raw, w_half)
        emit_curve(f"pdown_smooth_w{w_half}.csv", smooth_half)
        dims[f"smooth_w{w_half}"] = measure(smooth_half)
    dims[f"smooth_w{w_full}"] = measure(smooth_full)
    dim_path = os.path.join(out, "dimensions.txt")
    write_dimension_report(dim_path, dims)
    files["dimensions.txt"] = sha256_of(dim_path)

    flips = sensitivity_pairs(result)
    metrics = {
        "rmse_raw": rmse(raw, qm_pdown),
        "rmse_smoothed": rmse(smooth_full, qm_pdown),
        "smooth_half_width_used": w_full,
        "d_f": {label: est.d_f for label, est in dims.items()},
        "flip_count": flips.count,
        "flips_per_run": flips.count / outcomes.shape[1],
        "flip_density": flips.density,
        "unsettled_count": int(unsettled.sum()),
    }
    metrics_path = os.path.join(out, "metrics.json")
    write_manifest(metrics_path, metrics)
    files["metrics.json"] = sha256_of(metrics_path)
    write_manifest(os.path.join(out, "analyze_manifest.json"), {
        "tool_version": __version__,
        "source_outcomes": os.path.basename(outcome_path),
        "files": files,
    })
    print(f"rmse(smoothed, reference) = {metrics['rmse_smoothed']:.4f}")
    for label, est in dims.items():
        print(f"d_f[{label}] = {est.d_f:.4f}")
    print(f"wrote {path_full} and reports in {out}")
    return EXIT_OK


def cmd_calibrate(args):
    config = _apply_overrides(_load(args), args)
    params = build_model_params(config)
    out = _outdir(config)
    factors = np.geomspace(2.0 ** -args.span, 2.0 ** args.span, args.points)
    stage_logs = []
    best_b, best_i = config.damping, config.inertia
    for stage, span in enumerate((factors, np.geomspace(0.7, 1.4, args.points))):
        result = calibrate(params, best_b * span, best_i * span,
                           n_angles=config.n_angles, n_runs=args.runs,
                           master_seed=config.master_seed,
                           smooth_half_width=config.smooth_half_width,
                           workers=args.workers)
        best_b, best_i = result.best_damping, result.best_inertia
        stage_logs.append(result)
        print(f"stage {stage}: best damping={best_b:.6g} inertia={best_i:.6g} "
              f"objective={result.objective:.4f}")
    log_path = os.path.join(out, "calibration.csv")
    with open(log_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("stage,damping,inertia,objective\n")
        for stage, result in enumerate(stage_logs):
            for b, i, obj in result.log:
                fh.write(f"{stage},{b!r},{i!r},{obj!r}\n")
    best_path = os.path.join(out, "calibration_best.txt")
    with open(best_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"damping = {best_b!r}\n")
        fh.write(f"inertia = {best_i!r}\n")
        fh.write(f"objective = {stage_logs[-1].objective!r}\n")
    print(f"wrote {log_path} and {best_path}")
    return EXIT_OK


def cmd_plot(args):
    config = _apply_overrides(_load(args), args)
    out = _outdir(config)
    ref_x = angle_grid(FULL_GRID_ANGLES)
    series = [("QM", ref_x, qm_pdown(ref_x))]
    for path in args.curves:
        curve = read_curve_csv(path)
        label = "simulation" if len(args.curves) == 1 else \
            os.path.splitext(os.path.basename(path))[0]
        series.append((label, curve.xs, curve.ys))
    svg = svg_plot(series, "down fraction vs initial angle")
    path = os.path.join(out, "pdown.svg")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(svg)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_report(args):
    config = _apply_overrides(_load(args), args)
    out = config.output_dir
    manifest_path = os.path.join(out, "manifest.json")
    manifest = read_manifest(manifest_path)
    lines = [
        f"run manifest: {manifest_path}",
        f"  tool_version = {manifest['tool_version']}",
        f"  backend      = {manifest.get('backend', '?')}",
        f"  master_seed  = {manifest['master_seed']}",
        f"  grid         = {manifest['n_angles']} angles x {manifest['n_runs']} runs",
        f"  wall_clock_s = {manifest['wall_clock_s']}",
    ]
    for name, digest in sorted(manifest.get("files", {}).items()):
        ok = "ok" if os.path.exists(os.path.join(out, name)) and \
            sha256_of(os.path.join(out, name)) == digest else "MISSING/CHANGED"
        lines.append(f"  file {name}: {digest[:12]}... {ok}")
    metrics_path = os.path.join(out, "metrics.json")
    if os.path.exists(metrics_path):
        metrics = read_manifest(metrics_path)
        lines.append("analysis summary:")
        lines.append(f"  rmse_smoothed  = {metrics['rmse_smoothed']:.4f}  "
                     f"(acceptance band: <= 0.08 reduced, <= 0.06 full)")
        for label, d in metrics["d_f"].items():
            lines.append(f"  d_f[{label}] = {d:.4f}")
        lines.append(f"  flips_per_run  = {metrics['flips_per_run']:.1f}  (>= 1 required)")
        lines.append(f"  unsettled      = {metrics['unsettled_count']}")
    text = "\n".join(lines) + "\n"
    report_path = os.path.join(out, "report.txt")
    with open(report_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    print(text, end="")
    return EXIT_OK


_COMMANDS = {
    "field": cmd_field,
    "simulate": cmd_simulate,
    "analyze": cmd_analyze,
    "calibrate": cmd_calibrate,
    "plot": cmd_plot,
    "report": cmd_report,
}


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EnsembleAbortError, DomainError) as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        # malformed or empty data files
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
