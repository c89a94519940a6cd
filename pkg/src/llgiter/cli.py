"""Command-line entry point.

Subcommands: run, mms, sweep, compare, norms.  Exit codes: 0 success,
1 configuration error, 2 numerical failure (including hitting the
iteration cap without converging), 3 divergence detected (the record is
still written).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from contextlib import nullcontext
from pathlib import Path

import numpy as np
import scipy.fft

from .config import RunConfig, load_config
from .errors import BlowupError, ConfigError, ShapeMismatchError
from .fields import read_snapshot, write_snapshot
from .heat import fit_convergence_slope, mms_study
from .initdata import generate_m0
from .iterate import geometric_fit, run
from .norms import NormSpec, spacetime_norm, spatial_sobolev_norm, spatial_sobolev_seminorm
from .oracle import evolve
from .records import (
    ITERATIONS_FILE,
    RunRecord,
    iteration_rows,
    load_iterations,
    load_report,
    timing_rows,
    write_config_echo,
    write_run_record,
)
from .residual import build_L
from .verify import check_solution, compare_oracle

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_DIVERGED = 3


def _say(quiet: bool, message: str):
    if not quiet:
        print(message, flush=True)


def execute_run(cfg: RunConfig, outdir: Path, quiet: bool = False) -> int:
    """Run one experiment and persist its record; returns the exit code."""
    grid, tgrid = cfg.space, cfg.time
    m0 = generate_m0(cfg.initdata, grid)
    write_config_echo(outdir, cfg)
    write_snapshot(outdir / "m0.field", m0, grid)

    t0 = time.perf_counter()
    try:
        m, state, summary = run(
            m0,
            grid,
            tgrid,
            cfg.physics,
            cfg.iterate,
            cfg.heat,
            x0_index=cfg.x0_index,
            on_iteration=None
            if quiet
            else lambda s: print(
                f"  iter {s.ell - 1}: r={s.r_norm_history[-1]:.3e} "
                f"R={s.R_norm_history[-1]:.3e} status={s.status}",
                flush=True,
            ),
        )
    except BlowupError as exc:
        _say(quiet, f"numerical failure: {exc}")
        state = exc.dump
        if state is not None:
            record = RunRecord(
                config=cfg,
                status="numerical-failure",
                iterations=iteration_rows(state),
                timings=timing_rows(state),
                final_norms=None,
                verification=None,
                summary={"error": str(exc)},
            )
            write_run_record(outdir, record)
        return EXIT_NUMERICAL

    spec = NormSpec(k=cfg.iterate.k)
    oracle_m = None
    oracle_gap = None
    if cfg.oracle.enabled:
        _say(quiet, "running oracle integration ...")
        oracle_m = evolve(m0, grid, tgrid, cfg.physics, cfg.oracle.to_oracle_config())
        write_snapshot(outdir / "oracle.field", oracle_m, grid, tgrid)
        oracle_gap = float(compare_oracle(m, oracle_m).max())

    verification = check_solution(
        m, m0, grid, tgrid, cfg.physics, spec, oracle_m=oracle_m, m_hat=state.m_hat
    )
    final_norms = spacetime_norm(m, grid, tgrid, spec)
    write_snapshot(outdir / "final.field", m, grid, tgrid)

    wall_total = time.perf_counter() - t0
    record = RunRecord(
        config=cfg,
        status=state.status,
        iterations=iteration_rows(state),
        timings=timing_rows(state) + [{"ell": -1, "wall_s": wall_total}],
        final_norms=final_norms,
        verification=verification,
        summary={
            "iterations": summary.iterations,
            "final_residual_norm": summary.final_residual_norm,
            "final_residual_norm_full": summary.final_residual_norm_full,
            "smoothness_ratio": summary.smoothness_ratio,
            "m_norm": summary.m_norm,
            "m0_spatial_norm": summary.m0_spatial_norm,
            "q_fit": summary.q_fit,
            "oracle_linf": oracle_gap,
        },
    )
    write_run_record(outdir, record)
    _say(
        quiet,
        f"status={state.status} after {summary.iterations} iterations; "
        f"r={summary.final_residual_norm:.3e} (full {summary.final_residual_norm_full:.3e}); "
        f"record in {outdir}",
    )
    if state.status == "converged":
        return EXIT_OK
    if state.status == "diverged":
        return EXIT_DIVERGED
    return EXIT_NUMERICAL


def execute_mms(cfg: RunConfig, outdir: Path, quiet: bool = False) -> int:
    grid = cfg.space
    mode = (1,) + (0,) * (grid.dimension - 1)
    m0 = generate_m0(cfg.initdata, grid)
    L = build_L(cfg.physics, m0, grid, cfg.x0_index)
    m_values = [8, 16, 32, 64, 128]
    rows = mms_study(grid, cfg.time.t_final, m_values, L, cfg.physics, mode=mode)
    outdir.mkdir(parents=True, exist_ok=True)
    write_config_echo(outdir, cfg)
    lines = ["scheme,m_steps,dt,max_error"]
    for row in rows:
        lines.append(f"{row['scheme']},{row['m_steps']},{row['dt']!r},{row['max_error']!r}")
    slopes = {s: fit_convergence_slope(rows, s) for s in ("implicit-euler", "crank-nicolson")}
    (outdir / "mms.csv").write_text("\n".join(lines) + "\n")
    (outdir / "mms_slopes.json").write_text(json.dumps(slopes, indent=2, sort_keys=True) + "\n")
    _say(quiet, f"temporal convergence slopes: {slopes}")
    return EXIT_OK


_SWEEPABLE = ("epsilon", "n_per_axis", "m_steps", "k")


def _apply_sweep_value(cfg: RunConfig, parameter: str, value) -> RunConfig:
    if parameter == "epsilon":
        return dataclasses.replace(
            cfg, initdata=dataclasses.replace(cfg.initdata, epsilon=float(value))
        )
    if parameter == "n_per_axis":
        return dataclasses.replace(
            cfg, space=dataclasses.replace(cfg.space, n_per_axis=int(value))
        )
    if parameter == "m_steps":
        return dataclasses.replace(cfg, time=dataclasses.replace(cfg.time, m_steps=int(value)))
    if parameter == "k":
        return dataclasses.replace(cfg, iterate=dataclasses.replace(cfg.iterate, k=int(value)))
    raise ConfigError(f"sweep parameter must be one of {_SWEEPABLE}, got {parameter!r}")


def execute_sweep(cfg: RunConfig, parameter: str, values, outdir: Path, quiet: bool = False) -> int:
    """Run the sweep matrix sequentially; each entry gets its own record."""
    if parameter not in _SWEEPABLE:
        raise ConfigError(f"sweep parameter must be one of {_SWEEPABLE}, got {parameter!r}")
    outdir.mkdir(parents=True, exist_ok=True)
    write_config_echo(outdir, cfg)
    header = [
        "index", "parameter", "value", "status", "iterations", "final_r_norm",
        "final_r_norm_full", "q_fit", "smoothness_ratio", "modulus_dev", "oracle_linf",
    ]
    lines = [",".join(header)]
    worst = EXIT_OK
    for i, value in enumerate(values):
        sub = _apply_sweep_value(cfg, parameter, value)
        subdir = outdir / f"{parameter}_{i:03d}"
        _say(quiet, f"sweep {parameter} = {value} -> {subdir}")
        code = execute_run(sub, subdir, quiet=True)
        worst = max(worst, code if code != EXIT_DIVERGED else EXIT_OK)  # divergence is a finding
        report = load_report(subdir)
        summ = report["summary"]
        ver = report.get("verification") or {}
        lines.append(
            ",".join(
                _fmt_cell(x)
                for x in (
                    i, parameter, value, report["status"], summ.get("iterations"),
                    summ.get("final_residual_norm"), summ.get("final_residual_norm_full"),
                    summ.get("q_fit"), summ.get("smoothness_ratio"),
                    ver.get("modulus_dev"), summ.get("oracle_linf"),
                )
            )
        )
    (outdir / "sweep.csv").write_text("\n".join(lines) + "\n")
    return worst


def _fmt_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def execute_compare(dir_a: Path, dir_b: Path, quiet: bool = False) -> int:
    """Diff two run records: iteration series, reports, final snapshots."""
    rows_a, rows_b = load_iterations(dir_a), load_iterations(dir_b)
    diff: dict = {"iterations_rows": (len(rows_a), len(rows_b))}
    common = min(len(rows_a), len(rows_b))
    col_diffs = {}
    for col in ("r_norm", "r_norm_full", "R_norm", "q", "Q", "modulus_dev"):
        deltas = [
            abs(rows_a[j][col] - rows_b[j][col])
            for j in range(common)
            if rows_a[j][col] is not None and rows_b[j][col] is not None
        ]
        col_diffs[col] = max(deltas) if deltas else 0.0
    diff["iterations_max_abs_diff"] = col_diffs

    fa, ga, ta = read_snapshot(Path(dir_a) / "final.field")
    fb, gb, tb = read_snapshot(Path(dir_b) / "final.field")
    if ga != gb or ta != tb:
        raise ShapeMismatchError(
            f"incompatible grids: {ga}/{ta} vs {gb}/{tb}"
        )
    diff["final_field_max_abs_diff"] = float(np.abs(fa - fb).max())

    ra, rb = load_report(dir_a), load_report(dir_b)
    summary_diff = {}
    for key in sorted(set(ra["summary"]) | set(rb["summary"])):
        va, vb = ra["summary"].get(key), rb["summary"].get(key)
        if isinstance(va, (int, float)) and isinstance(vb, (int, float)):
            summary_diff[key] = abs(va - vb)
        elif va != vb:
            summary_diff[key] = f"{va!r} != {vb!r}"
    diff["summary_abs_diff"] = summary_diff
    print(json.dumps(diff, indent=2, sort_keys=True))
    return EXIT_OK


def execute_norms(snapshot: Path, k: int, quiet: bool = False) -> int:
    field, grid, tgrid = read_snapshot(snapshot)
    if tgrid is None:
        out = {
            "kind": "spatial",
            "k": k,
            "norm_H2k": spatial_sobolev_norm(field, grid, 2 * k),
            "seminorm_H2k": spatial_sobolev_seminorm(field, grid, 2 * k),
        }
    else:
        report = spacetime_norm(field, grid, tgrid, NormSpec(k=k))
        out = {"kind": "spacetime", "k": k, **report.to_flat_dict()}
    print(json.dumps(out, indent=2, sort_keys=True))
    return EXIT_OK


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--config", required=True, help="TOML configuration file")
    parser.add_argument("--out", help="output directory (overrides the config)")
    parser.add_argument("--seed", type=int, help="seed override")
    parser.add_argument("--threads", type=int, default=1, help="FFT worker threads")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="llgiter",
        description="Constructive fixed-point solver for the LLG equation with Neumann walls",
    )
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute one constructive-iteration experiment")
    _add_common(p)

    p = sub.add_parser("mms", help="heat-solver manufactured-solution convergence study")
    _add_common(p)

    p = sub.add_parser("sweep", help="run a parameter sweep and aggregate results")
    _add_common(p)
    p.add_argument("--parameter", required=True, choices=_SWEEPABLE)
    p.add_argument("--values", required=True, help="comma-separated values")

    p = sub.add_parser("compare", help="diff two run records")
    p.add_argument("record_a")
    p.add_argument("record_b")

    p = sub.add_parser("norms", help="norm report of a field snapshot")
    p.add_argument("snapshot")
    p.add_argument("--k", type=int, default=3)
    return parser


def _with_overrides(cfg: RunConfig, args) -> RunConfig:
    if getattr(args, "seed", None) is not None:
        cfg = dataclasses.replace(
            cfg,
            seed=args.seed,
            initdata=dataclasses.replace(cfg.initdata, seed=args.seed),
        )
    if getattr(args, "out", None):
        cfg = dataclasses.replace(cfg, output_dir=args.out)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    quiet = args.quiet
    threads = getattr(args, "threads", 1) or 1
    fft_ctx = scipy.fft.set_workers(threads) if threads > 1 else nullcontext()
    try:
        with fft_ctx:
            if args.command in ("run", "mms", "sweep"):
                cfg = _with_overrides(load_config(args.config), args)
                outdir = Path(cfg.output_dir)
                if args.command == "run":
                    return execute_run(cfg, outdir, quiet)
                if args.command == "mms":
                    return execute_mms(cfg, outdir, quiet)
                values = [v for v in args.values.split(",") if v != ""]
                return execute_sweep(cfg, args.parameter, values, outdir, quiet)
            if args.command == "compare":
                return execute_compare(Path(args.record_a), Path(args.record_b), quiet)
            if args.command == "norms":
                return execute_norms(Path(args.snapshot), args.k, quiet)
            raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, ShapeMismatchError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BlowupError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
