"""Persistence of run artifacts.

A run record is a directory: the canonical config echo (written before
anything else so partial failures stay diagnosable), the per-iteration
series, reports, and binary field snapshots.  All numerics are written
with shortest round-trip float formatting, so identical configurations
reproduce byte-identical files; wall-clock timings live in their own
file and are excluded from reproducibility comparisons.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .config import RunConfig, config_echo
from .norms import NormReport
from .verify import VerificationReport

__all__ = ["RunRecord", "ITERATION_COLUMNS", "write_config_echo", "write_run_record",
           "load_iterations", "load_report"]

ITERATION_COLUMNS = ("ell", "r_norm", "r_norm_full", "R_norm", "q", "Q", "modulus_dev")

CONFIG_FILE = "config.toml"
ITERATIONS_FILE = "iterations.csv"
TIMINGS_FILE = "timings.csv"
REPORT_FILE = "report.json"
NORMS_FILE = "final_norms.csv"


@dataclass
class RunRecord:
    """Everything one experiment produced, ready to persist."""

    config: RunConfig
    status: str
    iterations: list[dict]
    timings: list[dict]
    final_norms: NormReport | None
    verification: VerificationReport | None
    summary: dict
    version: str = __version__


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_config_echo(outdir: Path, cfg: RunConfig):
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / CONFIG_FILE).write_text(config_echo(cfg))


def write_run_record(outdir: Path, record: RunRecord):
    outdir = Path(outdir)
    write_config_echo(outdir, record.config)

    with open(outdir / ITERATIONS_FILE, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ITERATION_COLUMNS)
        for row in record.iterations:
            writer.writerow(_cell(row.get(col)) for col in ITERATION_COLUMNS)

    with open(outdir / TIMINGS_FILE, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("ell", "wall_s"))
        for row in record.timings:
            writer.writerow((row["ell"], _cell(row["wall_s"])))

    if record.final_norms is not None:
        flat = record.final_norms.to_flat_dict()
        with open(outdir / NORMS_FILE, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(flat.keys())
            writer.writerow(_cell(v) for v in flat.values())

    report = {
        "version": record.version,
        "status": record.status,
        "summary": record.summary,
        "final_norms": record.final_norms.to_flat_dict() if record.final_norms else None,
        "verification": record.verification.to_dict() if record.verification else None,
    }
    (outdir / REPORT_FILE).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")


def load_iterations(outdir: Path) -> list[dict]:
    path = Path(outdir) / ITERATIONS_FILE
    rows = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            parsed = {}
            for key, value in row.items():
                if value == "" or value is None:
                    parsed[key] = None
                elif key == "ell":
                    parsed[key] = int(value)
                else:
                    parsed[key] = float(value)
            rows.append(parsed)
    return rows


def load_report(outdir: Path) -> dict:
    return json.loads((Path(outdir) / REPORT_FILE).read_text())


def iteration_rows(state) -> list[dict]:
    """Flatten an IterationState's histories into CSV-ready rows.

    Row j carries the ratio q_{j-1} = R_j / R_{j-1} (the ratio *into*
    iteration j); the first row has none.
    """
    rows = []
    for j in range(state.ell):
        rows.append(
            {
                "ell": j,
                "r_norm": state.r_norm_history[j],
                "r_norm_full": state.r_norm_full_history[j],
                "R_norm": state.R_norm_history[j],
                "q": state.q_history[j - 1] if 1 <= j <= len(state.q_history) else None,
                "Q": state.Q_history[j],
                "modulus_dev": state.modulus_history[j],
            }
        )
    return rows


def timing_rows(state) -> list[dict]:
    return [{"ell": j, "wall_s": w} for j, w in enumerate(state.wall_history)]
