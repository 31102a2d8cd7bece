"""CSV and metrics-file output for scenario results and static sweeps."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import IoError
from .experiments import CHANNELS, ScenarioResult, StaticSweep

SWEEP_COLUMNS = ("q_l", "x_r", "tau_ldm", "tau_sdm", "k_ldm", "k_sdm")


def _fmt(value) -> str:
    return "%.9g" % value


def _write_rows(path, header, rows) -> None:
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def write_csv(result: ScenarioResult, path) -> None:
    """One header row, then one row per logged sample in :data:`CHANNELS` order."""
    columns = [result.series[name] for name in CHANNELS]
    _write_rows(path, CHANNELS, zip(*columns))


def read_csv(path) -> dict:
    """Column name to float array; inverse of :func:`write_csv` and :func:`write_sweep_csv`."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = [[float(v) for v in row] for row in reader]
    except (OSError, StopIteration, ValueError) as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return {name: data[:, i] for i, name in enumerate(header)}


def write_metrics(result: ScenarioResult, path) -> None:
    try:
        Path(path).write_text(json.dumps({"scenario": result.scenario, **result.metrics},
                                         indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def write_sweep_csv(sweep: StaticSweep, path) -> None:
    _write_rows(path, SWEEP_COLUMNS, sweep.rows())
