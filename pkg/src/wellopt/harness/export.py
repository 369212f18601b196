"""Deterministic CSV/JSON writers. Every file is written to a temporary name
and moved into place, and nothing time-dependent is recorded, so a rerun with
the same configuration reproduces the files byte for byte."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path

from .config import processors_label
from .stats import runs_curve, trial_stats

AGGREGATE_COLUMNS = ["label", "solver", "trials", "failed", "Max", "Min", "Mean", "Median", "Std"]
LOG_COLUMNS = ["evaluation", "batch", "steps_per_well", "value", "best_so_far"]


def fmt(x) -> str:
    """Shortest round-tripping text for a float; ``nan``/``inf`` spelled out."""
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x)
    return str(x)


def atomic_write(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path, header, rows) -> Path:
    return atomic_write(path, csv_text(header, rows))


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def trial_log_name(trial: int) -> str:
    return f"trial_{trial:03d}_log.csv"


def trial_curve_name(trial: int) -> str:
    return f"trial_{trial:03d}_curve.csv"


def write_trial_log(directory, trial: int, rows) -> Path:
    """``rows`` are ``(evaluation, batch, steps_per_well, value, best_so_far)``."""
    return write_csv(Path(directory) / trial_log_name(trial), LOG_COLUMNS, rows)


def write_trial_curve(directory, trial: int, curve) -> Path:
    return write_csv(Path(directory) / trial_curve_name(trial), ["evaluations", "best_npv"], curve)


def write_best_schedule(directory, trial: int, well_names, steps: int, x) -> Path:
    rows = []
    for w, name in enumerate(well_names):
        rows.append([name, *[float(v) for v in x[w * steps:(w + 1) * steps]]])
    header = ["well", *[f"step_{k + 1}" for k in range(steps)]]
    return write_csv(Path(directory) / f"trial_{trial:03d}_best.csv", header, rows)


def aggregate_row(label: str, solver: str, bests, failed: int) -> list:
    if bests:
        s = trial_stats(bests).as_tuple()
    else:
        s = (math.nan,) * 5
    return [label, solver, len(bests), failed, *s]


def write_aggregate(path, rows) -> Path:
    return write_csv(path, AGGREGATE_COLUMNS, rows)


def write_beanplot(path, rows) -> Path:
    """``rows`` are ``(label, trial, seed, npv)``."""
    return write_csv(path, ["label", "trial", "seed", "npv"], rows)


def write_runs(directory, label: str, logs: dict, processors) -> list[Path]:
    """One ``runs_P<p>.csv`` per processor count with best NPV after each run.

    ``logs`` maps trial index to ``(batch_ids, values)``.
    """
    paths = []
    for p in processors:
        rows = []
        for trial in sorted(logs):
            batch_ids, values = logs[trial]
            for run, evals, best in runs_curve(batch_ids, values, p):
                rows.append([label, trial, run, evals, best])
        paths.append(
            write_csv(Path(directory) / f"runs_P{processors_label(p)}.csv",
                      ["label", "trial", "run", "evaluations", "best_npv"], rows)
        )
    return paths


def write_json(path, data) -> Path:
    return atomic_write(path, json.dumps(data, indent=2, sort_keys=True, allow_nan=True) + "\n")
