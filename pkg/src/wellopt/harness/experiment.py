"""Seeded multi-trial experiments over the reservoir objective."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__
from ..cmaes import NumericDegeneracyError
from ..core import EvaluationError, EvaluationLog, best_so_far_curve, make_rng
from ..multiscale import make_optimizer, run_multiscale
from ..optimizer import drive
from ..reservoir.model import resolve_model
from ..reservoir.objective import NpvFamily
from ..reservoir.simulator import SimulationError
from . import export
from .config import ExperimentConfig, processors_label
from .stats import TrialStats, parallel_runs, trial_stats

FAILURES = (EvaluationError, SimulationError, NumericDegeneracyError)


@dataclass
class TrialResult:
    trial: int
    seed: int
    status: str  # "ok" or "failed"
    best_value: float
    best_x: np.ndarray | None
    evaluations: int
    batches: int
    stop_reason: str
    log: EvaluationLog
    steps: list[int]  # steps per well of each logged evaluation
    error: str | None = None
    scales: list = field(default_factory=list)


@dataclass
class TrialReport:
    config: ExperimentConfig
    trials: list[TrialResult]
    stats: TrialStats | None
    files: list[str]

    @property
    def bests(self) -> list[float]:
        return [t.best_value for t in self.trials if t.status == "ok"]

    @property
    def failed(self) -> list[int]:
        return [t.trial for t in self.trials if t.status != "ok"]


def _run_trial(cfg: ExperimentConfig, family: NpvFamily, trial: int, seed: int, executor) -> TrialResult:
    model = family.model
    wells = family.wells
    budget = cfg.resolve_budget(wells)
    rng = make_rng(seed)
    params = dict(cfg.solver_params)
    if cfg.multiscale is None:
        steps = int(cfg.steps_per_well)
        x0 = np.repeat(model.initial_rates(), steps)
        log = EvaluationLog(budget)
        opt = make_optimizer(cfg.solver, family(steps), x0, log, rng, executor, **params)
        try:
            reason = drive(opt)
            status, error = "ok", None
        except FAILURES as exc:
            reason, status, error = "failed", "failed", repr(exc)
        res = opt.result()
        return TrialResult(trial, seed, status, res.value, res.x, log.consumed, len(log.batch_sizes()),
                           reason, log, [steps] * log.consumed, error)
    ms = cfg.multiscale
    x0 = np.repeat(model.initial_rates(), ms.n0)
    try:
        out = run_multiscale(ms, cfg.solver, family, x0, budget, rng=rng, executor=executor, wells=wells,
                             solver_params=params)
    except FAILURES as exc:
        empty = EvaluationLog(budget)
        return TrialResult(trial, seed, "failed", math.nan, None, 0, 0, "failed", empty, [], repr(exc))
    steps = []
    for s in out.scales:
        steps += [s.steps_per_well] * s.evaluations
    last = out.scales[-1]
    reason = out.stop_reason + (" (truncated)" if out.truncated else "")
    return TrialResult(trial, seed, "ok", last.best_value, last.best_x, out.log.consumed,
                       len(out.log.batch_sizes()), reason, out.log, steps, None, out.scales)


def _log_rows(tr: TrialResult):
    best = -math.inf
    rows = []
    for k, (e, steps) in enumerate(zip(tr.log.entries, tr.steps), start=1):
        if e.value > best:
            best = e.value
        rows.append([k, e.batch, steps, float(e.value), float(best)])
    return rows


def run_experiment(cfg: ExperimentConfig, output_dir=None, write=True) -> TrialReport:
    """Run every trial of ``cfg`` and, if ``write``, export logs, tables and a manifest."""
    model, fluid, econ = resolve_model(cfg.model)
    family = NpvFamily(model, fluid, econ)
    out_dir = Path(output_dir if output_dir is not None else cfg.output_dir)
    executor = ProcessPoolExecutor(cfg.workers) if cfg.workers > 1 else None
    try:
        trials = [_run_trial(cfg, family, t, seed, executor) for t, seed in enumerate(cfg.seeds())]
    finally:
        if executor is not None:
            executor.shutdown()
    bests = [t.best_value for t in trials if t.status == "ok"]
    stats = trial_stats(bests) if bests else None
    report = TrialReport(cfg, trials, stats, [])
    if write:
        report.files = write_outputs(report, out_dir, [w.name for w in model.controlled_wells])
    return report


def write_outputs(report: TrialReport, out_dir: Path, well_names) -> list[str]:
    cfg = report.config
    files = []
    logs = {}
    for tr in report.trials:
        files.append(export.write_trial_log(out_dir, tr.trial, _log_rows(tr)))
        files.append(export.write_trial_curve(out_dir, tr.trial, best_so_far_curve(tr.log)))
        if tr.best_x is not None:
            files.append(export.write_best_schedule(out_dir, tr.trial, well_names, tr.best_x.size // len(well_names), tr.best_x))
        logs[tr.trial] = ([e.batch for e in tr.log.entries], [e.value for e in tr.log.entries])
    ok = [t for t in report.trials if t.status == "ok"]
    files.append(export.write_aggregate(out_dir / "aggregate.csv",
                                        [export.aggregate_row(cfg.label, cfg.solver, [t.best_value for t in ok],
                                                              len(report.trials) - len(ok))]))
    files.append(export.write_beanplot(out_dir / "beanplot.csv",
                                       [[cfg.label, t.trial, t.seed, t.best_value] for t in ok]))
    files += export.write_runs(out_dir, cfg.label, logs, cfg.processors)
    manifest = {
        "version": __version__,
        "config": cfg.to_dict(),
        "config_hash": cfg.config_hash(),
        "seeds": cfg.seeds(),
        "trials": [
            {
                "trial": t.trial,
                "seed": t.seed,
                "status": t.status,
                "best_npv": export.fmt(float(t.best_value)),
                "evaluations": t.evaluations,
                "batches": t.batches,
                "stop_reason": t.stop_reason,
                "error": t.error,
                "scales": [
                    {"steps_per_well": s.steps_per_well, "best_npv": export.fmt(float(s.best_value)),
                     "start_npv": export.fmt(float(s.start_value)), "evaluations": s.evaluations,
                     "stop_reason": s.stop_reason}
                    for s in t.scales
                ],
                "runs": {processors_label(p): parallel_runs(t.log, p) for p in cfg.processors},
            }
            for t in report.trials
        ],
    }
    files.append(export.write_json(out_dir / "manifest.json", manifest))
    return sorted(str(Path(f).name) for f in files)
