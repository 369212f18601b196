"""Command-line entry point.

Exit codes: 0 success, 1 validation error, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from ..core import UsageError
from . import export
from .config import load_config, parse_processors, processors_label
from .stats import parallel_runs, runs_curve, trial_stats

OK, INVALID, FAILED = 0, 1, 2


def _read_logs(logdir: Path) -> dict[int, list[dict]]:
    files = sorted(logdir.glob("trial_*_log.csv"))
    if not files:
        raise UsageError(f"no trial logs (trial_*_log.csv) in {logdir}")
    return {int(f.name.split("_")[1]): export.read_csv(f) for f in files}


def _manifest(logdir: Path) -> dict:
    path = logdir / "manifest.json"
    return json.loads(path.read_text()) if path.exists() else {}


def _label(logdir: Path) -> str:
    return _manifest(logdir).get("config", {}).get("label", logdir.name)


def _failed(logdir: Path) -> set[int]:
    return {t["trial"] for t in _manifest(logdir).get("trials", []) if t.get("status") != "ok"}


def _bests(logdir: Path) -> tuple[list[tuple[int, float]], int]:
    failed = _failed(logdir)
    out = []
    for trial, rows in _read_logs(logdir).items():
        if trial in failed or not rows:
            continue
        out.append((trial, float(rows[-1]["best_so_far"])))
    return out, len(failed)


def cmd_run(args) -> int:
    from .experiment import run_experiment

    cfg = load_config(args.config)
    if args.workers is not None:
        cfg.workers = args.workers
    report = run_experiment(cfg, output_dir=args.output)
    out = args.output or cfg.output_dir
    print(f"{cfg.label}: {len(report.trials)} trial(s), {len(report.failed)} failed, outputs in {out}")
    if report.stats is not None:
        s = report.stats
        print(f"Max {s.max:.6g}  Min {s.min:.6g}  Mean {s.mean:.6g}  Median {s.median:.6g}  Std {s.std:.6g}")
    return FAILED if report.failed and len(report.failed) == len(report.trials) else OK


def cmd_stats(args) -> int:
    logdir = Path(args.logdir)
    bests, failed = _bests(logdir)
    values = [v for _, v in bests]
    print("label,trials,failed,Max,Min,Mean,Median,Std")
    s = trial_stats(values).as_tuple() if values else (math.nan,) * 5
    print(",".join([_label(logdir), str(len(values)), str(failed), *[export.fmt(x) for x in s]]))
    return OK


def cmd_runs(args) -> int:
    logdir = Path(args.logdir)
    procs = parse_processors(args.processors)
    print("trial,evaluations," + ",".join(f"runs_P{processors_label(p)}" for p in procs))
    for trial, rows in _read_logs(logdir).items():
        sizes = []
        last = None
        for r in rows:
            if r["batch"] != last:
                sizes.append(0)
                last = r["batch"]
            sizes[-1] += 1
        print(",".join([str(trial), str(len(rows)), *[str(parallel_runs(sizes, p)) for p in procs]]))
    return OK


def cmd_export(args) -> int:
    out = Path(args.output)
    procs = parse_processors(args.processors)
    agg, bean = [], []
    for d in args.logdirs:
        logdir = Path(d)
        label = _label(logdir)
        solver = _manifest(logdir).get("config", {}).get("solver", "")
        seeds = {t["trial"]: t["seed"] for t in _manifest(logdir).get("trials", [])}
        bests, failed = _bests(logdir)
        agg.append(export.aggregate_row(label, solver, [v for _, v in bests], failed))
        bean += [[label, t, seeds.get(t, ""), v] for t, v in bests]
        logs = {
            t: ([r["batch"] for r in rows], [float(r["value"]) for r in rows])
            for t, rows in _read_logs(logdir).items()
        }
        sub = out / label if len(args.logdirs) > 1 else out
        export.write_runs(sub, label, logs, procs)
    export.write_aggregate(out / "aggregate.csv", agg)
    export.write_beanplot(out / "beanplot.csv", bean)
    print(f"wrote {len(agg)} aggregate row(s) and {len(bean)} beanplot point(s) to {out}")
    return OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="wellopt", description="Derivative-free well-control optimization experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment config (JSON)")
    r.add_argument("config")
    r.add_argument("--output", help="override the output directory")
    r.add_argument("--workers", type=int, help="evaluation pool size")
    r.set_defaults(func=cmd_run)
    s = sub.add_parser("stats", help="trial statistics of a log directory")
    s.add_argument("logdir")
    s.set_defaults(func=cmd_stats)
    n = sub.add_parser("runs", help="parallel-run counts of a log directory")
    n.add_argument("logdir")
    n.add_argument("--processors", default="1,8,32,inf")
    n.set_defaults(func=cmd_runs)
    e = sub.add_parser("export", help="aggregate, beanplot and runs CSVs from log directories")
    e.add_argument("logdirs", nargs="+")
    e.add_argument("--output", required=True)
    e.add_argument("--processors", default="1,8,32,inf")
    e.set_defaults(func=cmd_export)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INVALID
    except (OSError, RuntimeError, ArithmeticError) as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return FAILED


if __name__ == "__main__":
    sys.exit(main())
