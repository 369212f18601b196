import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wellopt.core import UsageError
from wellopt.harness.cli import main
from wellopt.harness.config import ExperimentConfig, config_from_dict, load_config, parse_processors
from wellopt.harness.experiment import run_experiment
from wellopt.harness.export import read_csv
from wellopt.harness.stats import parallel_runs, runs_curve, trial_stats
from wellopt.multiscale import configuration


def test_trial_stats_examples():
    assert trial_stats([5, 5, 5]).as_tuple() == (5, 5, 5, 5, 0)
    assert trial_stats([1, 2, 3, 4]).median == 2.5
    assert trial_stats([1, 3]).std == pytest.approx(math.sqrt(2), rel=1e-15)
    assert math.isnan(trial_stats([7]).std)
    with pytest.raises(UsageError):
        trial_stats([])


def test_parallel_runs_examples():
    assert parallel_runs([100, 100], 32) == 8
    assert parallel_runs([1, 8, 8], 1) == 17
    assert parallel_runs([1, 8, 8], 8) == 3
    assert parallel_runs([1, 8, 8], math.inf) == 3
    with pytest.raises(UsageError):
        parallel_runs([1], 0)


@given(st.lists(st.integers(1, 200), min_size=1, max_size=40))
def test_parallel_runs_properties(sizes):
    assert parallel_runs(sizes, 1) == sum(sizes)
    counts = [parallel_runs(sizes, p) for p in (1, 2, 3, 8, 32, 100, 1000, math.inf)]
    assert all(a >= b for a, b in zip(counts, counts[1:]))
    assert parallel_runs(sizes, max(sizes)) == len(sizes) == counts[-1]


def test_runs_curve():
    curve = runs_curve([0, 1, 1, 1], [1.0, 0.5, 3.0, 2.0], 2)
    assert curve == [(1, 1, 1.0), (2, 3, 3.0), (3, 4, 3.0)]
    assert len(runs_curve([0, 1, 1, 1], [1, 2, 3, 4], math.inf)) == 2


def test_parse_processors():
    assert parse_processors("8,32,inf") == [8, 32, math.inf]
    assert parse_processors([1, "inf"]) == [1, math.inf]
    with pytest.raises(UsageError):
        parse_processors("0")
    with pytest.raises(UsageError):
        parse_processors("x")


def test_config_validation_and_presets():
    cfg = config_from_dict({"model": "model1-21", "solver": "cma-es", "case": "1C"})
    assert cfg.solver == "CMA-ES" and cfg.steps_per_well == 8 and cfg.resolve_budget(4) == 3200
    ms = config_from_dict({"model": "model1-21", "solver": "GPS",
                           "multiscale": {"configuration": "II", "max_steps": 8}, "budget": 3200, "trials": 10})
    assert ms.multiscale.scales == [2, 4, 8] and ms.resolve_budget(4) == 3200 and ms.effective_trials == 1
    for bad in (
        {"model": "m", "solver": "X", "case": "1A"},
        {"model": "m", "solver": "PSO"},
        {"model": "m", "solver": "PSO", "case": "1A", "multiscale": {"configuration": "I", "max_steps": 8}},
        {"model": "m", "solver": "PSO", "case": "1Z"},
        {"model": "m", "solver": "PSO", "case": "1A", "trials": 0},
        {"model": "m", "solver": "PSO", "case": "1A", "budget": "lots"},
        {"model": "m", "solver": "PSO", "case": "1A", "solver_params": {"sigma0": 0.3}},
        {"model": "m", "solver": "PSO", "case": "1A", "colour": "red"},
    ):
        with pytest.raises(UsageError):
            config_from_dict(bad)


def test_config_hash_semantics():
    base = dict(model="model1-21", solver="PSO", steps_per_well=2)
    h = ExperimentConfig(**base).config_hash()
    assert ExperimentConfig(**base, output_dir="elsewhere", workers=4).config_hash() == h
    assert config_from_dict({**base, "steps_per_well": None, "case": "1B"}).config_hash() == h
    for change in ({"seed_base": 1}, {"trials": 3}, {"budget": 50}, {"solver_params": {"lam": 10}},
                   {"steps_per_well": 8}, {"model": "model1"}):
        assert ExperimentConfig(**{**base, **change}).config_hash() != h


def _small(tmp_path, **kw):
    data = {"model": "model1-21", "solver": "PSO", "case": "1B", "budget": 40, "trials": 2,
            "solver_params": {"lam": 8}, "output_dir": str(tmp_path / "out")}
    data.update(kw)
    return config_from_dict(data)


def test_run_experiment_outputs(tmp_path):
    cfg = _small(tmp_path)
    report = run_experiment(cfg)
    out = tmp_path / "out"
    assert len(report.trials) == 2 and report.stats is not None
    assert {"trial_000_curve.csv", "trial_001_curve.csv", "aggregate.csv", "beanplot.csv",
            "manifest.json", "runs_P1.csv", "runs_Pinf.csv"} <= set(report.files)
    agg = read_csv(out / "aggregate.csv")
    assert len(agg) == 1
    bests = [float(read_csv(out / f"trial_00{t}_curve.csv")[-1]["best_npv"]) for t in range(2)]
    s = trial_stats(bests)
    assert float(agg[0]["Max"]) == s.max and float(agg[0]["Std"]) == s.std and float(agg[0]["Median"]) == s.median
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seeds"] == [0, 1] and manifest["config_hash"] == cfg.config_hash()
    assert manifest["trials"][0]["runs"]["1"] == 40 and manifest["trials"][0]["runs"]["inf"] == 5
    assert len(read_csv(out / "beanplot.csv")) == 2


def test_rerun_is_byte_identical(tmp_path):
    a = run_experiment(_small(tmp_path), output_dir=tmp_path / "a")
    b = run_experiment(_small(tmp_path), output_dir=tmp_path / "b")
    for name in a.files:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_gps_forced_single_trial(tmp_path):
    cfg = _small(tmp_path, solver="GPS", solver_params={}, budget=30, trials=5)
    report = run_experiment(cfg, write=False)
    assert len(report.trials) == 1


def test_failed_trial_excluded(tmp_path, monkeypatch):
    from wellopt.reservoir import objective

    calls = {"n": 0}
    real = objective.simulate

    def flaky(model, fluid, schedule):
        calls["n"] += 1
        if calls["n"] == 12:
            raise objective.__dict__.get("SimulationError", RuntimeError)("diverged")
        return real(model, fluid, schedule)

    monkeypatch.setattr(objective, "simulate", flaky)
    report = run_experiment(_small(tmp_path), output_dir=tmp_path / "o")
    assert report.failed == [0] and len(report.bests) == 1
    agg = read_csv(tmp_path / "o" / "aggregate.csv")[0]
    assert agg["failed"] == "1" and agg["trials"] == "1"


def test_worker_pool_matches_serial(tmp_path):
    a = run_experiment(_small(tmp_path, trials=1), output_dir=tmp_path / "a")
    b = run_experiment(_small(tmp_path, trials=1, workers=2), output_dir=tmp_path / "b")
    assert (tmp_path / "a" / "trial_000_log.csv").read_bytes() == (tmp_path / "b" / "trial_000_log.csv").read_bytes()


def test_cli_round_trip(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"model": "model1-21", "solver": "CMA-ES", "case": "1A", "budget": 30,
                                    "trials": 2, "output_dir": "res"}))
    assert main(["run", str(cfg_path)]) == 0
    out = tmp_path / "res"
    assert (out / "manifest.json").exists()
    capsys.readouterr()
    assert main(["stats", str(out)]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].startswith("label,trials") and lines[1].split(",")[1] == "2"
    assert main(["runs", str(out), "--processors", "1,8,inf"]) == 0
    rows = capsys.readouterr().out.strip().splitlines()[1:]
    for row in rows:
        trial, evals, p1, p8, pinf = row.split(",")
        assert evals == p1 and int(p8) >= int(pinf)
    assert main(["export", str(out), "--output", str(tmp_path / "exp")]) == 0
    assert (tmp_path / "exp" / "aggregate.csv").read_text() == (out / "aggregate.csv").read_text()
    assert (tmp_path / "exp" / "beanplot.csv").read_text() == (out / "beanplot.csv").read_text()


def test_cli_exit_codes(tmp_path):
    assert main(["run", str(tmp_path / "missing.json")]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text('{"model": "model1-21", "solver": "nope", "case": "1A"}')
    assert main(["run", str(bad)]) == 1
    assert main(["stats", str(tmp_path)]) == 1
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 1


def test_cli_runtime_failure_code(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"model": "model1-21", "solver": "PSO", "case": "1A", "budget": 10, "trials": 1,
                               "solver_params": {"lam": 5}, "output_dir": str(tmp_path / "o")}))
    blocker = tmp_path / "o"
    blocker.write_text("not a directory")
    assert main(["run", str(cfg)]) == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "wellopt", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "run" in proc.stdout
