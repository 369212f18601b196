"""Subprocess adapter for an external simulator.

Contract: the command is run with two extra arguments, an input path and an
output path. The input is JSON ``{"wells": [...names], "steps_per_well": N,
"horizon": days, "rates": [[...], ...]}`` with one row per controlled well.
The external program must write JSON ``{"dt": [...], "t": [...], "q_op":
[...], "q_wp": [...], "q_wi": [...], "q_gp": [...]}`` to the output path and
exit with status 0.
"""
from __future__ import annotations

import json
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path
from types import SimpleNamespace

import numpy as np

from .simulator import SimulationError

PROFILE_KEYS = ("dt", "t", "q_op", "q_wp", "q_wi", "q_gp")


@dataclass(frozen=True)
class ExternalSimulator:
    command: tuple[str, ...]
    timeout: float | None = None

    def __call__(self, model, fluid, schedule):
        names = [w.name for w in model.controlled_wells]
        payload = {
            "wells": names,
            "steps_per_well": schedule.steps_per_well,
            "horizon": schedule.horizon,
            "rates": schedule.by_well().tolist(),
        }
        with tempfile.TemporaryDirectory() as tmp:
            src = Path(tmp) / "schedule.json"
            dst = Path(tmp) / "profile.json"
            src.write_text(json.dumps(payload))
            proc = subprocess.run(
                [*self.command, str(src), str(dst)], capture_output=True, text=True, timeout=self.timeout
            )
            if proc.returncode != 0:
                raise SimulationError(f"external simulator exited with {proc.returncode}: {proc.stderr.strip()}", 0.0)
            try:
                data = json.loads(dst.read_text())
            except (OSError, ValueError) as exc:
                raise SimulationError(f"external simulator wrote no readable profile: {exc}", 0.0) from exc
        missing = [k for k in PROFILE_KEYS if k not in data]
        if missing:
            raise SimulationError(f"profile is missing {missing}", 0.0)
        arrays = {k: np.asarray(data[k], dtype=float) for k in PROFILE_KEYS}
        if any(a.shape != (schedule.steps_per_well,) for a in arrays.values()):
            raise SimulationError("profile arrays must have one entry per control step", 0.0)
        return SimpleNamespace(**arrays)
