"""Generalized pattern search with the maximal positive basis and complete poll."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import EvaluationLog, ObjectiveSpec, OptimizeResult
from .optimizer import Optimizer, drive

REJECTED = None
EXPANSION = 2.0
CONTRACTION = 0.5
MAX_STEP = 0.5  # keeps at least one of +-e_j feasible for every j


@dataclass
class GpsState:
    center: np.ndarray
    center_value: float
    step: float = 0.25
    iteration: int = 0


def poll_points(state: GpsState) -> list:
    """``2D`` pairs ``(index, point or REJECTED)`` in the order +e_1..+e_D, -e_1..-e_D."""
    d = state.center.size
    out = []
    for k in range(2 * d):
        j = k % d
        z = state.center.copy()
        z[j] += state.step if k < d else -state.step
        out.append((k, z if 0.0 <= z[j] <= 1.0 else REJECTED))
    return out


def gps_step(state: GpsState, polls: list, poll_values) -> GpsState:
    """Move to the best improving poll point and expand, or contract in place.

    ``poll_values`` is aligned with ``polls``; rejected entries are ignored.
    """
    best_k, best_v = -1, state.center_value
    for (k, z), v in zip(polls, poll_values):
        if z is REJECTED or v is None or math.isnan(v):
            continue
        if v > best_v:
            best_k, best_v = k, v
    if best_k >= 0:
        return GpsState(polls[best_k][1].copy(), float(best_v), min(state.step * EXPANSION, MAX_STEP), state.iteration + 1)
    return GpsState(state.center.copy(), state.center_value, state.step * CONTRACTION, state.iteration + 1)


class Gps(Optimizer):
    name = "GPS"

    def __init__(self, spec: ObjectiveSpec, x0, log: EvaluationLog, executor=None, step0=0.25, min_step=1e-3):
        super().__init__(spec, x0, log, executor)
        self.state = GpsState(self.z0.copy(), -math.inf, float(step0))
        self.min_step = float(min_step)
        self._polls = None

    def start_size(self):
        return 1

    def start(self):
        values = self.evaluate([self.state.center])
        self.state.center_value = float(values[0])
        self._check_step()

    def _check_step(self):
        if self.state.step < self.min_step:
            self.stop_reason = "min_step"

    def batch_size(self):
        self._polls = poll_points(self.state)
        return sum(z is not REJECTED for _, z in self._polls)

    def iterate(self):
        polls = self._polls if self._polls is not None else poll_points(self.state)
        feasible = [z for _, z in polls if z is not REJECTED]
        values = iter(self.evaluate(feasible))
        aligned = [None if z is REJECTED else next(values) for _, z in polls]
        self.state = gps_step(self.state, polls, aligned)
        self._polls = None
        self.iterations = self.state.iteration
        self._check_step()

    @property
    def incumbent(self):
        return self.state.center


def run_gps(spec: ObjectiveSpec, x0, budget: int, min_step: float = 1e-3, step0: float = 0.25, executor=None) -> OptimizeResult:
    """Pattern search from ``x0`` until the mesh drops below ``min_step`` or the budget runs out."""
    log = EvaluationLog(budget)
    opt = Gps(spec, x0, log, executor, step0=step0, min_step=min_step)
    drive(opt)
    return opt.result()
