"""Common iteration protocol shared by GPS, PSO and CMA-ES.

An optimizer evaluates one batch per iteration. The driver checks before each
iteration that the whole batch fits into the budget; a batch that does not fit
is never started. The multiscale wrapper reuses the same driver with a
per-scale evaluation cap and a scale-level stopping rule.
"""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .core import EvaluationLog, ObjectiveSpec, OptimizeResult, UsageError, denormalize, evaluate_batch, normalize


class BudgetTooSmall(UsageError):
    """The remaining budget cannot cover an optimizer's initial evaluations."""


class Optimizer:
    """Base class: subclasses implement ``start``, ``batch_size`` and ``iterate``."""

    name = "optimizer"

    def __init__(self, spec: ObjectiveSpec, x0, log: EvaluationLog, executor=None):
        x0 = np.asarray(x0, dtype=float).ravel()
        if x0.size != spec.dim:
            raise UsageError(f"x0 has {x0.size} entries, objective has {spec.dim}")
        if not spec.bounds.contains(x0):
            raise UsageError("x0 violates the bounds")
        self.spec = spec
        self.log = log
        self.executor = executor
        self.z0 = np.clip(normalize(x0, spec.bounds), 0.0, 1.0)
        self.best_z: np.ndarray | None = None
        self.best_value = -math.inf
        self.iterations = 0
        self.stop_reason: str | None = None

    # -- evaluation ------------------------------------------------------
    def evaluate(self, zs) -> np.ndarray:
        values = np.asarray(evaluate_batch(zs, self.spec, self.log, self.executor), dtype=float)
        k = int(np.argmax(values))
        if values[k] > self.best_value:
            self.best_value = float(values[k])
            self.best_z = np.array(zs[k], dtype=float)
        return values

    # -- protocol --------------------------------------------------------
    def start(self):
        raise NotImplementedError

    def start_size(self) -> int:
        raise NotImplementedError

    def batch_size(self) -> int:
        raise NotImplementedError

    def iterate(self):
        raise NotImplementedError

    @property
    def incumbent(self) -> np.ndarray:
        """Normalized point the optimizer currently regards as its iterate."""
        return self.best_z

    def result(self) -> OptimizeResult:
        x = denormalize(self.best_z, self.spec.bounds) if self.best_z is not None else None
        return OptimizeResult(x, self.best_value, self.log, self.iterations, self.log.consumed, self.stop_reason or "")


def drive(
    opt: Optimizer,
    cap: int | None = None,
    stop: Callable[[Optimizer], bool] | None = None,
) -> str:
    """Run ``opt`` until it stops itself, the budget runs out or ``stop`` fires.

    ``cap`` limits the evaluations spent by this call on top of the log's own
    budget. Returns the stop reason, which is also stored on ``opt``.
    """
    first = opt.log.consumed

    def room() -> int:
        left = opt.log.remaining
        if cap is not None:
            left = min(left, cap - (opt.log.consumed - first))
        return left

    if opt.start_size() > room():
        raise BudgetTooSmall(f"budget {room()} cannot cover the {opt.start_size()} initial evaluations of {opt.name}")
    opt.start()
    while opt.stop_reason is None:
        n = opt.batch_size()
        if n > room():
            opt.stop_reason = "budget"
            break
        opt.iterate()
        if opt.stop_reason is None and stop is not None and stop(opt):
            opt.stop_reason = "scale"
    return opt.stop_reason
