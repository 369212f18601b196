"""Shared contracts for the optimizers: bounds, schedules, objectives, budgets.

All optimizers work on the unit box ``[0, 1]^D``. An :class:`ObjectiveSpec`
carries the physical bounds; :func:`evaluate_batch` maps normalized points back
to physical units before calling the evaluator and appends every call to an
:class:`EvaluationLog`.
"""
from __future__ import annotations

import math
from concurrent.futures import Executor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np


class UsageError(ValueError):
    """Raised when a caller violates a documented precondition."""


class BudgetExhausted(RuntimeError):
    """Raised when a batch does not fit into the remaining evaluation budget."""


class EvaluationError(RuntimeError):
    """One or more evaluations in a batch failed.

    The failed entries are still recorded in the log (value ``nan``), so the
    budget reflects every simulator call that was attempted.
    """

    def __init__(self, failures: list[tuple[int, BaseException]]):
        self.failures = failures
        index, exc = failures[0]
        super().__init__(f"{len(failures)} evaluation(s) failed; first at batch position {index}: {exc!r}")


def make_rng(seed: int) -> np.random.Generator:
    """Seeded PCG64 generator; every stochastic component draws from one of these."""
    return np.random.Generator(np.random.PCG64(int(seed)))


@dataclass(frozen=True)
class Bounds:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float).ravel()
        upper = np.asarray(self.upper, dtype=float).ravel()
        if lower.shape != upper.shape:
            raise UsageError(f"bounds length mismatch: {lower.size} vs {upper.size}")
        if lower.size < 1:
            raise UsageError("bounds must have at least one variable")
        if not np.all(lower < upper):
            bad = int(np.argmin(upper - lower))
            raise UsageError(f"lower[{bad}]={lower[bad]} is not below upper[{bad}]={upper[bad]}")
        lower.flags.writeable = False
        upper.flags.writeable = False
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, u) -> bool:
        u = np.asarray(u, dtype=float)
        return bool(np.all(u >= self.lower) and np.all(u <= self.upper))

    def tile(self, reps: int) -> "Bounds":
        """Bounds for a vector made of ``reps`` consecutive copies of each entry."""
        return Bounds(np.repeat(self.lower, reps), np.repeat(self.upper, reps))


def _check_dim(v: np.ndarray, bounds: Bounds):
    if v.shape[-1] != bounds.dim:
        raise UsageError(f"vector has {v.shape[-1]} entries, bounds have {bounds.dim}")


def normalize(u, bounds: Bounds) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    _check_dim(u, bounds)
    return (u - bounds.lower) / bounds.width


def denormalize(z, bounds: Bounds) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    _check_dim(z, bounds)
    return bounds.lower + z * bounds.width


@dataclass
class ControlSchedule:
    """Piecewise-constant well rates.

    ``values`` is flattened well-major: all steps of well 1, then well 2, and
    so on, so ``values.reshape(wells, steps_per_well)`` gives one row per well.
    """

    values: np.ndarray
    wells: int
    steps_per_well: int
    horizon: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).ravel()
        if self.wells < 1 or self.steps_per_well < 1:
            raise UsageError("a schedule needs at least one well and one step")
        if self.values.size != self.wells * self.steps_per_well:
            raise UsageError(
                f"{self.values.size} values do not match {self.wells} wells x {self.steps_per_well} steps"
            )
        if not self.horizon > 0:
            raise UsageError("horizon must be positive")

    @classmethod
    def from_rates(cls, rates, horizon: float) -> "ControlSchedule":
        rates = np.atleast_2d(np.asarray(rates, dtype=float))
        return cls(rates.ravel(), rates.shape[0], rates.shape[1], horizon)

    @classmethod
    def constant(cls, per_well, steps_per_well: int, horizon: float) -> "ControlSchedule":
        per_well = np.asarray(per_well, dtype=float)
        return cls.from_rates(np.repeat(per_well[:, None], steps_per_well, axis=1), horizon)

    @property
    def size(self) -> int:
        return self.values.size

    def by_well(self) -> np.ndarray:
        return self.values.reshape(self.wells, self.steps_per_well)

    @property
    def step_length(self) -> float:
        return self.horizon / self.steps_per_well

    @property
    def step_edges(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.steps_per_well + 1)


@dataclass
class ObjectiveSpec:
    """A black-box objective to be maximized over a box.

    ``evaluator`` receives a vector in physical units and returns a float. It
    must be pure; for process-pool evaluation it must also be picklable.
    """

    evaluator: Callable[[np.ndarray], float]
    bounds: Bounds
    name: str = "objective"
    sense: str = "maximize"

    @property
    def dim(self) -> int:
        return self.bounds.dim


@dataclass
class Evaluation:
    batch: int
    point: np.ndarray
    value: float
    error: str | None = None


@dataclass
class EvaluationLog:
    budget_max: int
    entries: list[Evaluation] = field(default_factory=list)
    _next_batch: int = 0

    def __post_init__(self):
        if self.budget_max < 0:
            raise UsageError("budget_max must be non-negative")

    @property
    def consumed(self) -> int:
        return len(self.entries)

    @property
    def remaining(self) -> int:
        return self.budget_max - len(self.entries)

    def new_batch(self) -> int:
        b = self._next_batch
        self._next_batch += 1
        return b

    def values(self) -> np.ndarray:
        return np.array([e.value for e in self.entries], dtype=float)

    def batch_sizes(self) -> list[int]:
        """Sizes of the recorded batches in proposal order."""
        sizes: list[int] = []
        last = None
        for e in self.entries:
            if e.batch != last:
                sizes.append(0)
                last = e.batch
            sizes[-1] += 1
        return sizes

    def best(self) -> Evaluation | None:
        best = None
        for e in self.entries:
            if math.isnan(e.value):
                continue
            if best is None or e.value > best.value:
                best = e
        return best


def _call(evaluator, u):
    try:
        return float(evaluator(u)), None
    except Exception as exc:  # noqa: BLE001 - failure is recorded, not swallowed
        return math.nan, exc


def evaluate_batch(
    points: Sequence[np.ndarray] | np.ndarray,
    spec: ObjectiveSpec,
    log: EvaluationLog,
    executor: Executor | None = None,
) -> list[float]:
    """Evaluate normalized ``points`` as one batch and log them in order.

    The whole batch is rejected up front if it does not fit the budget. If any
    evaluator call raises, all results are still logged and an
    :class:`EvaluationError` is raised afterwards.
    """
    zs = [np.asarray(p, dtype=float) for p in points]
    if len(zs) > log.remaining:
        raise BudgetExhausted(f"batch of {len(zs)} exceeds remaining budget {log.remaining}")
    us = [denormalize(z, spec.bounds) for z in zs]
    if executor is None:
        results = [_call(spec.evaluator, u) for u in us]
    else:
        results = list(executor.map(_call, [spec.evaluator] * len(us), us))
    batch = log.new_batch()
    failures = []
    for i, (u, (value, exc)) in enumerate(zip(us, results)):
        log.entries.append(Evaluation(batch, u, value, None if exc is None else repr(exc)))
        if exc is not None:
            failures.append((i, exc))
    if failures:
        raise EvaluationError(failures)
    return [v for v, _ in results]


def best_so_far_curve(log: EvaluationLog | Iterable[float]) -> list[tuple[int, float]]:
    """Running maximum of the logged values as ``(consumed, best)`` pairs."""
    values = log.values() if isinstance(log, EvaluationLog) else np.asarray(list(log), dtype=float)
    curve = []
    best = -math.inf
    for k, v in enumerate(values, start=1):
        if v > best:
            best = float(v)
        curve.append((k, best))
    return curve


@dataclass
class OptimizeResult:
    """Outcome of one optimizer run; ``x`` is in physical units."""

    x: np.ndarray
    value: float
    log: EvaluationLog
    iterations: int
    evaluations: int
    stop_reason: str
