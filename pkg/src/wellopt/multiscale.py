"""Successive-splitting multiscale optimization of piecewise-constant controls.

Start with ``n0`` control steps per well, optimize, split every step into
``ns`` equal steps carrying the same rate, and re-optimize from the refined
solution. Each scale gets ``remaining_budget / remaining_scales`` evaluations
and ends early once the incumbent stops moving; refinement stops once the
best value changes little between scales or ``max_steps`` is reached.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .cmaes import Cmaes
from .core import (
    ControlSchedule,
    EvaluationLog,
    ObjectiveSpec,
    UsageError,
    denormalize,
    make_rng,
)
from .gps import Gps
from .optimizer import BudgetTooSmall, drive
from .pso import Pso

SOLVERS = ("GPS", "PSO", "CMA-ES")


@dataclass(frozen=True)
class MultiscaleConfig:
    n0: int
    ns: int
    max_steps: int
    scale_move_tol: float = 0.10
    scale_npv_tol: float | None = 0.10
    npv_scale: float = 1.0  # absolute yardstick when the previous NPV is zero
    window: int = 3  # iterations compared by the move rule for population methods
    loosening: float = 2.0  # GPS min_step factor per remaining scale

    def __post_init__(self):
        if self.n0 < 1 or self.ns < 2:
            raise UsageError("need n0 >= 1 and ns >= 2")
        k = 0
        steps = self.n0
        while steps < self.max_steps:
            steps *= self.ns
            k += 1
        if steps != self.max_steps:
            raise UsageError(f"max_steps {self.max_steps} is not n0 * ns^K for n0={self.n0}, ns={self.ns}")
        if not self.scale_move_tol > 0 or self.window < 1 or self.loosening < 1:
            raise UsageError("scale_move_tol must be positive, window >= 1 and loosening >= 1")

    @property
    def scales(self) -> list[int]:
        out = [self.n0]
        while out[-1] < self.max_steps:
            out.append(out[-1] * self.ns)
        return out


CONFIGURATIONS = {
    "I": (1, 2),
    "II": (2, 2),
    "III": (2, 4),
    "IV": (1, 4),
}


def configuration(name: str, max_steps: int, **kwargs) -> MultiscaleConfig:
    """Named presets I-IV as ``(n0, ns)`` pairs."""
    try:
        n0, ns = CONFIGURATIONS[name]
    except KeyError:
        raise UsageError(f"unknown multiscale configuration {name!r}; expected one of {sorted(CONFIGURATIONS)}") from None
    return MultiscaleConfig(n0, ns, max_steps, **kwargs)


@dataclass
class ScaleResult:
    scale_index: int
    steps_per_well: int
    best_x: np.ndarray
    best_value: float
    start_value: float
    evaluations: int
    stop_reason: str


@dataclass
class MultiscaleResult:
    scales: list[ScaleResult] = field(default_factory=list)
    log: EvaluationLog | None = None
    truncated: bool = False
    stop_reason: str = ""

    @property
    def best(self) -> ScaleResult:
        return max(self.scales, key=lambda s: s.best_value)

    @property
    def x(self):
        return self.scales[-1].best_x

    @property
    def value(self) -> float:
        return self.scales[-1].best_value


def split_values(values, wells: int, ns: int) -> np.ndarray:
    """Repeat every control step ``ns`` times within each well (well-major layout)."""
    if ns < 1:
        raise UsageError("split factor must be positive")
    values = np.asarray(values, dtype=float).reshape(wells, -1)
    return np.repeat(values, ns, axis=1).ravel()


def split_schedule(u: ControlSchedule, ns: int) -> ControlSchedule:
    if ns < 2:
        raise UsageError("split factor must be at least 2")
    return ControlSchedule(split_values(u.values, u.wells, ns), u.wells, u.steps_per_well * ns, u.horizon)


def mean_relative_change(last, current, bounds) -> float:
    last = np.asarray(last, dtype=float)
    current = np.asarray(current, dtype=float)
    if last.shape != current.shape:
        raise UsageError("schedules must have the same shape")
    return float(np.mean(np.abs(current - last) / bounds.width))


def scale_converged(last, current, bounds, tol: float) -> bool:
    """True iff the mean bound-relative change between two incumbents is below ``tol``."""
    return mean_relative_change(last, current, bounds) < tol


def global_converged(npv_prev: float, npv_this: float, tol: float | None, npv_scale: float = 1.0,
                     at_max_steps: bool = False) -> bool:
    if at_max_steps:
        return True
    if tol is None:
        return False
    if not math.isfinite(npv_prev):
        raise UsageError("previous NPV must be finite")
    change = abs(npv_this - npv_prev)
    if npv_prev == 0.0:
        return change < tol * npv_scale
    return change / abs(npv_prev) < tol


def make_optimizer(solver: str, spec: ObjectiveSpec, x0, log: EvaluationLog, rng, executor=None, **params):
    """Instantiate one of the three optimizers by name."""
    if solver == "GPS":
        return Gps(spec, x0, log, executor, **params)
    if solver == "PSO":
        return Pso(spec, x0, log, rng, executor, **params)
    if solver == "CMA-ES":
        return Cmaes(spec, x0, log, rng, executor, **params)
    raise UsageError(f"unknown solver {solver!r}; expected one of {SOLVERS}")


class _MoveRule:
    """Scale stop for non-final scales.

    GPS stops once its mesh falls below the scale tolerance (a mesh below
    ``tol`` bounds every later move). Population methods compare the
    incumbent with the one ``window`` iterations earlier.
    """

    def __init__(self, cfg: MultiscaleConfig, bounds):
        self.cfg = cfg
        self.bounds = bounds
        self.history: list[np.ndarray] = []

    def __call__(self, opt) -> bool:
        if isinstance(opt, Gps):
            return opt.state.step < self.cfg.scale_move_tol
        self.history.append(denormalize(opt.incumbent, self.bounds))
        w = self.cfg.window
        if len(self.history) <= w:
            return False
        return scale_converged(self.history[-1 - w], self.history[-1], self.bounds, self.cfg.scale_move_tol)


def run_multiscale(
    cfg: MultiscaleConfig,
    solver: str,
    family: Callable[[int], ObjectiveSpec],
    x0,
    total_budget: int,
    rng=None,
    seed: int = 0,
    executor=None,
    wells: int | None = None,
    solver_params: dict | None = None,
) -> MultiscaleResult:
    """Optimize scale by scale; ``family(n)`` gives the objective with ``n`` steps per well.

    ``x0`` must have ``n0`` steps per well. All scales share one evaluation
    log so budgets, curves and run accounting see a single history.
    """
    rng = make_rng(seed) if rng is None else rng
    params = dict(solver_params or {})
    scales = cfg.scales
    spec = family(scales[0])
    x = np.asarray(x0, dtype=float).ravel()
    if x.size != spec.dim:
        raise UsageError(f"x0 has {x.size} entries, scale 0 needs {spec.dim}")
    wells = spec.dim // scales[0] if wells is None else wells
    log = EvaluationLog(total_budget)
    out = MultiscaleResult(log=log)
    base_min_step = params.pop("min_step", 1e-3) if solver == "GPS" else None
    for k, steps in enumerate(scales):
        if k > 0:
            spec = family(steps)
        final = k == len(scales) - 1
        cap = log.remaining // (len(scales) - k)
        if final:
            cap = log.remaining
        if solver == "GPS":
            params["min_step"] = base_min_step * cfg.loosening ** (len(scales) - 1 - k)
        opt = make_optimizer(solver, spec, x, log, rng, executor, **params)
        cap = max(cap, opt.start_size())  # a scale always gets its initial batch if the total allows
        first = log.consumed
        try:
            reason = drive(opt, cap=cap, stop=None if final else _MoveRule(cfg, spec.bounds))
        except BudgetTooSmall:
            if k == 0:
                raise
            out.truncated = True
            out.stop_reason = "budget"
            break
        start_value = log.entries[first].value if log.consumed > first else math.nan
        best = opt.result()
        out.scales.append(ScaleResult(k, steps, best.x, best.value, start_value, log.consumed - first, reason))
        at_max = final
        if len(out.scales) > 1 and global_converged(
            out.scales[-2].best_value, best.value, cfg.scale_npv_tol, cfg.npv_scale, at_max
        ):
            out.stop_reason = "max_steps" if at_max else "npv"
            break
        if at_max:
            out.stop_reason = "max_steps"
            break
        x = split_values(best.x, wells, cfg.ns)
    return out
