"""Global-best particle swarm optimization with absorbing bounds."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import EvaluationLog, ObjectiveSpec, OptimizeResult, UsageError, make_rng
from .optimizer import Optimizer, drive


def check_stability(w: float, c1: float, c2: float) -> bool:
    """Swarm stability region: ``0 < c1 + c2 < 4`` and ``(c1 + c2)/2 - 1 < w < 1``."""
    c = c1 + c2
    return bool(0.0 < c < 4.0 and c / 2.0 - 1.0 < w < 1.0)


@dataclass
class Swarm:
    x: np.ndarray  # (lam, D) positions
    v: np.ndarray  # velocities
    p: np.ndarray  # personal bests
    p_value: np.ndarray
    g: np.ndarray
    g_value: float
    w: float = 0.9
    c1: float = 0.5
    c2: float = 1.25
    iteration: int = 0

    @property
    def size(self) -> int:
        return self.x.shape[0]


def init_positions(rng: np.random.Generator, lam: int, z0) -> np.ndarray:
    """Particle 1 at ``z0``, the rest uniform in the unit box."""
    if lam < 2:
        raise UsageError("a swarm needs at least two particles")
    z0 = np.asarray(z0, dtype=float)
    x = rng.random((lam, z0.size))
    x[0] = z0
    return x


def init_swarm(rng: np.random.Generator, lam: int, z0, values=None, w=0.9, c1=0.5, c2=1.25) -> Swarm:
    """Build a swarm with zero velocities; ``values`` are the positions' objective values."""
    x = init_positions(rng, lam, z0)
    values = np.full(lam, -math.inf) if values is None else np.asarray(values, dtype=float)
    k = int(np.argmax(values))
    return Swarm(x, np.zeros_like(x), x.copy(), values.copy(), x[k].copy(), float(values[k]), w, c1, c2)


def absorb(x: np.ndarray, v: np.ndarray):
    """Clamp positions to the unit box and zero the velocity of every clamped coordinate."""
    out = (x < 0.0) | (x > 1.0)
    return np.clip(x, 0.0, 1.0), np.where(out, 0.0, v)


def move(s: Swarm, r1: np.ndarray, r2: np.ndarray):
    """Velocity and position update for given random factors; returns repaired ``(x, v)``."""
    v = s.w * s.v + s.c1 * r1 * (s.p - s.x) + s.c2 * r2 * (s.g - s.x)
    return absorb(s.x + v, v)


def record(s: Swarm, values) -> None:
    """Update personal and global bests with the values at the current positions."""
    values = np.asarray(values, dtype=float)
    better = values > s.p_value
    s.p[better] = s.x[better]
    s.p_value[better] = values[better]
    k = int(np.argmax(s.p_value))
    if s.p_value[k] > s.g_value:
        s.g = s.p[k].copy()
        s.g_value = float(s.p_value[k])


def pso_update(s: Swarm, rng: np.random.Generator, evaluate) -> Swarm:
    """One generation: move every particle, evaluate the batch, update the bests.

    ``r1`` and ``r2`` are drawn per particle and per coordinate.
    """
    r1 = rng.random(s.x.shape)
    r2 = rng.random(s.x.shape)
    s.x, s.v = move(s, r1, r2)
    record(s, evaluate(s.x))
    s.iteration += 1
    return s


class Pso(Optimizer):
    name = "PSO"

    def __init__(self, spec: ObjectiveSpec, x0, log: EvaluationLog, rng, executor=None, lam=100, w=0.9, c1=0.5, c2=1.25):
        super().__init__(spec, x0, log, executor)
        if lam < 2:
            raise UsageError("a swarm needs at least two particles")
        if not check_stability(w, c1, c2):
            warnings.warn(f"PSO parameters w={w}, c1={c1}, c2={c2} lie outside the stability region", RuntimeWarning)
        self.rng = rng
        self.lam = int(lam)
        self.params = (float(w), float(c1), float(c2))
        self.swarm: Swarm | None = None

    def start_size(self):
        return self.lam

    def start(self):
        x = init_positions(self.rng, self.lam, self.z0)
        values = self.evaluate(list(x))
        w, c1, c2 = self.params
        k = int(np.argmax(values))
        self.swarm = Swarm(x, np.zeros_like(x), x.copy(), values.copy(), x[k].copy(), float(values[k]), w, c1, c2)

    def batch_size(self):
        return self.lam

    def iterate(self):
        pso_update(self.swarm, self.rng, lambda x: self.evaluate(list(x)))
        self.iterations = self.swarm.iteration

    @property
    def incumbent(self):
        return self.swarm.g


def run_pso(spec: ObjectiveSpec, x0, lam: int = 100, budget: int = 1000, rng=None, seed: int = 0,
            w=0.9, c1=0.5, c2=1.25, executor=None) -> OptimizeResult:
    """Swarm search seeded with ``x0`` until the budget cannot cover another generation."""
    rng = make_rng(seed) if rng is None else rng
    log = EvaluationLog(budget)
    opt = Pso(spec, x0, log, rng, executor, lam=lam, w=w, c1=c1, c2=c2)
    drive(opt)
    return opt.result()
