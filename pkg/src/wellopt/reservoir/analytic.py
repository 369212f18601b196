"""Closed-form test objectives with known optima.

Each objective is a small picklable class so it can be shipped to a process
pool like the reservoir objective. All are written for maximization; the
minimization fixtures are negated.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import Bounds, ObjectiveSpec


def sphere(x) -> float:
    """``sum(x**2)``; the two-dimensional bowl used for visual checks, to be minimized."""
    x = np.asarray(x, dtype=float)
    return float(np.dot(x, x))


@dataclass(frozen=True)
class NegSphere:
    """``-sum((x - center)**2)``, maximized at ``center``."""

    center: tuple[float, ...]

    def __call__(self, x) -> float:
        d = np.asarray(x, dtype=float) - np.asarray(self.center)
        return -float(np.dot(d, d))

    @property
    def optimum(self) -> np.ndarray:
        return np.asarray(self.center, dtype=float)


@dataclass(frozen=True)
class ShiftedQuadratic:
    """Strictly concave ``-sum(scale_j * (x_j - shift_j)**2)``."""

    shift: tuple[float, ...]
    scale: tuple[float, ...]

    def __call__(self, x) -> float:
        d = np.asarray(x, dtype=float) - np.asarray(self.shift)
        return -float(np.dot(np.asarray(self.scale), d * d))

    @property
    def optimum(self) -> np.ndarray:
        return np.asarray(self.shift, dtype=float)


@dataclass(frozen=True)
class NegRosenbrock:
    """Negated Rosenbrock function; maximum 0 at all-ones."""

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return -float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (1.0 - x[:-1]) ** 2))


def sphere_spec(dim: int = 2, half_width: float = 800.0) -> ObjectiveSpec:
    """Minimize ``x1**2 + ... `` on ``[-half_width, half_width]^dim`` (as a maximization)."""
    b = Bounds(np.full(dim, -half_width), np.full(dim, half_width))
    return ObjectiveSpec(NegSphere(tuple([0.0] * dim)), b, name="sphere")


def shifted_quadratic_spec(shift, scale=None, lower=0.0, upper=1.0) -> ObjectiveSpec:
    shift = tuple(float(s) for s in np.ravel(shift))
    scale = tuple([1.0] * len(shift)) if scale is None else tuple(float(s) for s in np.ravel(scale))
    b = Bounds(np.full(len(shift), float(lower)), np.full(len(shift), float(upper)))
    return ObjectiveSpec(ShiftedQuadratic(shift, scale), b, name="shifted-quadratic")


def rosenbrock_spec(dim: int = 2, lower: float = -2.0, upper: float = 2.0) -> ObjectiveSpec:
    b = Bounds(np.full(dim, lower), np.full(dim, upper))
    return ObjectiveSpec(NegRosenbrock(), b, name="rosenbrock")


def analytic_objectives(dim: int = 2) -> dict[str, ObjectiveSpec]:
    """Named fixtures: sphere, shifted quadratic and Rosenbrock."""
    return {
        "sphere": sphere_spec(dim),
        "shifted-quadratic": shifted_quadratic_spec(np.linspace(0.2, 0.7, dim)),
        "rosenbrock": rosenbrock_spec(dim),
    }
