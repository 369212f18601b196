"""NPV objectives over well-rate schedules."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import ControlSchedule, ObjectiveSpec, UsageError
from .economics import npv
from .model import EconomicParams, FluidRock, ReservoirModel
from .simulator import simulate


@dataclass(frozen=True, eq=False)
class NpvObjective:
    """Maps a flat well-major rate vector to NPV by running the simulator."""

    model: ReservoirModel
    fluid: FluidRock
    econ: EconomicParams
    steps_per_well: int
    simulator: object = None  # optional callable (model, fluid, schedule) -> profile

    def schedule(self, u) -> ControlSchedule:
        return ControlSchedule(
            np.asarray(u, dtype=float), len(self.model.controlled_wells), self.steps_per_well, self.model.horizon
        )

    def __call__(self, u) -> float:
        sim = simulate if self.simulator is None else self.simulator
        return npv(sim(self.model, self.fluid, self.schedule(u)), self.econ)


@dataclass(frozen=True, eq=False)
class NpvFamily:
    """Objective factory parameterized by the number of control steps per well."""

    model: ReservoirModel
    fluid: FluidRock
    econ: EconomicParams
    simulator: object = None

    @property
    def wells(self) -> int:
        return len(self.model.controlled_wells)

    def __call__(self, steps_per_well: int) -> ObjectiveSpec:
        if steps_per_well < 1:
            raise UsageError("steps_per_well must be at least 1")
        return ObjectiveSpec(
            NpvObjective(self.model, self.fluid, self.econ, steps_per_well, self.simulator),
            self.model.control_bounds(steps_per_well),
            name=f"{self.model.name}-npv-{steps_per_well}",
        )
