"""Two-phase oil/water IMPES simulator for rate-controlled wells."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import ControlSchedule, UsageError
from . import _kernel
from .model import MILLIDARCY, FluidRock, ReservoirModel


class SimulationError(RuntimeError):
    """The simulator broke down; ``time`` is the simulated day it happened."""

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} (t = {time:.6g} days)")
        self.time = time


class SaturationBoundsError(SimulationError):
    """Saturation left the mobile range; this indicates a defect, not bad input."""


def fractional_flow(sw, fluid: FluidRock):
    """Water fractional flow from Corey relative permeabilities.

    Saturations outside ``[swc, 1 - sor]`` are clamped.
    """
    sn = np.clip((np.asarray(sw, dtype=float) - fluid.swc) / (1.0 - fluid.swc - fluid.sor), 0.0, 1.0)
    lw = fluid.krw_end * sn**fluid.n_w / fluid.mu_w
    lo = fluid.kro_end * (1.0 - sn) ** fluid.n_o / fluid.mu_o
    out = lw / (lw + lo)
    return float(out) if out.ndim == 0 else out


@dataclass
class ProductionProfile:
    """Per-control-step field rates (m3/day) plus per-well volumes (m3).

    ``well_water`` and ``well_oil`` have shape ``(steps, wells)`` in the
    model's well order; injector water is the injected volume.
    """

    dt: np.ndarray
    t: np.ndarray
    q_op: np.ndarray
    q_wp: np.ndarray
    q_wi: np.ndarray
    q_gp: np.ndarray
    well_names: tuple[str, ...]
    well_water: np.ndarray
    well_oil: np.ndarray
    final_pressure: np.ndarray
    final_saturation: np.ndarray
    sw_min: float
    sw_max: float
    substeps: int

    @property
    def cumulative_oil(self) -> float:
        return float(np.sum(self.q_op * self.dt))

    @property
    def cumulative_water_produced(self) -> float:
        return float(np.sum(self.q_wp * self.dt))

    @property
    def cumulative_water_injected(self) -> float:
        return float(np.sum(self.q_wi * self.dt))

    def water_cut(self) -> np.ndarray:
        liquid = self.well_water + self.well_oil
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(liquid > 0, self.well_water / liquid, 0.0)


def _transmissibilities(model: ReservoirModel):
    k = model.permeability * MILLIDARCY
    h = model.dz * model.ntg
    kx = 2.0 * k[:, :-1] * k[:, 1:] / (k[:, :-1] + k[:, 1:])
    ky = 2.0 * k[:-1, :] * k[1:, :] / (k[:-1, :] + k[1:, :])
    tx = kx * model.dy * h / model.dx
    ty = ky * model.dx * h / model.dy
    return np.ascontiguousarray(tx), np.ascontiguousarray(ty)


def pressure_grid(horizon: float, base_steps: int, control_steps: int):
    """Pressure-step lengths and the control step each one belongs to.

    The grid is the union of ``base_steps`` equal intervals and the control
    step edges, built in exact integer arithmetic so that any schedule whose
    step count divides ``base_steps`` gets exactly the same time grid.
    """
    lcm = base_steps * control_steps // math.gcd(base_steps, control_steps)
    marks = sorted(set(range(0, lcm + 1, lcm // base_steps)) | set(range(0, lcm + 1, lcm // control_steps)))
    marks = np.array(marks, dtype=np.int64)
    dts = np.diff(marks) * (horizon / lcm)
    owner = marks[:-1] * control_steps // lcm
    return dts, owner


def simulate(model: ReservoirModel, fluid: FluidRock, schedule: ControlSchedule, cfl: float = 0.5) -> ProductionProfile:
    """Run the waterflood for ``schedule`` and report per-step average rates."""
    controlled = model.controlled_wells
    if schedule.wells != len(controlled):
        raise UsageError(f"schedule has {schedule.wells} wells, model controls {len(controlled)}")
    if not math.isclose(schedule.horizon, model.horizon):
        raise UsageError(f"schedule horizon {schedule.horizon} differs from model horizon {model.horizon}")
    if not fluid.swc <= model.initial_sw <= 1.0 - fluid.sor:
        raise UsageError("initial saturation must lie within the mobile range")
    controls = schedule.by_well()
    for w, row in zip(controlled, controls):
        if np.any(row < w.lower) or np.any(row > w.upper):
            raise UsageError(f"rates for {w.name} violate bounds [{w.lower}, {w.upper}]")

    nt = schedule.steps_per_well
    dts, owner = pressure_grid(model.horizon, model.pressure_steps, nt)
    nwell = len(model.wells)
    rates = np.empty((dts.size, nwell))
    ci = 0
    for w_i, w in enumerate(model.wells):
        if w.controllable:
            rates[:, w_i] = controls[ci][owner]
            ci += 1
        else:
            rates[:, w_i] = w.rate
    well_idx = np.array([r * model.nx + c for r, c in (w.cell for w in model.wells)], dtype=np.int64)
    well_inj = np.array([w.kind == "injector" for w in model.wells])
    tx, ty = _transmissibilities(model)
    p = np.full(model.nx * model.ny, float(model.initial_pressure))
    s = np.full(model.nx * model.ny, float(model.initial_sw))
    vp = np.ascontiguousarray(model.pore_volume.ravel())

    vol_w, vol_o, status, t_fail, s_min, s_max, nsub = _kernel.march(
        model.nx, model.ny, tx, ty, vp, fluid.c_t, p, s, well_idx, well_inj, rates, dts,
        fluid.swc, fluid.sor, fluid.n_w, fluid.n_o, fluid.krw_end, fluid.kro_end,
        fluid.mu_w, fluid.mu_o, cfl,
    )
    if status == _kernel.FAIL_BOUNDS:
        raise SaturationBoundsError(f"saturation left [{fluid.swc}, {1 - fluid.sor}]: min {s_min}, max {s_max}", t_fail)
    if status == _kernel.FAIL_NONFINITE:
        raise SimulationError("non-finite pressure or saturation", t_fail)
    if status == _kernel.FAIL_NOT_SPD:
        raise SimulationError("pressure matrix is not positive definite", t_fail)

    well_water = np.zeros((nt, nwell))
    well_oil = np.zeros((nt, nwell))
    np.add.at(well_water, owner, vol_w)
    np.add.at(well_oil, owner, vol_o)
    step = np.full(nt, model.horizon / nt)
    t_end = np.arange(1, nt + 1) * step
    prod = ~well_inj
    return ProductionProfile(
        dt=step,
        t=t_end,
        q_op=well_oil[:, prod].sum(axis=1) / step,
        q_wp=well_water[:, prod].sum(axis=1) / step,
        q_wi=well_water[:, well_inj].sum(axis=1) / step,
        q_gp=np.zeros(nt),
        well_names=tuple(w.name for w in model.wells),
        well_water=well_water,
        well_oil=well_oil,
        final_pressure=p.reshape(model.ny, model.nx),
        final_saturation=s.reshape(model.ny, model.nx),
        sw_min=float(s_min),
        sw_max=float(s_max),
        substeps=int(nsub),
    )
