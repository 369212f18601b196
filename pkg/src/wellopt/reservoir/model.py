"""Reservoir, fluid and economic descriptions plus the five-spot model builders."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ..core import Bounds, ControlSchedule, UsageError

MILLIDARCY = 9.869233e-16  # m^2


@dataclass(frozen=True)
class Well:
    name: str
    cell: tuple[int, int]  # (row, col), zero-based
    kind: str  # "injector" or "producer"
    rate: float | None = None  # fixed rate in m3/day; None means controllable
    lower: float = 0.0
    upper: float = 0.0
    initial: float | None = None  # starting rate for optimization; midpoint if None

    @property
    def controllable(self) -> bool:
        return self.rate is None


@dataclass(frozen=True)
class FluidRock:
    mu_w: float = 0.5e-3
    mu_o: float = 2.0e-3
    swc: float = 0.2
    sor: float = 0.2
    n_w: float = 2.0
    n_o: float = 2.0
    krw_end: float = 0.4
    kro_end: float = 0.9
    c_t: float = 1e-9

    def __post_init__(self):
        if self.swc < 0 or self.sor < 0 or self.swc + self.sor >= 1:
            raise UsageError("residual saturations must satisfy 0 <= swc, sor and swc + sor < 1")
        if self.n_w < 1 or self.n_o < 1:
            raise UsageError("Corey exponents must be >= 1")
        if self.c_t <= 0 or self.mu_w <= 0 or self.mu_o <= 0:
            raise UsageError("compressibility and viscosities must be positive")


@dataclass(frozen=True)
class EconomicParams:
    r_op: float = 500.0
    r_gp: float = 0.0
    c_wp: float = 250.0
    c_wi: float = 80.0
    b: float = 0.0
    tau: float = 365.0

    def __post_init__(self):
        if self.tau <= 0 or self.b < 0:
            raise UsageError("tau must be positive and the discount rate non-negative")


@dataclass(frozen=True, eq=False)
class ReservoirModel:
    nx: int
    ny: int
    dx: float
    dy: float
    dz: float
    permeability: np.ndarray  # (ny, nx), mD
    porosity: np.ndarray  # (ny, nx)
    ntg: float
    horizon: float  # days
    wells: tuple[Well, ...]
    initial_sw: float = 0.2
    initial_pressure: float = 20e6  # Pa
    pressure_steps: int = 32
    name: str = "model"

    def __post_init__(self):
        perm = np.broadcast_to(np.asarray(self.permeability, dtype=float), (self.ny, self.nx)).copy()
        poro = np.broadcast_to(np.asarray(self.porosity, dtype=float), (self.ny, self.nx)).copy()
        if not np.all(perm > 0):
            raise UsageError("permeability must be positive everywhere")
        if not np.all((poro > 0) & (poro < 1)):
            raise UsageError("porosity must lie in (0, 1)")
        if not 0 < self.ntg <= 1:
            raise UsageError("net-to-gross must lie in (0, 1]")
        if self.horizon <= 0 or self.pressure_steps < 1:
            raise UsageError("horizon and pressure_steps must be positive")
        cells = [w.cell for w in self.wells]
        if len(set(cells)) != len(cells):
            raise UsageError("well cells must be distinct")
        for w in self.wells:
            r, c = w.cell
            if not (0 <= r < self.ny and 0 <= c < self.nx):
                raise UsageError(f"well {w.name} lies outside the grid")
            if w.kind not in ("injector", "producer"):
                raise UsageError(f"well {w.name}: unknown kind {w.kind!r}")
            if w.controllable and not w.lower < w.upper:
                raise UsageError(f"well {w.name}: controllable wells need lower < upper")
            if w.controllable and w.initial is not None and not w.lower <= w.initial <= w.upper:
                raise UsageError(f"well {w.name}: initial rate outside its bounds")
        perm.flags.writeable = False
        poro.flags.writeable = False
        object.__setattr__(self, "permeability", perm)
        object.__setattr__(self, "porosity", poro)
        object.__setattr__(self, "wells", tuple(self.wells))

    @property
    def controlled_wells(self) -> list[Well]:
        return [w for w in self.wells if w.controllable]

    @property
    def pore_volume(self) -> np.ndarray:
        return self.porosity * self.ntg * self.dx * self.dy * self.dz

    def initial_rates(self) -> np.ndarray:
        """Starting rate of each controlled well."""
        return np.array(
            [0.5 * (w.lower + w.upper) if w.initial is None else w.initial for w in self.controlled_wells], dtype=float
        )

    def control_bounds(self, steps_per_well: int) -> Bounds:
        lo = np.array([w.lower for w in self.controlled_wells])
        hi = np.array([w.upper for w in self.controlled_wells])
        return Bounds(lo, hi).tile(steps_per_well)


def quadrant_permeability(n: int, high: float = 1000.0, low: float = 100.0) -> np.ndarray:
    """Four homogeneous regions: NW and SE high, NE and SW low.

    The centre row and column of an odd grid take the low value, which keeps
    the field symmetric under both transposition and 180-degree rotation.
    """
    c = (n - 1) / 2.0
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    sign = (i - c) * (j - c)
    return np.where(sign > 0, high, low).astype(float)


def _scaled(index: int, n: int) -> int:
    return int(round(index * (n - 1) / 50))


def build_model1(n: int = 51):
    """The five-spot waterflood problem.

    Returns ``(model, fluid, economics, bounds, initial_schedule)`` where the
    bounds and schedule are for one control step per well. ``n`` other than 51
    gives a coarser grid over the same 510 m x 510 m area.
    """
    if n < 5:
        raise UsageError("grid must be at least 5x5")
    size = 510.0
    ctr = (n - 1) // 2
    producers = [
        ("PRO-01", (_scaled(2, n), _scaled(2, n)), 80.0),
        ("PRO-02", (_scaled(2, n), _scaled(48, n)), 40.0),
        ("PRO-03", (_scaled(48, n), _scaled(48, n)), 80.0),
        ("PRO-04", (_scaled(48, n), _scaled(2, n)), 40.0),
    ]
    wells = [Well("INJ-01", (ctr, ctr), "injector", rate=240.0)]
    wells += [Well(name, cell, "producer", lower=0.0, upper=ub, initial=20.0) for name, cell, ub in producers]
    model = ReservoirModel(
        nx=n,
        ny=n,
        dx=size / n,
        dy=size / n,
        dz=5.0,
        permeability=quadrant_permeability(n),
        porosity=np.full((n, n), 0.2),
        ntg=0.2,
        horizon=720.0,
        wells=tuple(wells),
        initial_sw=0.2,
        name=f"model1-{n}",
    )
    fluid = FluidRock()
    econ = EconomicParams()
    bounds = model.control_bounds(1)
    schedule = ControlSchedule.constant(model.initial_rates(), 1, model.horizon)
    return model, fluid, econ, bounds, schedule


# --- JSON model files -------------------------------------------------------


def _perm_from_json(spec, nx: int, ny: int) -> np.ndarray:
    if isinstance(spec, (int, float)):
        return np.full((ny, nx), float(spec))
    if isinstance(spec, list):
        return np.asarray(spec, dtype=float).reshape(ny, nx)
    kind = spec.get("type")
    if kind == "quadrants":
        if nx != ny:
            raise UsageError("quadrant permeability needs a square grid")
        return quadrant_permeability(nx, spec.get("high", 1000.0), spec.get("low", 100.0))
    if kind == "regions":
        perm = np.full((ny, nx), float(spec.get("default", 100.0)))
        for region in spec["regions"]:
            r0, r1 = region["rows"]
            c0, c1 = region["cols"]
            perm[r0:r1, c0:c1] = region["value"]
        return perm
    raise UsageError(f"unknown permeability spec {spec!r}")


def model_from_dict(data: dict):
    """Build ``(model, fluid, economics)`` from the JSON model schema."""
    grid = data["grid"]
    nx, ny = int(grid["nx"]), int(grid["ny"])
    wells = []
    for w in data["wells"]:
        wells.append(
            Well(
                name=w["name"],
                cell=(int(w["cell"][0]), int(w["cell"][1])),
                kind=w["kind"],
                rate=w.get("rate"),
                lower=float(w.get("lower", 0.0)),
                upper=float(w.get("upper", 0.0)),
                initial=None if w.get("initial") is None else float(w["initial"]),
            )
        )
    rock = data.get("rock", {})
    model = ReservoirModel(
        nx=nx,
        ny=ny,
        dx=float(grid["dx"]),
        dy=float(grid["dy"]),
        dz=float(grid["dz"]),
        permeability=_perm_from_json(rock.get("permeability", 100.0), nx, ny),
        porosity=np.asarray(rock.get("porosity", 0.2), dtype=float) * np.ones((ny, nx)),
        ntg=float(rock.get("ntg", 1.0)),
        horizon=float(data["horizon"]),
        wells=tuple(wells),
        initial_sw=float(data.get("initial_sw", 0.2)),
        initial_pressure=float(data.get("initial_pressure", 20e6)),
        pressure_steps=int(data.get("pressure_steps", 32)),
        name=data.get("name", "model"),
    )
    fluid = FluidRock(**data.get("fluid", {}))
    econ = EconomicParams(**data.get("economics", {}))
    return model, fluid, econ


def model_to_dict(model: ReservoirModel, fluid: FluidRock, econ: EconomicParams) -> dict:
    return {
        "name": model.name,
        "grid": {"nx": model.nx, "ny": model.ny, "dx": model.dx, "dy": model.dy, "dz": model.dz},
        "rock": {
            "permeability": model.permeability.tolist(),
            "porosity": (
                float(model.porosity.flat[0])
                if np.all(model.porosity == model.porosity.flat[0])
                else model.porosity.tolist()
            ),
            "ntg": model.ntg,
        },
        "horizon": model.horizon,
        "initial_sw": model.initial_sw,
        "initial_pressure": model.initial_pressure,
        "pressure_steps": model.pressure_steps,
        "wells": [
            {"name": w.name, "cell": list(w.cell), "kind": w.kind, "rate": w.rate, "lower": w.lower, "upper": w.upper,
             "initial": w.initial}
            for w in model.wells
        ],
        "fluid": asdict(fluid),
        "economics": asdict(econ),
    }


def load_model(path):
    return model_from_dict(json.loads(Path(path).read_text()))


MODELS = {
    "model1": lambda: build_model1(51)[:3],
    "model1-21": lambda: build_model1(21)[:3],
}


def resolve_model(ref: str):
    """Look up a named model or load a JSON model file."""
    if ref in MODELS:
        return MODELS[ref]()
    path = Path(ref)
    if not path.exists():
        raise UsageError(f"unknown model {ref!r}; expected one of {sorted(MODELS)} or a JSON file")
    return load_model(path)
