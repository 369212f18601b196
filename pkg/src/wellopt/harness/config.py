"""Experiment configuration: validation, presets and a stable content hash."""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..core import UsageError
from ..multiscale import CONFIGURATIONS, SOLVERS, MultiscaleConfig

CASES = {"1A": 1, "1B": 2, "1C": 8, "1D": 32}
SOLVER_ALIASES = {"gps": "GPS", "pso": "PSO", "cma-es": "CMA-ES", "cmaes": "CMA-ES"}
SOLVER_PARAMS = {
    "GPS": {"min_step", "step0"},
    "PSO": {"lam", "w", "c1", "c2"},
    "CMA-ES": {"sigma0", "lam", "mu", "alpha_scale", "tol_x"},
}


def parse_processors(spec) -> list[float]:
    """``"8,32,inf"`` or ``[8, 32, "inf"]`` to a sorted list of counts (``inf`` allowed)."""
    items = spec.split(",") if isinstance(spec, str) else list(spec)
    out = []
    for item in items:
        text = str(item).strip().lower()
        if text in ("inf", "infinity", "∞"):
            out.append(math.inf)
            continue
        try:
            p = int(text)
        except ValueError:
            raise UsageError(f"processor count {item!r} is not an integer or 'inf'") from None
        if p < 1:
            raise UsageError("processor counts must be at least 1")
        out.append(p)
    return sorted(set(out))


def processors_label(p) -> str:
    return "inf" if p == math.inf else str(int(p))


@dataclass
class ExperimentConfig:
    model: str
    solver: str
    steps_per_well: int | None = None
    multiscale: MultiscaleConfig | None = None
    budget: int | str = "100xD"
    trials: int = 10
    seed_base: int = 0
    processors: list = field(default_factory=lambda: [1, 8, 32, math.inf])
    solver_params: dict = field(default_factory=dict)
    output_dir: str = "results"
    label: str | None = None
    workers: int = 1  # evaluation pool size; does not affect results

    def __post_init__(self):
        self.solver = SOLVER_ALIASES.get(str(self.solver).lower(), self.solver)
        if self.solver not in SOLVERS:
            raise UsageError(f"solver must be one of {SOLVERS}, got {self.solver!r}")
        if (self.steps_per_well is None) == (self.multiscale is None):
            raise UsageError("set exactly one of steps_per_well (or case) and multiscale")
        if self.steps_per_well is not None and int(self.steps_per_well) < 1:
            raise UsageError("steps_per_well must be at least 1")
        if int(self.trials) < 1:
            raise UsageError("trials must be at least 1")
        if int(self.workers) < 1:
            raise UsageError("workers must be at least 1")
        if isinstance(self.budget, str):
            if self.budget.replace(" ", "").lower() != "100xd":
                raise UsageError(f"budget must be an integer or '100xD', got {self.budget!r}")
            self.budget = "100xD"
        elif int(self.budget) < 1:
            raise UsageError("budget must be positive")
        unknown = set(self.solver_params) - SOLVER_PARAMS[self.solver]
        if unknown:
            raise UsageError(f"unknown {self.solver} parameters {sorted(unknown)}")
        self.processors = parse_processors(self.processors)
        if self.label is None:
            if self.multiscale is not None:
                self.label = f"M-{self.solver}-{self.multiscale.n0}-{self.multiscale.ns}-{self.multiscale.max_steps}"
            else:
                self.label = f"{self.solver}-{self.steps_per_well}"

    @property
    def final_steps(self) -> int:
        return self.multiscale.max_steps if self.multiscale is not None else int(self.steps_per_well)

    @property
    def effective_trials(self) -> int:
        """GPS is deterministic, so it always runs a single trial."""
        return 1 if self.solver == "GPS" else int(self.trials)

    def resolve_budget(self, wells: int) -> int:
        """Absolute budget; ``100xD`` uses the final number of control variables."""
        if self.budget == "100xD":
            return 100 * wells * self.final_steps
        return int(self.budget)

    def seeds(self) -> list[int]:
        return [int(self.seed_base) + t for t in range(self.effective_trials)]

    def canonical(self) -> dict:
        """Normalized content used for the hash: no paths, pool sizes or labels."""
        ms = None if self.multiscale is None else asdict(self.multiscale)
        return {
            "model": self.model,
            "solver": self.solver,
            "steps_per_well": None if self.steps_per_well is None else int(self.steps_per_well),
            "multiscale": ms,
            "budget": self.budget,
            "trials": self.effective_trials,
            "seed_base": int(self.seed_base),
            "processors": [processors_label(p) for p in self.processors],
            "solver_params": {k: self.solver_params[k] for k in sorted(self.solver_params)},
        }

    def config_hash(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def to_dict(self) -> dict:
        d = self.canonical()
        d.update(output_dir=self.output_dir, label=self.label, workers=int(self.workers))
        return d


def multiscale_from_dict(data: dict) -> MultiscaleConfig:
    data = dict(data)
    name = data.pop("configuration", None)
    if name is not None:
        if name not in CONFIGURATIONS:
            raise UsageError(f"unknown multiscale configuration {name!r}")
        n0, ns = CONFIGURATIONS[name]
        data.setdefault("n0", n0)
        data.setdefault("ns", ns)
    known = set(MultiscaleConfig.__dataclass_fields__)
    unknown = set(data) - known
    if unknown:
        raise UsageError(f"unknown multiscale fields {sorted(unknown)}")
    for key in ("n0", "ns", "max_steps"):
        if key not in data:
            raise UsageError(f"multiscale needs {key!r} (or a configuration name)")
    return MultiscaleConfig(**data)


def config_from_dict(data: dict, base_dir: Path | None = None) -> ExperimentConfig:
    data = dict(data)
    known = set(ExperimentConfig.__dataclass_fields__) | {"case"}
    unknown = set(data) - known
    if unknown:
        raise UsageError(f"unknown config fields {sorted(unknown)}")
    for key in ("model", "solver"):
        if key not in data:
            raise UsageError(f"config needs {key!r}")
    case = data.pop("case", None)
    if case is not None:
        if case not in CASES:
            raise UsageError(f"unknown case {case!r}; expected one of {sorted(CASES)}")
        if data.get("steps_per_well") not in (None, CASES[case]):
            raise UsageError("case and steps_per_well disagree")
        data["steps_per_well"] = CASES[case]
    if data.get("multiscale") is not None:
        data["multiscale"] = multiscale_from_dict(data["multiscale"])
    if base_dir is not None:
        model = str(data["model"])
        if model.endswith(".json") and not Path(model).is_absolute():
            data["model"] = str(base_dir / model)
        out = data.get("output_dir")
        if out is not None and not Path(out).is_absolute():
            data["output_dir"] = str(base_dir / out)
    try:
        return ExperimentConfig(**data)
    except TypeError as exc:
        raise UsageError(str(exc)) from None


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    except ValueError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError("config must be a JSON object")
    return config_from_dict(data, path.parent)
