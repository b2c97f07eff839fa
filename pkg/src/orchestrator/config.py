# ============================================================================
# EXPERIMENT CONFIG
# File: src/orchestrator/config.py
# Purpose: Strict TOML experiment configs, validation and domain builders
# ============================================================================

import copy
import difflib
import hashlib
import json
import logging
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Type

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from src import __version__
from src.dynamics.counting import SampleSet
from src.dynamics.word_tree import DEFAULT_BEAM_WIDTH, DEFAULT_NODE_BUDGET, TreeBudget
from src.errors import ConfigValidationError, PressureForgeError
from src.measures.measures import BorelMeasure, MeasureKind, bernoulli_grid, uniform_separated
from src.measures.targets import TargetSet
from src.pressure.estimates import PressureParams
from src.systems.maps import MapSpec
from src.systems.naifs import NaifsSystem
from src.systems.potentials import Potential
from src.systems.spaces import StateSpace

logger = logging.getLogger(__name__)

DEFAULT_CACHE_DIR = "./.pressure-cache"
TASK_KINDS = ("sup-entropy", "pp-pressure", "capacity", "weighted", "measure-pressure", "variational", "check-suite")


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


def _strictly_decreasing(values: List[float], name: str) -> List[float]:
    if not values:
        raise ValueError(f"{name} must be nonempty")
    if any(a <= b for a, b in zip(values, values[1:])):
        raise ValueError(f"{name} must be strictly decreasing")
    return values


def _strictly_increasing(values: List[int], name: str) -> List[int]:
    if not values:
        raise ValueError(f"{name} must be nonempty")
    if any(a >= b for a, b in zip(values, values[1:])):
        raise ValueError(f"{name} must be strictly increasing")
    return values


# ============================================================================
# SECTIONS
# ============================================================================

class MapModel(StrictModel):
    kind: Literal["affine-mod-1", "piecewise-linear", "affine-contraction", "shift"]
    slope: int = 1
    offset: float = 0.0
    breakpoints: List[float] = []
    slopes: List[float] = []
    start: float = 0.0
    matrix: List[List[float]] = []
    translation: List[float] = []
    lipschitz: Optional[float] = None


class SystemModel(StrictModel):
    space: Literal["circle", "interval", "torus", "symbolic"]
    dimension: int = 1
    alphabet: int = 2
    length: int = 16
    fill: int = 0
    preamble: List[List[MapModel]] = []
    period: List[List[MapModel]]


class PotentialModel(StrictModel):
    kind: Literal["constant", "affine", "first-symbol", "grid"] = "constant"
    constant: float = 0.0
    weights: List[float] = []
    offset: float = 0.0
    table: List[float] = []
    values: List[float] = []
    shape: List[int] = []


class TargetModel(StrictModel):
    kind: Literal["whole", "cylinders", "points", "grid"] = "whole"
    resolution: int = Field(default=8, ge=1)
    cylinders: List[str] = []
    points: List[Any] = []
    box: List[List[float]] = []


class GridsModel(StrictModel):
    n_range: List[int] = [2, 3, 4, 5, 6, 7, 8]
    epsilon_grid: List[float] = [0.5, 0.25]
    delta_grid: List[float] = [0.5, 0.25]
    N_grid: List[int] = [4, 5, 6]
    window: int = Field(default=6, ge=0)
    pool_resolution: Optional[int] = None
    node_budget: int = Field(default=DEFAULT_NODE_BUDGET, ge=1)
    beam_width: int = Field(default=DEFAULT_BEAM_WIDTH, ge=1)
    n_exact: Optional[int] = None
    tolerance: float = Field(default=1e-3, gt=0)
    estimator: Literal["growth", "crossing"] = "growth"
    r_grid: List[float] = [0.5, 0.25]
    n_window: List[int] = [40, 80]
    metric: Literal["d_n", "d_n_star"] = "d_n_star"

    @field_validator("epsilon_grid", "delta_grid", "r_grid")
    @classmethod
    def _decreasing(cls, values, info):
        return _strictly_decreasing(values, info.field_name)

    @field_validator("n_range", "N_grid")
    @classmethod
    def _increasing(cls, values, info):
        return _strictly_increasing(values, info.field_name)

    @field_validator("n_window")
    @classmethod
    def _window(cls, values):
        if len(values) != 2 or values[0] < 1 or values[1] - values[0] < 4:
            raise ValueError("n_window must be [n_lo, n_hi] with 1 <= n_lo and n_hi - n_lo >= 4")
        return values


class TaskModel(StrictModel):
    kind: Literal["sup-entropy", "pp-pressure", "capacity", "weighted", "measure-pressure", "variational", "check-suite"]
    alpha: Optional[float] = None
    epsilon: float = Field(default=0.2, gt=0)
    delta: Optional[float] = None
    N: Optional[int] = None
    levels: List[float] = []
    counter: Literal["separated", "spanning"] = "separated"
    with_pressure: bool = False
    pressure_oracle: Optional[float] = None
    oracle_tolerance: float = Field(default=0.1, gt=0)


class MeasuresModel(StrictModel):
    kind: Literal["atomic", "bernoulli", "bernoulli-grid", "sampled", "uniform-separated"]
    points: List[Any] = []
    weights: List[float] = []
    probabilities: List[float] = []
    p_grid: List[float] = []
    sampler: Literal["uniform"] = "uniform"
    support: int = Field(default=4096, ge=1)
    count: int = Field(default=64, ge=1)
    integration: Optional[Literal["exact-atomic", "monte-carlo"]] = None
    separation_n: int = Field(default=2, ge=0)
    separation_epsilon: float = Field(default=0.25, gt=0)


class OutputModel(StrictModel):
    directory: str = "results"
    formats: List[Literal["json", "csv", "md"]] = ["json", "csv", "md"]


class SweepModel(StrictModel):
    parameters: Dict[str, List[Any]] = {}


class ExperimentConfig(StrictModel):
    seed: int = Field(default=0, ge=0, lt=2 ** 64)
    system: SystemModel
    potential: PotentialModel = PotentialModel()
    target: TargetModel = TargetModel()
    grids: GridsModel = GridsModel()
    task: TaskModel
    measures: Optional[MeasuresModel] = None
    output: OutputModel = OutputModel()
    sweep: Optional[SweepModel] = None

    @model_validator(mode="after")
    def _measures_needed(self):
        if self.task.kind in ("measure-pressure", "variational") and self.measures is None:
            raise ValueError(f"task '{self.task.kind}' needs a [measures] section")
        return self


_SECTION_MODELS: Dict[str, Type[BaseModel]] = {
    "": ExperimentConfig,
    "system": SystemModel,
    "system.preamble": MapModel,
    "system.period": MapModel,
    "potential": PotentialModel,
    "target": TargetModel,
    "grids": GridsModel,
    "task": TaskModel,
    "measures": MeasuresModel,
    "output": OutputModel,
    "sweep": SweepModel,
}


# ============================================================================
# PARSING
# ============================================================================

def _format_error(error: Dict[str, Any]) -> str:
    loc = [str(part) for part in error["loc"]]
    key = ".".join(loc)
    if error["type"] == "extra_forbidden":
        section = ".".join(p for p in loc[:-1] if not p.isdigit())
        model = _SECTION_MODELS.get(section)
        known = list(model.model_fields) if model else []
        close = difflib.get_close_matches(loc[-1], known, n=1, cutoff=0.5)
        hint = f" (did you mean '{'.'.join(loc[:-1] + close)}'?)" if close else ""
        return f"{key}: unknown key{hint}"
    return f"{key}: {error['msg']}"


def config_from_dict(data: Dict[str, Any]) -> ExperimentConfig:
    """Validate a raw config mapping; every error is collected."""
    try:
        config = ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigValidationError([_format_error(e) for e in exc.errors()]) from None
    errors = []
    checks = (
        ("system", build_system),
        ("potential", lambda c: build_potential(c, build_system(c))),
        ("measures", _check_measures),
    )
    for name, build in checks:
        try:
            build(config)
        except (PressureForgeError, ValueError) as exc:
            if name != "system" and any(e.startswith("system") for e in errors):
                continue
            errors.append(f"{name}: {exc}")
    if errors:
        raise ConfigValidationError(errors)
    return config


def load_raw(path: str | Path) -> Dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise ConfigValidationError([f"{path}: file not found"])
    try:
        return tomllib.loads(path.read_text(encoding="utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigValidationError([f"{path}: {exc}"]) from None


def parse_config(path: str | Path) -> ExperimentConfig:
    config = config_from_dict(load_raw(path))
    logger.info(f"Loaded config {path} (task={config.task.kind}, hash={config_hash(config)[:12]})")
    return config


def apply_overrides(data: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    """Set dotted keys (``grids.window``) on a copy of a raw config mapping."""
    data = copy.deepcopy(data)
    for dotted, value in overrides.items():
        node = data
        *parents, leaf = dotted.split(".")
        for part in parents:
            node = node.setdefault(part, {})
        node[leaf] = value
    return data


# ============================================================================
# HASHING
# ============================================================================

def canonical_json(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)


def config_hash(config: ExperimentConfig) -> str:
    return hashlib.sha256(canonical_json(config.model_dump(mode="json")).encode("utf-8")).hexdigest()


def section_key(config: ExperimentConfig, name: str, sections: Tuple[str, ...]) -> str:
    """Cache key for one named computation: tool version + the config sections it reads + seed."""
    dumped = config.model_dump(mode="json")
    payload = {"version": __version__, "name": name, "seed": config.seed, **{s: dumped.get(s) for s in sections}}
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


# ============================================================================
# ENVIRONMENT
# ============================================================================

def cache_dir_from_env() -> str:
    return os.getenv("PRESSURE_CACHE_DIR", DEFAULT_CACHE_DIR)


def workers_from_env() -> int:
    raw = os.getenv("PRESSURE_WORKERS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        logger.warning(f"PRESSURE_WORKERS={raw!r} is not an integer; using 1 worker")
        return 1


# ============================================================================
# DOMAIN BUILDERS
# ============================================================================

def _map_spec(model: MapModel) -> MapSpec:
    return MapSpec(**model.model_dump())


def build_space(config: ExperimentConfig) -> StateSpace:
    s = config.system
    return StateSpace(kind=s.space, dimension=s.dimension, alphabet=s.alphabet, length=s.length, fill=s.fill)


def build_system(config: ExperimentConfig) -> NaifsSystem:
    return NaifsSystem(
        space=build_space(config),
        preamble=tuple(tuple(_map_spec(m) for m in family) for family in config.system.preamble),
        period=tuple(tuple(_map_spec(m) for m in family) for family in config.system.period),
    )


def build_potential(config: ExperimentConfig, system: NaifsSystem) -> Potential:
    potential = Potential(**config.potential.model_dump())
    potential.validate_for(system.space)
    return potential


def build_target(config: ExperimentConfig) -> TargetSet:
    t = config.target
    return TargetSet(kind=t.kind, resolution=t.resolution, cylinders=tuple(t.cylinders), points=tuple(t.points), box=tuple(map(tuple, t.box)))


def build_budget(config: ExperimentConfig) -> TreeBudget:
    g = config.grids
    return TreeBudget(node_budget=g.node_budget, beam_width=g.beam_width, n_exact=g.n_exact)


def build_params(config: ExperimentConfig, workers: int = 1) -> PressureParams:
    g = config.grids
    return PressureParams(
        delta_grid=tuple(g.delta_grid),
        N_grid=tuple(g.N_grid),
        window=g.window,
        tolerance=g.tolerance,
        estimator=g.estimator,
        budget=build_budget(config),
        workers=workers,
    )


def build_pool(config: ExperimentConfig, system: NaifsSystem, sample: SampleSet) -> SampleSet:
    """The target sample, refined by a whole-space sample when pool_resolution is set."""
    if config.grids.pool_resolution is None:
        return sample
    extra = TargetSet(kind="whole", resolution=config.grids.pool_resolution).sample(system.space)
    return sample.union(extra)


def build_measures(config: ExperimentConfig, system: NaifsSystem, sample: SampleSet) -> List[BorelMeasure]:
    m = config.measures
    if m is None:
        return []
    if m.kind == "bernoulli-grid":
        return bernoulli_grid(m.p_grid)
    if m.kind == "uniform-separated":
        return [uniform_separated(system, sample, m.separation_n, m.separation_epsilon, build_budget(config))]
    if m.kind == "atomic":
        points = [tuple(p) if isinstance(p, list) else p for p in m.points]
        return [BorelMeasure(kind=MeasureKind.ATOMIC, points=tuple(points), weights=tuple(m.weights))]
    if m.kind == "bernoulli":
        return [BorelMeasure(kind=MeasureKind.BERNOULLI, probabilities=tuple(m.probabilities))]
    return [BorelMeasure(kind=MeasureKind.SAMPLED, sampler=m.sampler, count=m.support, seed=config.seed)]


def _check_measures(config: ExperimentConfig):
    m = config.measures
    if m is None or m.kind in ("sampled", "uniform-separated"):
        return
    if m.kind == "bernoulli-grid" and not m.p_grid:
        raise ValueError("bernoulli-grid needs a nonempty p_grid")
    if m.kind == "bernoulli-grid" and not all(0.0 <= p <= 1.0 for p in m.p_grid):
        raise ValueError("p_grid values must lie in [0, 1]")
    for measure in build_measures(config, build_system(config), SampleSet(build_space(config), [], 0.0)):
        measure.validate_for(build_space(config))
