# ============================================================================
# TASK RUNNERS
# File: src/orchestrator/tasks.py
# Purpose: One runner per task kind; every module-level result goes through the cache
# ============================================================================

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Optional, Tuple

from src.dynamics.balls import CoverFamily, CoverItem
from src.dynamics.counting import SampleSet, sup_entropy, vitali_containment_holds, vitali_subfamily
from src.dynamics.oracles import metric_axioms_hold, oracle_errors
from src.dynamics.word_tree import BoundMode
from src.measures.checks import frostman_constant, frostman_inequality_check, pressure_bounds_check, variational_gap
from src.measures.local_pressure import measure_pressure
from src.measures.measures import BallMassTable, BorelMeasure
from src.measures.targets import TargetSet, swap_symbols
from src.orchestrator.config import ExperimentConfig, section_key
from src.orchestrator.result_cache import ResultCache
from src.pressure.covers import CoverGeometry, lp_cover
from src.pressure.estimates import (
    PressureEstimate,
    PressureParams,
    capacity_pressures,
    pp_pressure,
    pp_pressure_prime,
    sandwich_check_WM,
    weighted_pressure,
)
from src.systems.naifs import NaifsSystem
from src.systems.potentials import Potential, PotentialKind, zero_potential

logger = logging.getLogger(__name__)

ESTIMATE_SECTIONS = ("system", "potential", "target", "grids")
MEASURE_SECTIONS = ESTIMATE_SECTIONS + ("measures",)
TASK_SECTIONS = MEASURE_SECTIONS + ("task",)

SANDWICH_MIN_N = 6
LEVEL_OFFSET = 0.3
SHIFT_CONSTANT = 0.5
ORACLE_TRIALS = 200
ORACLE_MAX_N = 8
SUITE_DRAWS = 16


@dataclass
class TaskContext:
    """Everything a runner needs, built once per run."""

    config: ExperimentConfig
    system: NaifsSystem
    potential: Potential
    target: TargetSet
    sample: SampleSet
    pool: SampleSet
    params: PressureParams
    measures: List[BorelMeasure]
    cache: ResultCache


@dataclass
class TaskOutput:
    results: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    tables: Dict[str, List[Dict[str, Any]]] = field(default_factory=dict)
    properties: Dict[str, Any] = field(default_factory=dict)


def _cached(ctx: TaskContext, name: str, sections: Tuple[str, ...], compute: Callable[[], Dict[str, Any]]) -> Dict[str, Any]:
    return ctx.cache.get_or_compute(section_key(ctx.config, name, sections), compute)


def _estimate_payload(estimate: PressureEstimate, oracle: Optional[float] = None) -> Dict[str, Any]:
    record = estimate.to_record()
    if oracle is not None:
        record["oracle"] = oracle
        record["oracle_gap"] = abs(estimate.value - oracle)
    return {"record": record, "rows": estimate.table}


def _estimate(ctx: TaskContext, name: str, estimator, Z: Optional[SampleSet] = None, potential: Optional[Potential] = None,
              pool: Optional[SampleSet] = None) -> Dict[str, Any]:
    """Run a cover-based estimator through the cache. ``name`` must identify the variant."""
    Z = ctx.sample if Z is None else Z
    potential = ctx.potential if potential is None else potential
    pool = ctx.pool if pool is None else pool
    oracle = ctx.config.task.pressure_oracle
    return _cached(ctx, name, ESTIMATE_SECTIONS + ("task",) if oracle is not None else ESTIMATE_SECTIONS,
                   lambda: _estimate_payload(estimator(ctx.system, Z, potential, ctx.params, pool), oracle))


def _add(out: TaskOutput, name: str, payload: Dict[str, Any]):
    out.results[name] = payload["record"]
    if payload.get("rows"):
        out.tables[name] = payload["rows"]


# ============================================================================
# SINGLE-QUANTITY TASKS
# ============================================================================

def _sup_entropy(ctx: TaskContext, oracle: Optional[float]) -> Dict[str, Any]:
    g, task = ctx.config.grids, ctx.config.task

    def compute():
        est = sup_entropy(ctx.system, ctx.sample, g.n_range, g.epsilon_grid, g.metric, task.counter, ctx.params.budget)
        record = {
            "kind": "sup-entropy",
            "value": est.value,
            "direction": "lower-bound" if task.counter == "separated" else "upper-bound",
            "mode": est.mode.value,
            "counter": est.counter,
            "metric": g.metric,
            "window": est.window,
            "slopes": {str(eps): s for eps, s in est.slopes.items()},
        }
        if oracle is not None:
            record["oracle"] = oracle
            record["oracle_gap"] = abs(est.value - oracle)
        return {"record": record, "rows": est.rows()}

    return _cached(ctx, "sup-entropy", ESTIMATE_SECTIONS + ("task",), compute)


def run_sup_entropy(ctx: TaskContext, out: TaskOutput) -> TaskOutput:
    _add(out, "sup-entropy", _sup_entropy(ctx, ctx.config.task.pressure_oracle))
    if ctx.config.task.with_pressure:
        _add(out, "pp-zero", _estimate(ctx, "pp-zero", pp_pressure, potential=zero_potential()))
    return out


def run_pp_pressure(ctx: TaskContext, out: TaskOutput) -> TaskOutput:
    _add(out, "pp", _estimate(ctx, "pp", pp_pressure))
    _add(out, "pp-prime", _estimate(ctx, "pp-prime", pp_pressure_prime))
    return out


def _capacity(ctx: TaskContext, name: str = "capacity", Z: Optional[SampleSet] = None) -> Dict[str, Any]:
    Z = ctx.sample if Z is None else Z

    def compute():
        lower, upper = capacity_pressures(ctx.system, Z, ctx.potential, ctx.params, ctx.pool)
        return {"lower": lower.to_record(), "upper": upper.to_record(), "rows": lower.table}

    return _cached(ctx, name, ESTIMATE_SECTIONS, compute)


def run_capacity(ctx: TaskContext, out: TaskOutput) -> TaskOutput:
    payload = _capacity(ctx)
    out.results["capacity-lower"] = payload["lower"]
    out.results["capacity-upper"] = payload["upper"]
    if payload["rows"]:
        out.tables["capacity"] = payload["rows"]
    return out


def _sandwich(ctx: TaskContext, alpha: float, N_values: List[int]) -> Dict[str, Any]:
    task = ctx.config.task
    delta = task.delta if task.delta is not None else ctx.params.delta_grid[-1]

    def compute():
        reports = [
            sandwich_check_WM(
                ctx.system, ctx.sample, ctx.potential, alpha, task.epsilon, delta, N,
                window=ctx.params.window, pool=ctx.pool, budget=ctx.params.budget, min_counted=SANDWICH_MIN_N,
            )
            for N in N_values
        ]
        rows = [r.to_record() for r in reports]
        return {"record": {"alpha": alpha, "delta": delta, "violations": sum(r.violations for r in reports)}, "rows": rows}

    name = f"sandwich(alpha={alpha!r},N={N_values})"
    return _cached(ctx, name, TASK_SECTIONS, compute)


def run_weighted(ctx: TaskContext, out: TaskOutput) -> TaskOutput:
    weighted = _estimate(ctx, "weighted", weighted_pressure)
    _add(out, "weighted", weighted)
    alpha = ctx.config.task.alpha if ctx.config.task.alpha is not None else weighted["record"]["value"]
    if math.isfinite(alpha):
        _add(out, "sandwich", _sandwich(ctx, alpha, list(ctx.params.N_grid)))
    return out


def _measure_pressures(ctx: TaskContext) -> Dict[str, Any]:
    m, g = ctx.config.measures, ctx.config.grids

    def compute():
        records, rows = [], []
        for measure in ctx.measures:
            value = measure_pressure(
                ctx.system, measure, ctx.potential, g.r_grid, g.n_window, integration=m.integration,
                count=m.count, seed=ctx.config.seed, budget=ctx.params.budget, workers=ctx.params.workers,
            )
            records.append(value.to_record())
            rows.extend({"measure": measure.name} | row for local in value.locals for row in local.rows())
        return {"record": {"measures": records}, "rows": rows}

    return _cached(ctx, "measure-pressure", MEASURE_SECTIONS, compute)


def run_measure_pressure(ctx: TaskContext, out: TaskOutput) -> TaskOutput:
    payload = _measure_pressures(ctx)
    for record in payload["record"]["measures"]:
        out.results[f"measure-pressure:{record['measure']}"] = record
    if payload["rows"]:
        out.tables["local-pressure"] = payload["rows"]
    return out


def _levels(ctx: TaskContext) -> List[float]:
    task = ctx.config.task
    if task.levels:
        return list(task.levels)
    if task.pressure_oracle is not None:
        return [task.pressure_oracle - LEVEL_OFFSET, task.pressure_oracle + LEVEL_OFFSET]
    return []


def _variational(ctx: TaskContext, pressure: Optional[PressureEstimate] = None) -> Dict[str, Any]:
    g, m = ctx.config.grids, ctx.config.measures

    def compute():
        report = variational_gap(
            ctx.system, ctx.target, ctx.potential, ctx.measures, ctx.params, g.r_grid, g.n_window,
            count=m.count, seed=ctx.config.seed, pool=ctx.pool, pressure=pressure,
        )
        return {"record": report.to_record(), "rows": report.rows()}

    return _cached(ctx, "variational", TASK_SECTIONS, compute)


def _bounds(ctx: TaskContext, measure: BorelMeasure, levels: List[float], pressure: Optional[PressureEstimate] = None) -> Dict[str, Any]:
    g, m = ctx.config.grids, ctx.config.measures

    def compute():
        report = pressure_bounds_check(
            ctx.system, ctx.target, measure, ctx.potential, levels, ctx.params, g.r_grid, g.n_window,
            count=m.count, seed=ctx.config.seed, pool=ctx.pool, pressure=pressure,
        )
        record = {
            "measure": measure.name, "pressure": report.pressure, "target_mass": report.target_mass,
            "local_min": report.local_min, "local_max": report.local_max, "violations": report.violations,
        }
        return {"record": record, "rows": report.rows()}

    return _cached(ctx, f"bounds({measure.name})", TASK_SECTIONS, compute)


def _pressure_from_record(record: Dict[str, Any]) -> PressureEstimate:
    """Rebuild the estimate the measure checks compare against from its cached record."""
    return PressureEstimate(
        value=record["value"],
        bracket=tuple(record["bracket"]),
        direction=record["direction"],
        mode=BoundMode(record["mode"]),
        kind=record["kind"],
        estimator=record["estimator"],
        diagnostics=record["diagnostics"],
        per_delta={float(k): v for k, v in record["per_delta"].items()},
    )


def _measure_by_name(ctx: TaskContext, name: str) -> BorelMeasure:
    return next(m for m in ctx.measures if m.name == name)


def run_variational(ctx: TaskContext, out: TaskOutput) -> TaskOutput:
    pp = _estimate(ctx, "pp", pp_pressure)
    _add(out, "pp", pp)
    pressure = _pressure_from_record(pp["record"])
    _add(out, "variational", _variational(ctx, pressure))
    levels = _levels(ctx)
    if levels:
        best = _measure_by_name(ctx, out.results["variational"]["best_measure"])
        _add(out, "bounds", _bounds(ctx, best, levels, pressure))
    return out


# ============================================================================
# CHECK SUITE
# ============================================================================

def _split(ctx: TaskContext) -> Tuple[SampleSet, SampleSet]:
    """Two disjoint parts of the sample: by first symbol, or first/second half."""
    points = ctx.sample.points
    space = ctx.system.space
    if space.is_symbolic:
        first = [p for p in points if p.startswith("0")]
    else:
        first = points[: len(points) // 2]
    chosen = set(map(str, first))
    second = [p for p in points if str(p) not in chosen]
    return SampleSet(space, first, ctx.sample.density), SampleSet(space, second, ctx.sample.density)


def _swapped_potential(potential: Potential, alphabet: int) -> Optional[Potential]:
    if potential.kind == PotentialKind.CONSTANT:
        return potential
    if potential.kind == PotentialKind.FIRST_SYMBOL and alphabet == 2:
        return replace(potential, table=tuple(reversed(potential.table)))
    return None


def _swap_invariance(ctx: TaskContext, props: Dict[str, Any], base: float):
    space = ctx.system.space
    if not space.is_symbolic or space.alphabet != 2:
        return
    potential = _swapped_potential(ctx.potential, space.alphabet)
    if potential is None:
        return
    Z = SampleSet(space, swap_symbols(ctx.sample.points), ctx.sample.density)
    pool = SampleSet(space, swap_symbols(ctx.pool.points), ctx.pool.density)
    swapped = _estimate(ctx, "pp-swapped", pp_pressure, Z=Z, potential=potential, pool=pool)
    props["swap_pp"] = (base, swapped["record"]["value"])


def _cover_properties(ctx: TaskContext, out: TaskOutput, props: Dict[str, Any]):
    params = ctx.params
    pp = _estimate(ctx, "pp", pp_pressure)
    prime = _estimate(ctx, "pp-prime", pp_pressure_prime)
    capacity = _capacity(ctx)
    _add(out, "pp", pp)
    _add(out, "pp-prime", prime)
    out.results["capacity-lower"], out.results["capacity-upper"] = capacity["lower"], capacity["upper"]

    pp_value = pp["record"]["value"]
    props["pp"] = pp_value
    props["cp_lower"] = capacity["lower"]["value"]
    props["cp_upper"] = capacity["upper"]["value"]
    props["prime_gaps"] = [
        (prime["record"]["per_delta"][str(d)] - pp["record"]["per_delta"][str(d)], ctx.potential.modulus(ctx.system.space, d))
        for d in params.delta_grid
    ]

    empty = SampleSet(ctx.system.space, [], 0.0)
    props["empty_pressure"] = pp_pressure(ctx.system, empty, ctx.potential, params, ctx.pool).value

    Z1, Z2 = _split(ctx)
    if Z1.points and Z2.points:
        first = _estimate(ctx, "pp-part-1", pp_pressure, Z=Z1)["record"]["value"]
        second = _estimate(ctx, "pp-part-2", pp_pressure, Z=Z2)["record"]["value"]
        props["subset_pp"] = (first, pp_value)
        props["union_pp"] = (first, second, pp_value)
        cap1 = _capacity(ctx, "capacity-part-1", Z1)
        cap2 = _capacity(ctx, "capacity-part-2", Z2)
        props["capacity_subset"] = [
            (cap1["lower"]["value"], capacity["lower"]["value"]),
            (cap1["upper"]["value"], capacity["upper"]["value"]),
        ]
        props["capacity_union"] = (cap1["upper"]["value"], cap2["upper"]["value"], capacity["upper"]["value"])

    _swap_invariance(ctx, props, pp_value)

    N = params.N_grid[0]
    geometry = CoverGeometry(ctx.system, ctx.sample, ctx.potential, ctx.pool, N + params.window, params.budget)
    family = geometry.family(params.delta_grid[-1], N, N + params.window)
    alphas = [pp_value - 1.0, pp_value, pp_value + 1.0] if math.isfinite(pp_value) else [-1.0, 0.0, 1.0]
    costs = [lp_cover(family, a)[0] for a in alphas]
    props["cost_monotone"] = all(a > b for a, b in zip(costs, costs[1:]))

    alpha = ctx.config.task.alpha if ctx.config.task.alpha is not None else pp_value
    if math.isfinite(alpha):
        sandwich = _sandwich(ctx, alpha, sorted(set(params.N_grid) | {SANDWICH_MIN_N}))
        _add(out, "sandwich", sandwich)
        props["sandwich_violations"] = sandwich["record"]["violations"]
    return pp


def _geometry_properties(ctx: TaskContext, props: Dict[str, Any]):
    params, seed = ctx.params, ctx.config.seed
    points = ctx.sample.points
    n_max = min(ORACLE_MAX_N, max(params.N_grid))
    oracle = oracle_errors(ctx.system, ctx.potential, points, ORACLE_TRIALS, n_max, seed, params.budget)
    if oracle["compared"]:
        props["oracle_max_error"] = oracle["max_error"]
        props["oracle_membership_mismatches"] = oracle["membership_mismatches"]
    props["metric_axioms"] = metric_axioms_hold(ctx.system, points, ORACLE_TRIALS // 4, n_max, seed, params.budget)

    centers = points[:SUITE_DRAWS * 2]
    n, r = params.N_grid[0], params.delta_grid[-1]
    balls = CoverFamily(items=[CoverItem(center=c, n=n, radius=r) for c in centers])
    props["vitali_ok"] = all(
        vitali_containment_holds(ctx.system, balls, vitali_subfamily(ctx.system, balls, k, params.budget), k, ctx.sample, params.budget)
        for k in (3, 5)
    )


def _measure_properties(ctx: TaskContext, out: TaskOutput, props: Dict[str, Any], pp: Dict[str, Any]):
    g, task = ctx.config.grids, ctx.config.task
    pressure = _pressure_from_record(pp["record"])
    variational = _variational(ctx, pressure)
    _add(out, "variational", variational)
    props["variational_S"] = variational["record"]["S"]
    props["variational_P"] = variational["record"]["P"]
    props["check_tolerance"] = variational["record"]["tolerance"]
    best = _measure_by_name(ctx, variational["record"]["best_measure"])

    levels = _levels(ctx)
    if levels:
        bounds = _bounds(ctx, best, levels, pressure)
        _add(out, "bounds", bounds)
        props["bounds_violations"] = bounds["record"]["violations"]

    def shift_compute():
        values = [
            measure_pressure(ctx.system, best, potential, g.r_grid, g.n_window, count=SUITE_DRAWS,
                             seed=ctx.config.seed, budget=ctx.params.budget).value
            for potential in (ctx.potential, ctx.potential.shifted(SHIFT_CONSTANT))
        ]
        return {"record": {"measure": best.name, "shift": SHIFT_CONSTANT, "base": values[0], "shifted": values[1]}}

    shift = _cached(ctx, f"measure-shift({best.name})", MEASURE_SECTIONS, shift_compute)["record"]
    if math.isfinite(shift["base"]):
        props["measure_shift"] = (shift["shift"], shift["base"], shift["shifted"])

    centers = ctx.sample.points[:SUITE_DRAWS]
    n_values = list(range(1, max(ctx.params.N_grid) + 1))
    table = BallMassTable(ctx.system, best, centers, max(n_values), ctx.params.budget)
    by_radius = [table.masses(n_values, r)[0] for r in g.r_grid]
    props["ball_mass_monotone_r"] = all(bool((a >= b - 1e-15).all()) for a, b in zip(by_radius, by_radius[1:]))
    props["ball_mass_monotone_n"] = all(bool((m[:, :-1] >= m[:, 1:] - 1e-15).all()) for m in by_radius)

    if task.alpha is not None:
        radius = task.delta if task.delta is not None else ctx.params.delta_grid[0]
        N = task.N if task.N is not None else ctx.params.N_grid[0]

        def compute():
            c = frostman_constant(ctx.system, ctx.sample, ctx.potential, task.alpha, radius, N, ctx.params.window, ctx.pool,
                                  budget=ctx.params.budget)
            report = frostman_inequality_check(ctx.system, best, ctx.sample, ctx.potential, task.alpha, radius, N,
                                               N + ctx.params.window, c, budget=ctx.params.budget)
            return {"record": report.to_record() | {"measure": best.name}, "rows": []}

        frostman = _cached(ctx, f"frostman({best.name})", TASK_SECTIONS, compute)
        out.results["frostman"] = frostman["record"]
        props["frostman_violations"] = frostman["record"]["violations"]


def run_check_suite(ctx: TaskContext, out: TaskOutput) -> TaskOutput:
    """Compute every property the guardrails check; properties with missing inputs are skipped."""
    props = out.properties
    props["tolerance"] = ctx.params.tolerance
    pp = _cover_properties(ctx, out, props)
    # sup-entropy is P(0), so the pressure oracle applies only under a zero potential
    zero = ctx.potential.kind == PotentialKind.CONSTANT and ctx.potential.constant == 0.0
    _add(out, "sup-entropy", _sup_entropy(ctx, ctx.config.task.pressure_oracle if zero else None))
    _geometry_properties(ctx, props)
    if ctx.measures:
        _measure_properties(ctx, out, props, pp)
    return out


def oracle_gaps(results: Dict[str, Dict[str, Any]]) -> List[Tuple[str, float]]:
    """(result name, |estimate - oracle|) for every record compared against an oracle."""
    return [(name, record["oracle_gap"]) for name, record in sorted(results.items()) if "oracle_gap" in record]


TASK_RUNNERS: Dict[str, Callable[[TaskContext, TaskOutput], TaskOutput]] = {
    "sup-entropy": run_sup_entropy,
    "pp-pressure": run_pp_pressure,
    "capacity": run_capacity,
    "weighted": run_weighted,
    "measure-pressure": run_measure_pressure,
    "variational": run_variational,
    "check-suite": run_check_suite,
}
