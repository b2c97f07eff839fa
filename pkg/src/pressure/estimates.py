# ============================================================================
# PRESSURE ESTIMATES
# File: src/pressure/estimates.py
# Purpose: Pesin-Pitskel, P', capacity and weighted pressures + W/M sandwich
# ============================================================================

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.dynamics.counting import SampleSet
from src.dynamics.word_tree import DEFAULT_BUDGET, BoundMode, TreeBudget
from src.pressure.covers import CandidateFamily, CoverGeometry, greedy_cover, lp_cover
from src.pressure.critical import DEFAULT_TOLERANCE, critical_alpha
from src.systems.naifs import NaifsSystem
from src.systems.potentials import Potential

logger = logging.getLogger(__name__)

ESTIMATORS = ("growth", "crossing")
UPPER_BOUND = "upper-bound"
LOWER_BOUND = "lower-bound"


@dataclass(frozen=True)
class PressureParams:
    """Grid and solver settings shared by every cover-based estimator."""

    delta_grid: Tuple[float, ...]
    N_grid: Tuple[int, ...]
    window: int = 6
    tolerance: float = DEFAULT_TOLERANCE
    estimator: str = "growth"
    bracket0: Tuple[float, float] = (-1.0, 1.0)
    budget: TreeBudget = DEFAULT_BUDGET
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "delta_grid", tuple(float(d) for d in self.delta_grid))
        object.__setattr__(self, "N_grid", tuple(int(n) for n in self.N_grid))
        if not self.delta_grid or not self.N_grid:
            raise ValueError("delta_grid and N_grid must be nonempty")
        if any(a <= b for a, b in zip(self.delta_grid, self.delta_grid[1:])):
            raise ValueError("delta_grid must be strictly decreasing")
        if any(a >= b for a, b in zip(self.N_grid, self.N_grid[1:])):
            raise ValueError("N_grid must be strictly increasing")
        if self.N_grid[0] < 1:
            raise ValueError("N_grid entries must be >= 1")
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"estimator must be one of {ESTIMATORS}, got {self.estimator!r}")
        if self.estimator == "growth" and len(self.N_grid) < 2:
            raise ValueError("the growth estimator needs at least two N values")


@dataclass
class PressureEstimate:
    value: float
    bracket: Tuple[float, float]
    direction: str
    mode: BoundMode
    kind: str
    estimator: str
    diagnostics: Dict[str, Any] = field(default_factory=dict)
    per_delta: Dict[float, float] = field(default_factory=dict)
    table: List[Dict[str, Any]] = field(default_factory=list)

    def to_record(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "value": self.value,
            "bracket": list(self.bracket),
            "direction": self.direction,
            "mode": self.mode.value,
            "estimator": self.estimator,
            "diagnostics": self.diagnostics,
            "per_delta": {str(k): v for k, v in self.per_delta.items()},
        }


# ============================================================================
# CELL COMPUTATIONS
# ============================================================================

Solver = Callable[[CandidateFamily, float], float]


def _greedy_log_cost(family: CandidateFamily, alpha: float) -> float:
    return greedy_cover(family, alpha)[0]


def _lp_log_cost(family: CandidateFamily, alpha: float) -> float:
    return lp_cover(family, alpha)[0]


@dataclass
class _CellResult:
    delta: float
    rows: List[Dict[str, Any]]
    values: Dict[int, Tuple[float, Tuple[float, float]]]   # N -> (alpha*, bracket)
    cover_sizes: Dict[int, int]


def _delta_cell(
    geometry: CoverGeometry,
    delta: float,
    params: PressureParams,
    solver: Solver,
    fixed_length: bool,
    ball_sup: bool,
) -> _CellResult:
    families = {
        N: geometry.family(delta, N, N if fixed_length else N + params.window, ball_sup)
        for N in params.N_grid
    }
    rows: List[Dict[str, Any]] = []
    crossings = {}
    for N, fam in families.items():
        crossings[N] = critical_alpha(lambda a, f=fam: solver(f, a), params.bracket0, params.tolerance)
    values: Dict[int, Tuple[float, Tuple[float, float]]] = {}
    if params.estimator == "crossing":
        values = dict(crossings)
    else:
        for prev, N in zip(params.N_grid, params.N_grid[1:]):
            hi_fam, lo_fam = families[N], families[prev]
            values[N] = critical_alpha(
                lambda a, h=hi_fam, l=lo_fam: solver(h, a) - solver(l, a), params.bracket0, params.tolerance
            )
    for N in params.N_grid:
        rows.append({
            "delta": delta,
            "N": N,
            "N_max": N if fixed_length else N + params.window,
            "candidates": len(families[N]),
            "crossing": crossings[N][0],
            "growth": values[N][0] if params.estimator == "growth" and N in values else float("nan"),
        })
    sizes = {N: len(greedy_cover(fam, values.get(N, crossings[N])[0])[1]) for N, fam in families.items()}
    logger.debug(f"delta={delta:g}: " + ", ".join(f"N={N} -> {v[0]:.5f}" for N, v in values.items()))
    return _CellResult(delta=delta, rows=rows, values=values, cover_sizes=sizes)


def _run_cells(
    system: NaifsSystem,
    Z: SampleSet,
    potential: Potential,
    pool: Optional[SampleSet],
    params: PressureParams,
    solver: Solver,
    fixed_length: bool,
    ball_sup: bool,
) -> Tuple[List[_CellResult], CoverGeometry]:
    depth = max(params.N_grid) + (0 if fixed_length else params.window)
    geometry = CoverGeometry(system, Z, potential, pool if pool is not None else Z, depth, params.budget)
    cell = lambda d: _delta_cell(geometry, d, params, solver, fixed_length, ball_sup)
    if params.workers > 1:
        with ThreadPoolExecutor(max_workers=params.workers) as executor:
            cells = list(executor.map(cell, params.delta_grid))
    else:
        cells = [cell(d) for d in params.delta_grid]
    return cells, geometry


def _empty_estimate(kind: str, params: PressureParams) -> PressureEstimate:
    logger.info(f"{kind}: empty target set, every cover costs 0")
    return PressureEstimate(
        value=-math.inf,
        bracket=(-math.inf, -math.inf),
        direction=UPPER_BOUND,
        mode=BoundMode.EXACT,
        kind=kind,
        estimator=params.estimator,
        diagnostics={"target_size": 0},
        per_delta={d: -math.inf for d in params.delta_grid},
    )


def _assemble(kind: str, cells: List[_CellResult], geometry: CoverGeometry, params: PressureParams, pick) -> PressureEstimate:
    per_delta = {}
    brackets = {}
    for cell in cells:
        value, bracket = pick(cell)
        per_delta[cell.delta] = value
        brackets[cell.delta] = bracket
    smallest = params.delta_grid[-1]
    last = cells[-1]
    N_last = max(last.values)
    estimate = PressureEstimate(
        value=per_delta[smallest],
        bracket=brackets[smallest],
        direction=UPPER_BOUND,
        mode=geometry.mode,
        kind=kind,
        estimator=params.estimator,
        diagnostics={
            "delta": smallest,
            "N": N_last,
            "N_max": N_last + params.window if kind not in ("capacity-lower", "capacity-upper") else N_last,
            "pool_size": len(geometry.pool),
            "target_size": len(geometry.target),
            "cover_size": last.cover_sizes.get(N_last, 0),
        },
        per_delta=per_delta,
        table=[row for cell in cells for row in cell.rows],
    )
    logger.info(
        f"{kind}: {estimate.value:.6f} in [{estimate.bracket[0]:.6f}, {estimate.bracket[1]:.6f}] "
        f"({estimate.direction}, {estimate.mode.value})"
    )
    return estimate


def _last_value(cell: _CellResult):
    return cell.values[max(cell.values)]


# ============================================================================
# ESTIMATORS
# ============================================================================

def pp_pressure(
    system: NaifsSystem,
    Z: SampleSet,
    potential: Potential,
    params: PressureParams,
    pool: Optional[SampleSet] = None,
) -> PressureEstimate:
    """Pesin-Pitskel pressure from greedy variable-length covers."""
    if not Z.points:
        return _empty_estimate("pp", params)
    cells, geometry = _run_cells(system, Z, potential, pool, params, _greedy_log_cost, False, False)
    return _assemble("pp", cells, geometry, params, _last_value)


def pp_pressure_prime(
    system: NaifsSystem,
    Z: SampleSet,
    potential: Potential,
    params: PressureParams,
    pool: Optional[SampleSet] = None,
) -> PressureEstimate:
    """As pp_pressure with ball costs using the pool-relative sup of S_n phi over the ball."""
    if not Z.points:
        return _empty_estimate("pp-prime", params)
    cells, geometry = _run_cells(system, Z, potential, pool, params, _greedy_log_cost, False, True)
    return _assemble("pp-prime", cells, geometry, params, _last_value)


def weighted_pressure(
    system: NaifsSystem,
    Z: SampleSet,
    potential: Potential,
    params: PressureParams,
    pool: Optional[SampleSet] = None,
) -> PressureEstimate:
    """Critical exponent of the fractional covering cost W."""
    if not Z.points:
        return _empty_estimate("weighted", params)
    cells, geometry = _run_cells(system, Z, potential, pool, params, _lp_log_cost, False, False)
    return _assemble("weighted", cells, geometry, params, _last_value)


def capacity_pressures(
    system: NaifsSystem,
    Z: SampleSet,
    potential: Potential,
    params: PressureParams,
    pool: Optional[SampleSet] = None,
) -> Tuple[PressureEstimate, PressureEstimate]:
    """
    Lower and upper capacity pressures from fixed-length covers.

    Per delta the per-N values over the tail half of the available N values
    give the liminf (min) and limsup (max) proxies.
    """
    if not Z.points:
        return _empty_estimate("capacity-lower", params), _empty_estimate("capacity-upper", params)
    cells, geometry = _run_cells(system, Z, potential, pool, params, _greedy_log_cost, True, False)

    def tail(cell: _CellResult):
        Ns = sorted(cell.values)
        return [cell.values[N] for N in Ns[-max(1, math.ceil(len(Ns) / 2)):]]

    lower = _assemble("capacity-lower", cells, geometry, params, lambda c: min(tail(c), key=lambda v: v[0]))
    upper = _assemble("capacity-upper", cells, geometry, params, lambda c: max(tail(c), key=lambda v: v[0]))
    return lower, upper


# ============================================================================
# W / M SANDWICH
# ============================================================================

@dataclass
class SandwichReport:
    alpha: float
    epsilon: float
    delta: float
    N: int
    N_max: int
    M_alpha: float
    W_alpha: float
    M_shifted: float
    upper_holds: bool
    lower_holds: bool
    N_threshold: int
    counted: bool
    mode: BoundMode = BoundMode.EXACT

    @property
    def violations(self) -> int:
        if not self.counted:
            return 0
        return int(not self.upper_holds) + int(not self.lower_holds)

    def to_record(self) -> Dict[str, Any]:
        return {
            "alpha": self.alpha, "epsilon": self.epsilon, "delta": self.delta,
            "N": self.N, "N_max": self.N_max,
            "M_shifted": self.M_shifted, "W": self.W_alpha, "M": self.M_alpha,
            "upper_holds": self.upper_holds, "lower_holds": self.lower_holds,
            "N_threshold": self.N_threshold, "counted": self.counted, "violations": self.violations,
            "mode": self.mode.value,
        }


def sandwich_threshold(gamma: float, epsilon: float, limit: int = 10_000) -> int:
    """Smallest N with N^2 exp(N (gamma - epsilon)) <= 1."""
    for N in range(1, limit + 1):
        if 2 * math.log(N) + N * (gamma - epsilon) <= 0:
            return N
    return limit


def sandwich_check_WM(
    system: NaifsSystem,
    Z: SampleSet,
    potential: Potential,
    alpha: float,
    epsilon: float,
    delta: float,
    N: int,
    window: int = 6,
    pool: Optional[SampleSet] = None,
    threshold_gamma: Optional[float] = None,
    budget: TreeBudget = DEFAULT_BUDGET,
    slack: float = 1e-6,
    min_counted: int = 0,
) -> SandwichReport:
    """
    Evaluate M(alpha+eps, 6 delta, N) <= W(alpha, delta, N) <= M(alpha, delta, N).

    Only N at or above the threshold (the gamma threshold when given, and
    never below ``min_counted``) count as violations.
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    N_max = N + window
    threshold = max(min_counted, sandwich_threshold(threshold_gamma, epsilon) if threshold_gamma is not None else 0)
    if not Z.points:
        return SandwichReport(alpha, epsilon, delta, N, N_max, 0.0, 0.0, 0.0, True, True, threshold, N >= threshold)
    geometry = CoverGeometry(system, Z, potential, pool if pool is not None else Z, N_max, budget)
    family = geometry.family(delta, N, N_max)
    log_M = greedy_cover(family, alpha)[0]
    log_W = lp_cover(family, alpha)[0]
    log_M_shift = greedy_cover(geometry.family(6 * delta, N, N_max), alpha + epsilon)[0]
    tol = math.log1p(slack)
    report = SandwichReport(
        alpha=alpha, epsilon=epsilon, delta=delta, N=N, N_max=N_max,
        M_alpha=float(np.exp(log_M)), W_alpha=float(np.exp(log_W)), M_shifted=float(np.exp(log_M_shift)),
        upper_holds=log_W <= log_M + tol,
        lower_holds=log_M_shift <= log_W + tol,
        N_threshold=threshold,
        counted=N >= threshold,
        mode=geometry.mode,
    )
    status = "✓" if report.violations == 0 else "✗"
    logger.info(f"{status} sandwich N={N}: M'={report.M_shifted:.5g} W={report.W_alpha:.5g} M={report.M_alpha:.5g}")
    return report
