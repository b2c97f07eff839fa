# ============================================================================
# MEASURE-THEORETIC PRESSURE
# File: src/measures/local_pressure.py
# Purpose: Local lower pressure of a measure at points and its mu-integral
# ============================================================================

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.dynamics.word_tree import DEFAULT_BUDGET, BoundMode, TreeBudget, birkhoff_levels, orbit_table, tree_shape
from src.measures.measures import BallMassTable, BorelMeasure, MeasureKind
from src.systems.naifs import NaifsSystem
from src.systems.potentials import Potential, PotentialKind
from src.systems.spaces import Point

logger = logging.getLogger(__name__)

STABILIZATION_GAP = 0.02
INTEGRATIONS = ("exact-atomic", "monte-carlo")


@dataclass
class LocalPressureValue:
    point: Point
    r_grid: List[float]
    n_values: List[int]
    table: Dict[Tuple[float, int], float] = field(default_factory=dict)
    liminf: Dict[float, float] = field(default_factory=dict)
    value: float = float("nan")
    stabilized: bool = False
    undersampled: bool = False
    mode: BoundMode = BoundMode.EXACT

    def rows(self) -> List[Dict[str, object]]:
        return [{"point": str(self.point), "r": r, "n": n, "quantity": q} for (r, n), q in self.table.items()]


@dataclass
class MeasurePressureValue:
    value: float
    standard_error: float
    integration: str
    count: int
    measure: str
    mode: BoundMode
    locals: List[LocalPressureValue] = field(default_factory=list)

    def to_record(self) -> Dict[str, object]:
        return {
            "measure": self.measure,
            "value": self.value,
            "standard_error": self.standard_error,
            "integration": self.integration,
            "count": self.count,
            "mode": self.mode.value,
            "stabilized": all(v.stabilized for v in self.locals),
            "undersampled": any(v.undersampled for v in self.locals),
        }


def _check_grids(r_grid: Sequence[float], n_window: Sequence[int]) -> Tuple[List[float], List[int]]:
    r_grid = [float(r) for r in r_grid]
    if not r_grid or any(a <= b for a, b in zip(r_grid, r_grid[1:])):
        raise ValueError("r_grid must be nonempty and strictly decreasing")
    if min(r_grid) <= 0:
        raise ValueError("radii must be positive")
    n_lo, n_hi = int(n_window[0]), int(n_window[1])
    if n_lo < 1 or n_hi - n_lo < 4:
        raise ValueError(f"n_window needs 1 <= n_lo and n_hi - n_lo >= 4, got {list(n_window)}")
    return r_grid, list(range(n_lo, n_hi + 1))


def birkhoff_sums(
    system: NaifsSystem, potential: Potential, points: Sequence[Point], n_values: List[int], budget: TreeBudget
) -> np.ndarray:
    """S_n phi for each point and n, shape (P, len(n_values))."""
    ns = np.asarray(n_values, dtype=np.float64)
    if potential.kind == PotentialKind.CONSTANT:
        return np.tile(ns * potential.constant, (len(points), 1))
    n_hi = max(n_values)
    table = orbit_table(system, system.space.to_array(points), n_hi - 1, 1, budget)
    sums = birkhoff_levels(system, potential, table, n_hi)
    return sums[[n - 1 for n in n_values]].T


def local_lower_pressures(
    system: NaifsSystem,
    measure: BorelMeasure,
    potential: Potential,
    points: Sequence[Point],
    r_grid: Sequence[float],
    n_window: Sequence[int],
    budget: TreeBudget = DEFAULT_BUDGET,
) -> List[LocalPressureValue]:
    """Batched local_lower_pressure over several points."""
    r_grid, n_values = _check_grids(r_grid, n_window)
    points = list(points)
    if not points:
        return []
    n_lo, n_hi = n_values[0], n_values[-1]
    tail = np.asarray(n_values) >= n_lo + math.ceil((n_hi - n_lo) / 2)
    mode = tree_shape(system, 1, n_hi, budget).mode
    sums = birkhoff_sums(system, potential, points, n_values, budget)
    masses = BallMassTable(system, measure, points, n_hi, budget)
    ns = np.asarray(n_values, dtype=np.float64)

    results = [LocalPressureValue(point=p, r_grid=r_grid, n_values=n_values, mode=mode) for p in points]
    for r in r_grid:
        mass, _ = masses.masses(n_values, r)
        with np.errstate(divide="ignore"):
            quantity = (-np.log(mass) + sums) / ns
        for i, result in enumerate(results):
            for j, n in enumerate(n_values):
                result.table[(r, n)] = float(quantity[i, j])
            result.liminf[r] = float(quantity[i, tail].min())
            if measure.kind == MeasureKind.SAMPLED and np.isinf(quantity[i]).any():
                result.undersampled = True
    for result in results:
        result.value = result.liminf[r_grid[-1]]
        if len(r_grid) >= 2:
            last, previous = result.liminf[r_grid[-1]], result.liminf[r_grid[-2]]
            result.stabilized = bool(np.isfinite(last) and np.isfinite(previous) and abs(last - previous) < STABILIZATION_GAP)
        if result.undersampled:
            logger.warning(
                f"sampled measure {measure.name} gives an empty Bowen ball at {result.point!r}; "
                f"local pressure is +inf (undersampled, count={measure.count})"
            )
    return results


def local_lower_pressure(
    system: NaifsSystem,
    measure: BorelMeasure,
    potential: Potential,
    x: Point,
    r_grid: Sequence[float],
    n_window: Sequence[int],
    budget: TreeBudget = DEFAULT_BUDGET,
) -> LocalPressureValue:
    """(-log mu(B_n(x,r)) + S_n phi(x)) / n with liminf and r -> 0 proxies."""
    return local_lower_pressures(system, measure, potential, [x], r_grid, n_window, budget)[0]


def measure_pressure(
    system: NaifsSystem,
    measure: BorelMeasure,
    potential: Potential,
    r_grid: Sequence[float],
    n_window: Sequence[int],
    integration: Optional[str] = None,
    count: int = 64,
    seed: int = 0,
    budget: TreeBudget = DEFAULT_BUDGET,
    workers: int = 1,
) -> MeasurePressureValue:
    """
    Integral of the local lower pressure against mu.

    exact-atomic sums over the atoms; monte-carlo averages over ``count``
    draws from the stream keyed by (seed, draw index) and attaches the
    standard error.
    """
    integration = integration or ("exact-atomic" if measure.kind == MeasureKind.ATOMIC else "monte-carlo")
    if integration not in INTEGRATIONS:
        raise ValueError(f"integration must be one of {INTEGRATIONS}, got {integration!r}")
    space = system.space
    measure.validate_for(space)

    if integration == "exact-atomic":
        if measure.kind != MeasureKind.ATOMIC:
            raise ValueError("exact-atomic integration needs an atomic measure")
        points, weights = list(measure.points), np.asarray(measure.weights)
    else:
        if count < 1:
            raise ValueError(f"monte-carlo count must be >= 1, got {count}")
        points, weights = measure.draws(space, count, seed), np.full(count, 1.0 / count)

    def chunk_values(chunk: List[Point]) -> List[LocalPressureValue]:
        return local_lower_pressures(system, measure, potential, chunk, r_grid, n_window, budget)

    if workers > 1 and len(points) > 1:
        size = math.ceil(len(points) / workers)
        chunks = [points[i:i + size] for i in range(0, len(points), size)]
        with ThreadPoolExecutor(max_workers=workers) as executor:
            locals_ = [v for part in executor.map(chunk_values, chunks) for v in part]
    else:
        locals_ = chunk_values(points)

    values = np.asarray([v.value for v in locals_])
    if np.isinf(values).any():
        value, error = float(np.inf), float("nan")
    else:
        value = float(np.dot(weights, values))
        error = 0.0 if integration == "exact-atomic" or len(values) < 2 else float(values.std(ddof=1) / math.sqrt(len(values)))
    result = MeasurePressureValue(
        value=value,
        standard_error=error,
        integration=integration,
        count=len(points),
        measure=measure.name,
        mode=BoundMode.combine(*(v.mode for v in locals_)),
        locals=locals_,
    )
    logger.info(f"measure pressure of {measure.name}: {value:.6f} (se {error:.2g}, {integration})")
    return result
