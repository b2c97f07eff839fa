# ============================================================================
# MEASURE CHECKS
# File: src/measures/checks.py
# Purpose: Frostman inequality, variational gap and the two-sided pressure bounds
# ============================================================================

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from src.dynamics.counting import SampleSet
from src.dynamics.word_tree import DEFAULT_BUDGET, TreeBudget
from src.errors import MeasurePreconditionError
from src.measures.local_pressure import MeasurePressureValue, birkhoff_sums, local_lower_pressures, measure_pressure
from src.measures.measures import MASS_TOL, BallMassTable, BorelMeasure
from src.measures.targets import TargetSet
from src.pressure.covers import weighted_cover_cost_W
from src.pressure.estimates import PressureEstimate, PressureParams, pp_pressure
from src.systems.naifs import NaifsSystem
from src.systems.potentials import Potential

logger = logging.getLogger(__name__)

DEFAULT_CHECK_TOLERANCE = 0.05


# ============================================================================
# FROSTMAN INEQUALITY
# ============================================================================

@dataclass
class FrostmanReport:
    alpha: float
    epsilon: float
    c: float
    checked: int
    violations: int
    worst_slack: float
    worst_point: Any = None
    worst_n: Optional[int] = None

    def to_record(self) -> Dict[str, Any]:
        return {
            "alpha": self.alpha, "epsilon": self.epsilon, "c": self.c,
            "checked": self.checked, "violations": self.violations,
            "worst_slack": self.worst_slack, "worst_point": str(self.worst_point), "worst_n": self.worst_n,
        }


def frostman_constant(
    system: NaifsSystem,
    K: SampleSet,
    potential: Potential,
    alpha: float,
    epsilon: float,
    N: int,
    window: int = 6,
    pool: Optional[SampleSet] = None,
    demand: Optional[Sequence[float]] = None,
    budget: TreeBudget = DEFAULT_BUDGET,
) -> float:
    """c = W(h chi_K, alpha, epsilon, N), the fractional covering cost of K."""
    return weighted_cover_cost_W(system, K, potential, alpha, epsilon, N, N + window, pool, demand, budget)


def frostman_inequality_check(
    system: NaifsSystem,
    measure: BorelMeasure,
    K: SampleSet,
    potential: Potential,
    alpha: float,
    epsilon: float,
    N: int,
    n_max: int,
    c: float,
    rel_tol: float = 1e-6,
    budget: TreeBudget = DEFAULT_BUDGET,
) -> FrostmanReport:
    """mu(B_n(x, eps)) <= exp(-alpha n + S_n phi(x)) / c for x in K, N <= n <= n_max."""
    if c <= 0:
        raise ValueError(f"c must be positive, got {c}")
    if not N <= n_max:
        raise ValueError(f"need N <= n_max, got {N} > {n_max}")
    if not K.points:
        return FrostmanReport(alpha, epsilon, c, 0, 0, math.inf)
    n_values = list(range(N, n_max + 1))
    ns = np.asarray(n_values, dtype=np.float64)
    mass, _ = BallMassTable(system, measure, K.points, n_max, budget).masses(n_values, epsilon)
    sums = birkhoff_sums(system, potential, K.points, n_values, budget)
    with np.errstate(divide="ignore"):
        slack = (-math.log(c) - alpha * ns + sums) - np.log(mass)
    failing = slack < -math.log1p(rel_tol)
    worst = np.unravel_index(int(np.argmin(slack)), slack.shape)
    report = FrostmanReport(
        alpha=alpha, epsilon=epsilon, c=c,
        checked=int(slack.size),
        violations=int(failing.sum()),
        worst_slack=float(slack[worst]),
        worst_point=K.points[worst[0]],
        worst_n=n_values[worst[1]],
    )
    status = "✓" if report.violations == 0 else "✗"
    logger.info(f"{status} frostman alpha={alpha:g}: {report.violations}/{report.checked} violations, worst log slack {report.worst_slack:.4g}")
    return report


# ============================================================================
# VARIATIONAL GAP
# ============================================================================

@dataclass
class VariationalReport:
    sup_measure_pressure: float
    pressure: PressureEstimate
    gap: float
    best_measure: str
    tolerance: float
    values: Dict[str, MeasurePressureValue] = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.sup_measure_pressure <= self.pressure.value + self.tolerance

    def rows(self) -> List[Dict[str, Any]]:
        return [v.to_record() for v in self.values.values()]

    def to_record(self) -> Dict[str, Any]:
        return {
            "S": self.sup_measure_pressure, "P": self.pressure.value, "gap": self.gap,
            "best_measure": self.best_measure, "tolerance": self.tolerance, "holds": self.holds,
        }


def _require_full_mass(Z: TargetSet, system: NaifsSystem, measure: BorelMeasure):
    mass = Z.measure_of(system.space, measure)
    if mass < 1.0 - MASS_TOL:
        raise MeasurePreconditionError(f"{measure.name} gives the target set mass {mass:.12g} < 1")


def variational_gap(
    system: NaifsSystem,
    Z: TargetSet,
    potential: Potential,
    family: Sequence[BorelMeasure],
    params: PressureParams,
    r_grid: Sequence[float],
    n_window: Sequence[int],
    count: int = 64,
    seed: int = 0,
    pool: Optional[SampleSet] = None,
    tolerance: float = DEFAULT_CHECK_TOLERANCE,
    pressure: Optional[PressureEstimate] = None,
) -> VariationalReport:
    """S = max over the family of the measure pressure, P = pp_pressure(Z), gap P - S."""
    if not family:
        raise ValueError("the measure family is empty")
    for measure in family:
        _require_full_mass(Z, system, measure)
    if pressure is None:
        pressure = pp_pressure(system, Z.sample(system.space), potential, params, pool)
    values: Dict[str, MeasurePressureValue] = {}
    for measure in family:
        values[measure.name] = measure_pressure(
            system, measure, potential, r_grid, n_window, count=count, seed=seed,
            budget=params.budget, workers=params.workers,
        )
    best = max(values, key=lambda name: values[name].value)
    S = values[best].value
    report = VariationalReport(
        sup_measure_pressure=S,
        pressure=pressure,
        gap=pressure.value - S,
        best_measure=best,
        tolerance=tolerance,
        values=values,
    )
    status = "✓" if report.holds else "✗"
    logger.info(f"{status} variational: S={S:.5f} ({best}) P={pressure.value:.5f} gap={report.gap:.5f}")
    return report


# ============================================================================
# TWO-SIDED BOUNDS FROM LOCAL PRESSURES
# ============================================================================

@dataclass
class LevelOutcome:
    s: float
    all_below: bool
    all_above: bool
    upper_asserted: bool
    upper_holds: bool
    lower_asserted: bool
    lower_holds: bool

    @property
    def violated(self) -> bool:
        return (self.upper_asserted and not self.upper_holds) or (self.lower_asserted and not self.lower_holds)


@dataclass
class BoundsReport:
    pressure: float
    target_mass: float
    local_min: float
    local_max: float
    tolerance: float
    levels: List[LevelOutcome] = field(default_factory=list)

    @property
    def violations(self) -> int:
        return sum(p.violated for p in self.levels)

    def rows(self) -> List[Dict[str, Any]]:
        return [vars(p) | {"pressure": self.pressure} for p in self.levels]


def pressure_bounds_check(
    system: NaifsSystem,
    Z: TargetSet,
    measure: BorelMeasure,
    potential: Potential,
    levels: Sequence[float],
    params: PressureParams,
    r_grid: Sequence[float],
    n_window: Sequence[int],
    count: int = 64,
    seed: int = 0,
    pool: Optional[SampleSet] = None,
    tolerance: float = DEFAULT_CHECK_TOLERANCE,
    pressure: Optional[PressureEstimate] = None,
) -> BoundsReport:
    """
    For each level s: local lower pressure <= s on all sampled x in Z must
    give P_Z <= s + tol; local lower pressure >= s on all of them (with
    mu(Z) > 0) must give P_Z >= s - tol.
    """
    space = system.space
    measure.validate_for(space)
    target_mass = Z.measure_of(space, measure)
    if target_mass <= 0:
        raise MeasurePreconditionError(f"{measure.name} gives the target set zero mass")
    if pressure is None:
        pressure = pp_pressure(system, Z.sample(space), potential, params, pool)

    draws = [x for x in measure.draws(space, count, seed) if Z.contains(space, x)]
    if not draws:
        draws = Z.sample(space).points[:count]
    locals_ = local_lower_pressures(system, measure, potential, draws, r_grid, n_window, params.budget)
    values = np.asarray([v.value for v in locals_])
    report = BoundsReport(
        pressure=pressure.value,
        target_mass=target_mass,
        local_min=float(values.min()),
        local_max=float(values.max()),
        tolerance=tolerance,
    )
    for s in levels:
        below = bool((values <= s).all())
        above = bool((values >= s).all())
        report.levels.append(LevelOutcome(
            s=float(s),
            all_below=below,
            all_above=above,
            upper_asserted=below,
            upper_holds=(not below) or pressure.value <= s + tolerance,
            lower_asserted=above,
            lower_holds=(not above) or pressure.value >= s - tolerance,
        ))
    status = "✓" if report.violations == 0 else "✗"
    logger.info(
        f"{status} local-pressure bounds: locals in [{report.local_min:.4f}, {report.local_max:.4f}], "
        f"P={pressure.value:.4f}, {report.violations} violation(s)"
    )
    return report
