# ============================================================================
# DYNAMIC METRICS
# File: src/dynamics/metrics.py
# Purpose: d_n, d_n*, Bowen balls and maximal Birkhoff sums for single points
# ============================================================================

import logging
from typing import List, Sequence, Tuple

import numpy as np

from src.dynamics.word_tree import (
    DEFAULT_BUDGET,
    BoundMode,
    TreeBudget,
    birkhoff_levels,
    iter_levels,
    orbit_table,
    tree_shape,
)
from src.systems.naifs import NaifsSystem
from src.systems.potentials import Potential
from src.systems.spaces import POINT_TOL, Point, base_distance

logger = logging.getLogger(__name__)


def _dn_from_start(system: NaifsSystem, x: Point, y: Point, n: int, start: int, budget: TreeBudget) -> Tuple[float, BoundMode]:
    space = system.space
    shape = tree_shape(system, start, n, budget)
    running = 0.0
    for level in iter_levels(system, shape, space.to_array([x, y])):
        running = max(running, float(space.distance_array(level[0], level[1]).max()))
        if running >= space.diameter - POINT_TOL:
            break
    return running, shape.mode


def d_n(system: NaifsSystem, x: Point, y: Point, n: int, budget: TreeBudget = DEFAULT_BUDGET) -> Tuple[float, BoundMode]:
    """Word-maximal Bowen metric with start time 1."""
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if n == 0:
        return base_distance(system.space, x, y), BoundMode.EXACT
    return _dn_from_start(system, x, y, n, 1, budget)


def d_n_star(system: NaifsSystem, x: Point, y: Point, n: int, budget: TreeBudget = DEFAULT_BUDGET) -> Tuple[float, BoundMode]:
    """Sup of the word-maximal metric over start times 1..|preamble|+|period|."""
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if n == 0:
        return base_distance(system.space, x, y), BoundMode.EXACT
    results = [_dn_from_start(system, x, y, n, start, budget) for start in range(1, system.start_classes + 1)]
    return max(v for v, _ in results), BoundMode.combine(*(m for _, m in results))


def bowen_ball_membership(
    system: NaifsSystem, center: Point, x: Point, n: int, delta: float, budget: TreeBudget = DEFAULT_BUDGET
) -> Tuple[bool, bool]:
    """
    Returns (inside, uncertain).

    A lower-bound distance below delta cannot rule the point out, so it is
    reported inside and flagged uncertain.
    """
    if delta <= 0:
        raise ValueError(f"ball radius must be positive, got {delta}")
    value, mode = d_n(system, center, x, n, budget)
    if value >= delta:
        return False, False
    return True, mode == BoundMode.LOWER_BOUND


def bowen_ball_contains(
    system: NaifsSystem, center: Point, x: Point, n: int, delta: float, budget: TreeBudget = DEFAULT_BUDGET
) -> bool:
    inside, uncertain = bowen_ball_membership(system, center, x, n, delta, budget)
    if uncertain:
        logger.debug(f"ball membership of {x!r} in B_{n}({center!r}, {delta}) is uncertain (beam mode)")
    return inside


def birkhoff_max(
    system: NaifsSystem, potential: Potential, x: Point, n: int, budget: TreeBudget = DEFAULT_BUDGET
) -> Tuple[float, BoundMode]:
    """max over words w of length n of sum_{i<n} phi(f_w^{1,i} x)."""
    if n < 1:
        raise ValueError(f"Birkhoff sums need n >= 1, got {n}")
    table = orbit_table(system, system.space.to_array([x]), n - 1, 1, budget)
    return float(birkhoff_levels(system, potential, table, n)[-1, 0]), table.mode


def birkhoff_ball_sup(
    system: NaifsSystem,
    potential: Potential,
    x: Point,
    n: int,
    delta: float,
    pool: Sequence[Point],
    budget: TreeBudget = DEFAULT_BUDGET,
) -> Tuple[float, BoundMode]:
    """Largest S_n phi(y) over pool points y with d_n(x, y) < delta."""
    if not pool:
        raise ValueError("pool must be nonempty")
    space = system.space
    points: List[Point] = [x] + [p for p in pool if base_distance(space, p, x) > POINT_TOL]
    table = orbit_table(system, space.to_array(points), n, 1, budget)
    sums = birkhoff_levels(system, potential, table, n)[-1]
    dist = np.zeros(len(points))
    for level in table.levels:
        dist = np.maximum(dist, space.distance_array(level[:1], level).max(axis=1))
    inside = dist < delta
    return float(sums[inside].max()), table.mode
