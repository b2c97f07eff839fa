# ============================================================================
# COVER COSTS
# File: src/pressure/covers.py
# Purpose: Candidate Bowen-ball families and the M, R, W cover costs
# ============================================================================

"""
All three costs share one geometry per (system, Z, pool, potential, depth):
the matrix of d_n(center, z) for every pool center, sample point and n, and
the maximal Birkhoff sums of every pool point. A candidate family for a
given (delta, N, N_max) is then a thresholding of that geometry.

Costs are handled in log space throughout; an empty Z has log cost -inf.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import csr_matrix
from scipy.special import logsumexp

from src.dynamics.counting import SampleSet
from src.dynamics.word_tree import (
    DEFAULT_BUDGET,
    BoundMode,
    TreeBudget,
    birkhoff_levels,
    dn_matrix,
    orbit_table,
)
from src.errors import NoCoverError
from src.systems.naifs import NaifsSystem
from src.systems.potentials import Potential

logger = logging.getLogger(__name__)

LP_SHIFT_FLOOR = -700.0


@dataclass
class CandidateFamily:
    """Deduplicated candidate balls: one row per distinct (length, ball)."""

    centers: np.ndarray      # pool indices
    lengths: np.ndarray
    birkhoff: np.ndarray     # S_n phi at the center, or its pool-relative ball sup
    members: np.ndarray      # (C, |Z|) ball membership
    radius: float
    mode: BoundMode

    @property
    def z_count(self) -> int:
        return self.members.shape[1]

    def __len__(self) -> int:
        return len(self.lengths)

    def log_weights(self, alpha: float) -> np.ndarray:
        return -alpha * self.lengths + self.birkhoff


class CoverGeometry:
    """d_n(center, z) and S_n phi for a pool, a target sample and n <= depth."""

    def __init__(
        self,
        system: NaifsSystem,
        target: SampleSet,
        potential: Potential,
        pool: SampleSet,
        depth: int,
        budget: TreeBudget = DEFAULT_BUDGET,
    ):
        if not pool.contains_all(target):
            raise ValueError("the candidate pool must contain every target sample point")
        self.system = system
        self.target = target
        self.potential = potential
        self.pool = pool
        self.depth = depth
        pool_table = orbit_table(system, pool.array(), depth, 1, budget)
        self.mode = pool_table.mode
        self.birkhoff = birkhoff_levels(system, potential, pool_table, depth) if depth >= 1 else np.zeros((0, len(pool)))
        if target.points:
            target_table = pool_table if target.points == pool.points else orbit_table(system, target.array(), depth, 1, budget)
            self.dn_pool_target = dn_matrix(pool_table, target_table)
        else:
            self.dn_pool_target = np.zeros((depth + 1, len(pool), 0))
        self._pool_table = pool_table
        self._dn_pool_pool: Optional[np.ndarray] = None
        logger.debug(
            f"cover geometry: pool={len(pool)} target={len(target)} depth={depth} "
            f"nodes={pool_table.shape.node_count} mode={self.mode.value}"
        )

    def _ball_sup(self, n: int, delta: float) -> np.ndarray:
        if self._dn_pool_pool is None:
            self._dn_pool_pool = dn_matrix(self._pool_table, self._pool_table)
        inside = self._dn_pool_pool[n] < delta
        return np.where(inside, self.birkhoff[n - 1][None, :], -np.inf).max(axis=1)

    def family(self, delta: float, n_min: int, n_max: int, ball_sup: bool = False) -> CandidateFamily:
        """Balls B_n(x, delta) for x in the pool and n_min <= n <= n_max."""
        if not 1 <= n_min <= n_max <= self.depth:
            raise ValueError(f"need 1 <= N={n_min} <= N_max={n_max} <= depth={self.depth}")
        centers, lengths, sums, rows = [], [], [], []
        best_row = {}
        for n in range(n_min, n_max + 1):
            members = self.dn_pool_target[n] < delta
            values = self._ball_sup(n, delta) if ball_sup else self.birkhoff[n - 1]
            for c in np.nonzero(members.any(axis=1))[0]:
                key = (n, np.packbits(members[c]).tobytes())
                if key in best_row:
                    slot = best_row[key]
                    if values[c] < sums[slot]:
                        centers[slot], sums[slot] = int(c), float(values[c])
                    continue
                best_row[key] = len(centers)
                centers.append(int(c))
                lengths.append(n)
                sums.append(float(values[c]))
                rows.append(members[c])
        members = np.vstack(rows) if rows else np.zeros((0, len(self.target)), dtype=bool)
        return CandidateFamily(
            centers=np.asarray(centers, dtype=np.int64),
            lengths=np.asarray(lengths, dtype=np.float64),
            birkhoff=np.asarray(sums, dtype=np.float64),
            members=members,
            radius=delta,
            mode=self.mode,
        )


# ============================================================================
# SOLVERS
# ============================================================================

def greedy_cover(family: CandidateFamily, alpha: float) -> Tuple[float, List[int]]:
    """
    Greedy weighted set cover: repeatedly take the ball with the smallest
    cost per newly covered sample point. Returns (log cost, chosen rows).
    """
    if family.z_count == 0:
        return -np.inf, []
    members = family.members
    if len(family) == 0 or not members.any(axis=0).all():
        missing = family.z_count if len(family) == 0 else int((~members.any(axis=0)).sum())
        raise NoCoverError(f"candidate balls leave {missing} target point(s) uncovered", uncovered=missing)
    log_weights = family.log_weights(alpha)
    gain = members.sum(axis=1).astype(np.float64)
    uncovered = np.ones(family.z_count, dtype=bool)
    chosen: List[int] = []
    while uncovered.any():
        with np.errstate(divide="ignore"):
            score = np.where(gain > 0, log_weights - np.log(gain), np.inf)
        best = int(np.argmin(score))
        chosen.append(best)
        newly = members[best] & uncovered
        uncovered &= ~members[best]
        gain -= members[:, newly].sum(axis=1)
    return float(logsumexp(log_weights[chosen])), chosen


def lp_cover(family: CandidateFamily, alpha: float, demand: Optional[np.ndarray] = None) -> Tuple[float, np.ndarray]:
    """
    Fractional covering program: minimize sum c_i w_i subject to
    sum_i c_i chi_{B_i}(z) >= h(z), c >= 0. Returns (log optimum, c).
    """
    demand = np.ones(family.z_count) if demand is None else np.asarray(demand, dtype=np.float64)
    active = demand > 0
    if family.z_count == 0 or not active.any():
        return -np.inf, np.zeros(len(family))
    if len(family) == 0 or not family.members[:, active].any(axis=0).all():
        raise NoCoverError("fractional covering program is infeasible: some target point lies in no candidate ball")
    log_weights = family.log_weights(alpha)
    shift = max(float(log_weights.max()), LP_SHIFT_FLOOR)
    weights = np.exp(log_weights - shift)
    constraints = csr_matrix(-family.members[:, active].T.astype(np.float64))
    result = linprog(weights, A_ub=constraints, b_ub=-demand[active], bounds=(0, None), method="highs")
    if result.status == 2:
        raise NoCoverError(f"fractional covering program is infeasible: {result.message}")
    if not result.success:
        raise NoCoverError(f"fractional covering program failed: {result.message}")
    with np.errstate(divide="ignore"):
        return float(np.log(result.fun) + shift), np.asarray(result.x)


# ============================================================================
# PUBLIC COSTS
# ============================================================================

def _geometry(system, Z, potential, pool, depth, budget) -> CoverGeometry:
    return CoverGeometry(system, Z, potential, pool if pool is not None else Z, depth, budget)


def cover_cost_M(
    system: NaifsSystem,
    Z: SampleSet,
    potential: Potential,
    alpha: float,
    delta: float,
    N: int,
    N_max: int,
    pool: Optional[SampleSet] = None,
    budget: TreeBudget = DEFAULT_BUDGET,
) -> float:
    """Greedy variable-length cover cost; an upper bound on M at sample resolution."""
    if not Z.points:
        return 0.0
    family = _geometry(system, Z, potential, pool, N_max, budget).family(delta, N, N_max)
    return float(np.exp(greedy_cover(family, alpha)[0]))


def cover_cost_R(
    system: NaifsSystem,
    Z: SampleSet,
    potential: Potential,
    alpha: float,
    delta: float,
    N: int,
    pool: Optional[SampleSet] = None,
    budget: TreeBudget = DEFAULT_BUDGET,
) -> float:
    """Greedy cover cost with every ball of length exactly N."""
    if not Z.points:
        return 0.0
    family = _geometry(system, Z, potential, pool, N, budget).family(delta, N, N)
    return float(np.exp(greedy_cover(family, alpha)[0]))


def weighted_cover_cost_W(
    system: NaifsSystem,
    Z: SampleSet,
    potential: Potential,
    alpha: float,
    delta: float,
    N: int,
    N_max: int,
    pool: Optional[SampleSet] = None,
    demand: Optional[Sequence[float]] = None,
    budget: TreeBudget = DEFAULT_BUDGET,
) -> float:
    """Optimal fractional covering cost; never above cover_cost_M on the same family."""
    if not Z.points:
        return 0.0
    family = _geometry(system, Z, potential, pool, N_max, budget).family(delta, N, N_max)
    demand_arr = None if demand is None else np.asarray(demand, dtype=np.float64)
    return float(np.exp(lp_cover(family, alpha, demand_arr)[0]))
