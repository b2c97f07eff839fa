# ============================================================================
# WORD TREE ENGINE
# File: src/dynamics/word_tree.py
# Purpose: Level-by-level word-tree shapes and vectorized orbit tables
# ============================================================================

"""
The word tree of a schedule from start time m has one node per word in
I^{m,t} at depth t. The metrics and Birkhoff maxima only ever need, per node,
the image f_w^{m,t}(x) of every point, so a tree *shape* is built once per
(system, start, depth, budget) and then propagated over whole point arrays.

Nodes whose composed maps are provably equal (see ``MapSpec.compose_key``)
are merged into one node with several incoming edges. The maxima over words
are unchanged by merging; Birkhoff maxima run a max-plus recursion over the
incoming edges.

When the shape would exceed the node budget every remaining level keeps only
its first ``beam_width`` nodes and the shape is marked lower-bound.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from src.systems.maps import MapSpec, identity_key
from src.systems.naifs import NaifsSystem
from src.systems.potentials import Potential
from src.systems.spaces import SpaceKind, StateSpace

logger = logging.getLogger(__name__)

DEFAULT_NODE_BUDGET = 2 ** 22
DEFAULT_BEAM_WIDTH = 4096


class BoundMode(str, Enum):
    EXACT = "exact"
    LOWER_BOUND = "lower-bound"

    @classmethod
    def combine(cls, *modes: "BoundMode") -> "BoundMode":
        return cls.LOWER_BOUND if any(BoundMode(m) == cls.LOWER_BOUND for m in modes) else cls.EXACT


@dataclass(frozen=True)
class TreeBudget:
    node_budget: int = DEFAULT_NODE_BUDGET
    beam_width: int = DEFAULT_BEAM_WIDTH
    n_exact: Optional[int] = None


DEFAULT_BUDGET = TreeBudget()


@dataclass
class Transition:
    """Links level t to level t+1."""

    maps: Tuple[MapSpec, ...]          # distinct generators scheduled at this step
    parent: np.ndarray                 # representative parent of each child
    generator: np.ndarray              # index into ``maps`` of the representative edge
    edge_parent: np.ndarray            # all edges, sorted by child
    edge_child: np.ndarray
    edge_starts: np.ndarray            # first edge of each child in the sorted edge list

    @property
    def size(self) -> int:
        return len(self.parent)


@dataclass
class TreeShape:
    start: int
    depth: int
    transitions: List[Transition] = field(default_factory=list)
    mode: BoundMode = BoundMode.EXACT

    @property
    def level_sizes(self) -> List[int]:
        return [1] + [tr.size for tr in self.transitions]

    @property
    def node_count(self) -> int:
        return sum(self.level_sizes)


@lru_cache(maxsize=256)
def tree_shape(system: NaifsSystem, start: int, depth: int, budget: TreeBudget = DEFAULT_BUDGET) -> TreeShape:
    """Build (and cache) the merged word-tree shape down to ``depth``."""
    shape = TreeShape(start=start, depth=depth)
    keys = [identity_key(system.space)]
    total = 1
    truncated = False

    for t in range(depth):
        maps = tuple(dict.fromkeys(system.family_at(start + t)))
        if budget.n_exact is not None and t >= budget.n_exact:
            truncated = True
        cap = budget.beam_width if truncated else max(budget.node_budget - total, 0)

        index_of = {}
        new_keys, parents, generators = [], [], []
        edge_parent, edge_child = [], []
        overflow = False
        for p, key in enumerate(keys):
            for g, generator in enumerate(maps):
                child_key = generator.compose_key(key)
                if child_key is not None and child_key in index_of:
                    edge_parent.append(p)
                    edge_child.append(index_of[child_key])
                    continue
                if len(parents) >= cap:
                    overflow = True
                    continue
                child = len(parents)
                if child_key is None:
                    child_key = ("node", t + 1, child)
                index_of[child_key] = child
                new_keys.append(child_key)
                parents.append(p)
                generators.append(g)
                edge_parent.append(p)
                edge_child.append(child)

        if overflow and not truncated:
            truncated = True
            logger.warning(
                f"word tree from start {start} exceeds node budget {budget.node_budget} at depth {t + 1}; "
                f"beam width {budget.beam_width}, results are lower bounds"
            )
            keep = budget.beam_width
            new_keys, parents, generators = new_keys[:keep], parents[:keep], generators[:keep]
            pairs = [(p, c) for p, c in zip(edge_parent, edge_child) if c < keep]
            edge_parent = [p for p, _ in pairs]
            edge_child = [c for _, c in pairs]
        if truncated:
            shape.mode = BoundMode.LOWER_BOUND

        child_arr = np.asarray(edge_child, dtype=np.int64)
        order = np.argsort(child_arr, kind="stable")
        sorted_child = child_arr[order]
        shape.transitions.append(
            Transition(
                maps=maps,
                parent=np.asarray(parents, dtype=np.int64),
                generator=np.asarray(generators, dtype=np.int64),
                edge_parent=np.asarray(edge_parent, dtype=np.int64)[order],
                edge_child=sorted_child,
                edge_starts=np.searchsorted(sorted_child, np.arange(len(parents))),
            )
        )
        keys = new_keys
        total += len(parents)

    logger.debug(f"tree shape start={start} depth={depth}: {shape.node_count} nodes, mode={shape.mode.value}")
    return shape


# ===== ORBIT TABLES =====

def iter_levels(system: NaifsSystem, shape: TreeShape, arr: np.ndarray) -> Iterator[np.ndarray]:
    """
    Yield node images level by level.

    Level t has shape (P, K_t) for scalar spaces and symbolic codes, and
    (P, K_t, D) for the torus.
    """
    space = system.space
    current = arr[:, None, ...] if space.kind == SpaceKind.TORUS else arr[:, None]
    yield current
    for tr in shape.transitions:
        out = np.empty((current.shape[0], tr.size) + current.shape[2:], dtype=current.dtype)
        for g, generator in enumerate(tr.maps):
            chosen = np.nonzero(tr.generator == g)[0]
            if chosen.size:
                out[:, chosen] = generator.apply_array(space, current[:, tr.parent[chosen]])
        current = out
        yield current


@dataclass
class OrbitTable:
    """Node images of a point array for one start time, levels 0..depth."""

    space: StateSpace
    shape: TreeShape
    levels: List[np.ndarray]

    @property
    def mode(self) -> BoundMode:
        return self.shape.mode

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def flat(self, n: int) -> np.ndarray:
        """All node images at depths 0..n side by side on axis 1."""
        return np.concatenate(self.levels[: n + 1], axis=1)


def orbit_table(
    system: NaifsSystem,
    arr: np.ndarray,
    depth: int,
    start: int = 1,
    budget: TreeBudget = DEFAULT_BUDGET,
) -> OrbitTable:
    shape = tree_shape(system, start, depth, budget)
    return OrbitTable(space=system.space, shape=shape, levels=list(iter_levels(system, shape, arr)))


def flat_images(tables: Sequence[OrbitTable], n: int) -> np.ndarray:
    """Concatenate several start-time tables so that one max covers them all."""
    return np.concatenate([t.flat(n) for t in tables], axis=1)


def level_distance_maxima(ta: OrbitTable, tb: OrbitTable) -> np.ndarray:
    """
    Per-level maxima of node distances for every pair (a, b).

    Returns an array of shape (depth+1, A, B); a cumulative max over axis 0
    gives d_n for every n at once.
    """
    space = ta.space
    depth = min(ta.depth, tb.depth)
    count_a, count_b = ta.levels[0].shape[0], tb.levels[0].shape[0]
    out = np.zeros((depth + 1, count_a, count_b), dtype=np.float64)
    for t in range(depth + 1):
        la, lb = ta.levels[t], tb.levels[t]
        for k in range(la.shape[1]):
            np.maximum(out[t], space.distance_array(la[:, k][:, None, ...], lb[:, k][None, :, ...]), out=out[t])
    return out


def dn_matrix(ta: OrbitTable, tb: OrbitTable) -> np.ndarray:
    """d_n for every depth n and pair: shape (depth+1, A, B)."""
    return np.maximum.accumulate(level_distance_maxima(ta, tb), axis=0)


# ===== MAXIMAL BIRKHOFF SUMS =====

def birkhoff_levels(system: NaifsSystem, potential: Potential, table: OrbitTable, n: int) -> np.ndarray:
    """
    Max-plus recursion for S_n phi on every point of the table.

    Returns an array (n, P) whose row k is S_{k+1} phi. Branches whose partial
    sum plus (remaining steps) * sup phi falls below the best partial sum plus
    (remaining steps) * inf phi are dropped; the dropped branches can never
    win, so the result stays exact.
    """
    space = system.space
    hi = potential.sup(space)
    lo = potential.inf(space)
    best = potential.evaluate(space, table.levels[0])
    sums = [best.max(axis=1)]
    for t in range(1, n):
        remaining = n - 1 - (t - 1)
        incumbent = best.max(axis=1, keepdims=True) + remaining * lo
        best = np.where(best + remaining * hi < incumbent, -np.inf, best)
        tr = table.shape.transitions[t - 1]
        through_edges = best[:, tr.edge_parent]
        arriving = np.maximum.reduceat(through_edges, tr.edge_starts, axis=1)
        best = arriving + potential.evaluate(space, table.levels[t])
        sums.append(best.max(axis=1))
    return np.vstack(sums)
