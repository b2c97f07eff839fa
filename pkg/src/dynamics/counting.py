# ============================================================================
# COUNTING
# File: src/dynamics/counting.py
# Purpose: Samples, separated/spanning sets, Vitali selection, sup-entropy
# ============================================================================

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.dynamics.balls import CoverFamily
from src.dynamics.word_tree import (
    DEFAULT_BUDGET,
    BoundMode,
    OrbitTable,
    TreeBudget,
    dn_matrix,
    flat_images,
    orbit_table,
)
from src.errors import DegenerateFitError
from src.systems.naifs import NaifsSystem
from src.systems.spaces import POINT_TOL, Point, SpaceKind, StateSpace

logger = logging.getLogger(__name__)

METRICS = ("d_n", "d_n_star")


# ============================================================================
# SAMPLES
# ============================================================================

@dataclass
class SampleSet:
    """Finite gamma-dense stand-in for a target set."""

    space: StateSpace
    points: List[Point]
    density: float

    def __post_init__(self):
        if self.points:
            arr = self.space.to_array(self.points)
            if self.space.kind == SpaceKind.SYMBOLIC:
                duplicates = len(set(self.points)) != len(self.points)
            else:
                flat = arr.reshape(len(self.points), -1)
                order = np.lexsort(flat.T[::-1])
                gaps = np.abs(np.diff(flat[order], axis=0)).max(axis=1) if len(flat) > 1 else np.array([1.0])
                duplicates = bool((gaps <= POINT_TOL).any())
            if duplicates:
                raise ValueError("sample points must be pairwise distinct")

    def __len__(self) -> int:
        return len(self.points)

    def array(self) -> np.ndarray:
        return self.space.to_array(self.points)

    def union(self, other: "SampleSet") -> "SampleSet":
        seen = set(map(_point_key, self.points))
        extra = [p for p in other.points if _point_key(p) not in seen]
        return SampleSet(self.space, list(self.points) + extra, max(self.density, other.density))

    def contains_all(self, other: "SampleSet") -> bool:
        keys = set(map(_point_key, self.points))
        return all(_point_key(p) in keys for p in other.points)


def _point_key(p: Point):
    if isinstance(p, str):
        return p
    if isinstance(p, tuple):
        return tuple(round(c, 12) for c in p)
    return round(float(p), 12)


def grid_sample(space: StateSpace, count: int) -> SampleSet:
    """Uniform grid with ``count`` points per axis."""
    if space.kind == SpaceKind.SYMBOLIC:
        raise ValueError("use cylinder_sample for symbolic spaces")
    if space.kind == SpaceKind.CIRCLE:
        axis = np.arange(count) / count
        gamma = 0.5 / count
    else:
        axis = np.linspace(0.0, 1.0, count)
        gamma = 0.5 / max(count - 1, 1)
    if space.kind == SpaceKind.TORUS:
        points = [tuple(float(c) for c in combo) for combo in itertools.product(axis, repeat=space.dimension)]
    else:
        points = [float(v) for v in axis]
    return SampleSet(space, points, gamma)


def cylinder_sample(space: StateSpace, length: int, prefixes: Optional[Sequence[str]] = None) -> SampleSet:
    """One padded representative per cylinder of ``length`` extending each prefix."""
    if length > space.length:
        raise ValueError(f"cylinder length {length} exceeds symbolic length {space.length}")
    prefixes = list(prefixes) if prefixes else [""]
    symbols = [str(s) for s in range(space.alphabet)]
    words = []
    for prefix in prefixes:
        if len(prefix) > length:
            words.append(prefix[:length])
            continue
        for tail in itertools.product(symbols, repeat=length - len(prefix)):
            words.append(prefix + "".join(tail))
    unique = list(dict.fromkeys(words))
    return SampleSet(space, [space.pad(w) for w in unique], 2.0 ** -length)


# ============================================================================
# SEPARATED AND SPANNING SETS
# ============================================================================

def _tables(system: NaifsSystem, sample: SampleSet, depth: int, metric: str, budget: TreeBudget) -> List[OrbitTable]:
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}, got {metric!r}")
    starts = range(1, system.start_classes + 1) if metric == "d_n_star" else [1]
    arr = sample.array()
    return [orbit_table(system, arr, depth, start, budget) for start in starts]


def separated_indices(space: StateSpace, images: np.ndarray, eps: float) -> List[int]:
    """Greedy pass in sample order: keep i iff its distance to every kept point exceeds eps."""
    kept: List[int] = []
    kept_images = np.empty_like(images)
    for i in range(images.shape[0]):
        if kept:
            dist = space.distance_array(kept_images[: len(kept)], images[i][None]).max(axis=1)
            if (dist <= eps).any():
                continue
        kept_images[len(kept)] = images[i]
        kept.append(i)
    return kept


def spanning_indices(space: StateSpace, images: np.ndarray, eps: float) -> List[int]:
    """Greedy set cover by closed eps-balls centered at sample points."""
    count = images.shape[0]
    within = np.zeros((count, count), dtype=bool)
    for i in range(count):
        within[i] = space.distance_array(images, images[i][None]).max(axis=1) <= eps
    gain = within.sum(axis=1)
    uncovered = np.ones(count, dtype=bool)
    chosen: List[int] = []
    while uncovered.any():
        best = int(np.argmax(gain))
        chosen.append(best)
        newly = within[best] & uncovered
        uncovered &= ~within[best]
        gain -= within[:, newly].sum(axis=1)
    return chosen


def greedy_separated(
    system: NaifsSystem,
    sample: SampleSet,
    n: int,
    eps: float,
    metric: str = "d_n_star",
    budget: TreeBudget = DEFAULT_BUDGET,
) -> List[Point]:
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if not sample.points:
        return []
    images = flat_images(_tables(system, sample, n, metric, budget), n)
    return [sample.points[i] for i in separated_indices(system.space, images, eps)]


def greedy_spanning(
    system: NaifsSystem,
    sample: SampleSet,
    n: int,
    eps: float,
    metric: str = "d_n_star",
    budget: TreeBudget = DEFAULT_BUDGET,
) -> List[Point]:
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if not sample.points:
        return []
    images = flat_images(_tables(system, sample, n, metric, budget), n)
    return [sample.points[i] for i in spanning_indices(system.space, images, eps)]


# ============================================================================
# VITALI SELECTION
# ============================================================================

def vitali_subfamily(
    system: NaifsSystem,
    balls: CoverFamily,
    enlargement: int = 3,
    budget: TreeBudget = DEFAULT_BUDGET,
) -> CoverFamily:
    """
    Pairwise disjoint subfamily whose enlargements cover every input ball.

    Balls are scanned in input order; a ball is kept when its center is more
    than 2r from every kept center in d_n.
    """
    if enlargement not in (3, 5):
        raise ValueError(f"enlargement must be 3 or 5, got {enlargement}")
    if not balls.items:
        return CoverFamily(mode=balls.mode)
    radii = {item.radius for item in balls.items}
    lengths = {item.n for item in balls.items}
    if len(radii) != 1 or len(lengths) != 1:
        raise ValueError("Vitali selection needs balls of one radius and one length")
    r, n = radii.pop(), lengths.pop()
    space = system.space
    table = orbit_table(system, space.to_array([b.center for b in balls.items]), n, 1, budget)
    dist = dn_matrix(table, table)[n]
    kept: List[int] = []
    for i in range(len(balls.items)):
        if all(dist[i, j] > 2 * r for j in kept):
            kept.append(i)
    logger.debug(f"vitali: kept {len(kept)} of {len(balls.items)} balls (r={r}, n={n})")
    return CoverFamily(items=[balls.items[i] for i in kept], mode=BoundMode.combine(balls.mode, table.mode))


def vitali_containment_holds(
    system: NaifsSystem,
    balls: CoverFamily,
    selected: CoverFamily,
    enlargement: int,
    sample: SampleSet,
    budget: TreeBudget = DEFAULT_BUDGET,
) -> bool:
    """Every sample point inside an input ball lies in an enlarged selected ball."""
    if not balls.items or not sample.points:
        return True
    n, r = balls.items[0].n, balls.items[0].radius
    space = system.space
    pts = orbit_table(system, sample.array(), n, 1, budget)
    inputs = orbit_table(system, space.to_array([b.center for b in balls.items]), n, 1, budget)
    chosen = orbit_table(system, space.to_array([b.center for b in selected.items]), n, 1, budget)
    in_input = (dn_matrix(inputs, pts)[n] < r).any(axis=0)
    in_enlarged = (dn_matrix(chosen, pts)[n] < enlargement * r).any(axis=0)
    return bool(np.all(in_enlarged[in_input]))


# ============================================================================
# SUP-ENTROPY
# ============================================================================

@dataclass
class EntropyEstimate:
    log_counts: Dict[Tuple[int, float], float] = field(default_factory=dict)
    rates: Dict[Tuple[int, float], float] = field(default_factory=dict)
    slopes: Dict[float, float] = field(default_factory=dict)
    window: List[int] = field(default_factory=list)
    value: float = float("nan")
    mode: BoundMode = BoundMode.EXACT
    counter: str = "separated"

    def rows(self) -> List[Dict[str, object]]:
        return [
            {"n": n, "epsilon": eps, "log_count": lc, "rate": self.rates[(n, eps)]}
            for (n, eps), lc in sorted(self.log_counts.items(), key=lambda kv: (-kv[0][1], kv[0][0]))
        ]


def fit_window(n_range: Sequence[int]) -> List[int]:
    if len(n_range) < 4:
        raise DegenerateFitError(f"n_range needs at least 4 values, got {len(n_range)}")
    size = max(3, math.ceil(len(n_range) / 2))
    return list(n_range)[-size:]


def tail_slope(ns: Sequence[int], values: Sequence[float]) -> float:
    if len(ns) < 3:
        raise DegenerateFitError(f"slope fit needs at least 3 points, got {len(ns)}")
    slope, _ = np.polyfit(np.asarray(ns, dtype=np.float64), np.asarray(values, dtype=np.float64), 1)
    return float(slope)


def sup_entropy(
    system: NaifsSystem,
    sample: SampleSet,
    n_range: Sequence[int],
    eps_range: Sequence[float],
    metric: str = "d_n_star",
    counter: str = "separated",
    budget: TreeBudget = DEFAULT_BUDGET,
) -> EntropyEstimate:
    """Growth rate of separated (or spanning) counts along n, at the smallest eps."""
    n_range = sorted(n_range)
    window = fit_window(n_range)
    if any(a <= b for a, b in zip(eps_range, eps_range[1:])):
        raise ValueError("eps_range must be strictly decreasing")
    if counter not in ("separated", "spanning"):
        raise ValueError(f"counter must be 'separated' or 'spanning', got {counter!r}")
    if not sample.points:
        raise ValueError("sup-entropy needs a nonempty sample")

    pick = separated_indices if counter == "separated" else spanning_indices
    tables = _tables(system, sample, max(n_range), metric, budget)
    estimate = EntropyEstimate(window=window, counter=counter, mode=BoundMode.combine(*(t.mode for t in tables)))
    for n in n_range:
        images = flat_images(tables, n)
        for eps in eps_range:
            count = len(pick(system.space, images, eps))
            estimate.log_counts[(n, eps)] = math.log(count)
            estimate.rates[(n, eps)] = math.log(count) / n if n > 0 else float("nan")
        logger.debug(f"sup-entropy n={n}: " + ", ".join(
            f"eps={eps:g} count={round(math.exp(estimate.log_counts[(n, eps)]))}" for eps in eps_range
        ))
    for eps in eps_range:
        estimate.slopes[eps] = tail_slope(window, [estimate.log_counts[(n, eps)] for n in window])
    estimate.value = estimate.slopes[eps_range[-1]]
    logger.info(f"sup-entropy estimate {estimate.value:.6f} (eps={eps_range[-1]:g}, mode={estimate.mode.value})")
    return estimate
