# ============================================================================
# TARGET SETS
# File: src/measures/targets.py
# Purpose: Finite descriptions of Z (whole space, cylinders, points, boxes)
# ============================================================================

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.dynamics.counting import SampleSet, cylinder_sample, grid_sample
from src.measures.measures import BorelMeasure, MeasureKind
from src.systems.spaces import POINT_TOL, Point, SpaceKind, StateSpace

logger = logging.getLogger(__name__)


class TargetKind(str, Enum):
    WHOLE = "whole"
    CYLINDERS = "cylinders"
    POINTS = "points"
    GRID = "grid"


@dataclass(frozen=True)
class TargetSet:
    """
    Z given as the whole space, a union of cylinders, a finite point list, or
    a box [lo, hi] per axis; ``resolution`` sets the sample density.
    """

    kind: TargetKind
    resolution: int = 8
    cylinders: Tuple[str, ...] = ()
    points: Tuple[Point, ...] = ()
    box: Tuple[Tuple[float, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", TargetKind(self.kind))
        object.__setattr__(self, "cylinders", tuple(self.cylinders))
        object.__setattr__(self, "points", tuple(tuple(p) if isinstance(p, list) else p for p in self.points))
        object.__setattr__(self, "box", tuple(tuple(float(v) for v in b) for b in self.box))
        if self.resolution < 1:
            raise ValueError(f"target resolution must be >= 1, got {self.resolution}")
        if self.kind == TargetKind.CYLINDERS:
            # a cylinder extending another is already inside it
            kept = [c for c in self.cylinders if not any(c != o and c.startswith(o) for o in self.cylinders)]
            object.__setattr__(self, "cylinders", tuple(dict.fromkeys(kept)))

    def sample(self, space: StateSpace) -> SampleSet:
        if self.kind == TargetKind.POINTS:
            return SampleSet(space, list(self.points), 0.0)
        if self.kind == TargetKind.CYLINDERS:
            if space.kind != SpaceKind.SYMBOLIC:
                raise ValueError("cylinder targets need a symbolic space")
            length = max(self.resolution, max((len(c) for c in self.cylinders), default=0))
            return cylinder_sample(space, length, self.cylinders) if self.cylinders else SampleSet(space, [], 0.0)
        if space.kind == SpaceKind.SYMBOLIC:
            return cylinder_sample(space, self.resolution)
        full = grid_sample(space, self.resolution)
        if self.kind == TargetKind.WHOLE:
            return full
        return SampleSet(space, [p for p in full.points if self.contains(space, p)], full.density)

    def contains(self, space: StateSpace, x: Point) -> bool:
        if self.kind == TargetKind.WHOLE:
            return True
        if self.kind == TargetKind.CYLINDERS:
            return any(x.startswith(c) for c in self.cylinders)
        if self.kind == TargetKind.POINTS:
            return any(_same_point(space, x, p) for p in self.points)
        coords = x if isinstance(x, tuple) else (x,)
        return all(lo - POINT_TOL <= c <= hi + POINT_TOL for c, (lo, hi) in zip(coords, self.box))

    def measure_of(self, space: StateSpace, measure: BorelMeasure) -> float:
        """mu(Z)."""
        if self.kind == TargetKind.WHOLE:
            return 1.0
        if measure.kind == MeasureKind.ATOMIC:
            return math.fsum(w for p, w in zip(measure.points, measure.weights) if self.contains(space, p))
        if measure.kind == MeasureKind.BERNOULLI:
            if self.kind == TargetKind.CYLINDERS:
                probs = measure.probabilities
                return math.fsum(math.prod(probs[int(ch)] for ch in c) for c in self.cylinders)
            if self.kind == TargetKind.POINTS:
                return 0.0
            raise ValueError("box targets have no Bernoulli mass")
        support = measure.support_sample(space)
        return sum(self.contains(space, p) for p in support) / len(support)

    def describe(self) -> str:
        if self.kind == TargetKind.CYLINDERS:
            return f"cylinders({','.join(self.cylinders)})"
        if self.kind == TargetKind.POINTS:
            return f"points({len(self.points)})"
        if self.kind == TargetKind.GRID:
            return f"grid(box={list(self.box)}, resolution={self.resolution})"
        return f"whole(resolution={self.resolution})"


def _same_point(space: StateSpace, x: Point, y: Point) -> bool:
    if space.kind == SpaceKind.SYMBOLIC:
        return x == y
    return bool(np.all(np.abs(np.asarray(x, dtype=np.float64) - np.asarray(y, dtype=np.float64)) <= POINT_TOL))


def swap_symbols(points: Sequence[str], mapping: Optional[Sequence[int]] = None) -> List[str]:
    """Apply a symbol permutation (default: swap 0 and 1) to every point."""
    mapping = list(mapping) if mapping is not None else [1, 0]
    return ["".join(str(mapping[int(ch)]) for ch in p) for p in points]
