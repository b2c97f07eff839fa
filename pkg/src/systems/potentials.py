# ============================================================================
# POTENTIALS
# File: src/systems/potentials.py
# Purpose: Continuous potentials with analytic sup/inf and moduli of continuity
# ============================================================================

import logging
from dataclasses import dataclass, replace
from enum import Enum
from functools import cached_property
from typing import Tuple

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from src.errors import SystemDefinitionError
from src.systems.spaces import Point, SpaceKind, StateSpace

logger = logging.getLogger(__name__)


class PotentialKind(str, Enum):
    CONSTANT = "constant"
    AFFINE = "affine"
    FIRST_SYMBOL = "first-symbol"
    GRID = "grid"


@dataclass(frozen=True)
class Potential:
    """
    A potential phi on a state space.

    - constant:      phi = constant
    - affine:        phi(x) = weights . x + offset (coordinates of circle,
                     interval or torus points; on the circle the jump at 0
                     enters the modulus)
    - first-symbol:  phi(x) = table[x_0] on symbolic spaces
    - grid:          multilinear interpolation of ``values`` given on a
                     regular grid of ``shape`` over [0,1]^D
    """

    kind: PotentialKind
    constant: float = 0.0
    weights: Tuple[float, ...] = ()
    offset: float = 0.0
    table: Tuple[float, ...] = ()
    values: Tuple[float, ...] = ()
    shape: Tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", PotentialKind(self.kind))
        for name in ("weights", "table", "values"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        object.__setattr__(self, "shape", tuple(int(v) for v in self.shape))
        if self.kind == PotentialKind.GRID:
            if not self.shape:
                object.__setattr__(self, "shape", (len(self.values),))
            if int(np.prod(self.shape)) != len(self.values) or min(self.shape) < 2:
                raise SystemDefinitionError(f"grid potential needs prod(shape)={self.shape} values, each axis >= 2")

    def validate_for(self, space: StateSpace):
        if self.kind == PotentialKind.FIRST_SYMBOL:
            if space.kind != SpaceKind.SYMBOLIC:
                raise SystemDefinitionError("first-symbol potentials need a symbolic space")
            if len(self.table) != space.alphabet:
                raise SystemDefinitionError(
                    f"first-symbol table has {len(self.table)} entries for alphabet size {space.alphabet}"
                )
        elif self.kind in (PotentialKind.AFFINE, PotentialKind.GRID):
            if space.kind == SpaceKind.SYMBOLIC:
                raise SystemDefinitionError(f"{self.kind.value} potentials need a coordinate space")
            dims = space.dimension if space.kind == SpaceKind.TORUS else 1
            size = len(self.weights) if self.kind == PotentialKind.AFFINE else len(self.shape)
            if size != dims:
                raise SystemDefinitionError(f"{self.kind.value} potential has {size} axes for a {dims}-dimensional space")
            if self.kind == PotentialKind.GRID and space.kind == SpaceKind.CIRCLE and self.values[0] != self.values[-1]:
                raise SystemDefinitionError("grid potential on the circle must have equal end values")

    # ===== EVALUATION =====

    @cached_property
    def _interpolator(self) -> RegularGridInterpolator:
        axes = [np.linspace(0.0, 1.0, size) for size in self.shape]
        grid = np.asarray(self.values, dtype=np.float64).reshape(self.shape)
        return RegularGridInterpolator(axes, grid, method="linear")

    def evaluate(self, space: StateSpace, arr: np.ndarray) -> np.ndarray:
        """phi on packed points; output has the point array's leading shape."""
        lead = arr.shape[:-1] if space.kind == SpaceKind.TORUS else arr.shape
        if self.kind == PotentialKind.CONSTANT:
            return np.full(lead, self.constant, dtype=np.float64)
        if self.kind == PotentialKind.FIRST_SYMBOL:
            return np.asarray(self.table, dtype=np.float64)[space.first_symbols(arr)]
        coords = np.asarray(arr, dtype=np.float64)
        if self.kind == PotentialKind.AFFINE:
            if space.kind == SpaceKind.TORUS:
                return coords @ np.asarray(self.weights) + self.offset
            return self.weights[0] * coords + self.offset
        flat = coords.reshape(-1, len(self.shape))
        return self._interpolator(flat).reshape(lead)

    def value(self, space: StateSpace, x: Point) -> float:
        return float(self.evaluate(space, space.to_array([x]))[0])

    # ===== BOUNDS =====

    def sup(self, space: StateSpace) -> float:
        if self.kind == PotentialKind.CONSTANT:
            return self.constant
        if self.kind == PotentialKind.AFFINE:
            return self.offset + sum(max(w, 0.0) for w in self.weights)
        if self.kind == PotentialKind.FIRST_SYMBOL:
            return max(self.table)
        return max(self.values)

    def inf(self, space: StateSpace) -> float:
        if self.kind == PotentialKind.CONSTANT:
            return self.constant
        if self.kind == PotentialKind.AFFINE:
            return self.offset + sum(min(w, 0.0) for w in self.weights)
        if self.kind == PotentialKind.FIRST_SYMBOL:
            return min(self.table)
        return min(self.values)

    def modulus(self, space: StateSpace, delta: float) -> float:
        """Upper bound for sup{|phi(x) - phi(y)| : d(x,y) < delta}."""
        if delta <= 0 or self.kind == PotentialKind.CONSTANT:
            return 0.0
        spread = self.sup(space) - self.inf(space)
        if self.kind == PotentialKind.FIRST_SYMBOL:
            # d(x,y) < 1 forces equal first symbols
            return 0.0 if delta <= 1.0 else spread
        if self.kind == PotentialKind.AFFINE:
            if space.kind == SpaceKind.CIRCLE:
                return abs(self.weights[0])
            return min(spread, sum(abs(w) for w in self.weights) * delta)
        grid = np.asarray(self.values, dtype=np.float64).reshape(self.shape)
        slope = 0.0
        for axis, size in enumerate(self.shape):
            steps = np.abs(np.diff(grid, axis=axis))
            slope += float(steps.max()) * (size - 1) if steps.size else 0.0
        return min(spread, slope * delta)

    def shifted(self, c: float) -> "Potential":
        """phi + c."""
        if self.kind == PotentialKind.CONSTANT:
            return replace(self, constant=self.constant + c)
        if self.kind == PotentialKind.AFFINE:
            return replace(self, offset=self.offset + c)
        if self.kind == PotentialKind.FIRST_SYMBOL:
            return replace(self, table=tuple(v + c for v in self.table))
        return replace(self, values=tuple(v + c for v in self.values))


def zero_potential() -> Potential:
    return Potential(kind=PotentialKind.CONSTANT, constant=0.0)
