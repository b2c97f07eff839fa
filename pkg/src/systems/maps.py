# ============================================================================
# GENERATOR MAPS
# File: src/systems/maps.py
# Purpose: The four generator kinds and their vectorized evaluation
# ============================================================================

import itertools
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Hashable, Optional, Tuple

import numpy as np

from src.errors import SystemDefinitionError
from src.systems.spaces import POINT_TOL, SpaceKind, StateSpace

logger = logging.getLogger(__name__)

LIPSCHITZ_SAMPLE_PAIRS = 256


class MapKind(str, Enum):
    AFFINE_MOD_1 = "affine-mod-1"
    PIECEWISE_LINEAR = "piecewise-linear"
    AFFINE_CONTRACTION = "affine-contraction"
    SHIFT = "shift"


_COMPATIBLE = {
    MapKind.AFFINE_MOD_1: {SpaceKind.CIRCLE},
    MapKind.PIECEWISE_LINEAR: {SpaceKind.INTERVAL},
    MapKind.AFFINE_CONTRACTION: {SpaceKind.TORUS},
    MapKind.SHIFT: {SpaceKind.SYMBOLIC},
}


@dataclass(frozen=True)
class MapSpec:
    """
    A single generator f_i^(j).

    Fields not used by a kind keep their defaults. Piecewise-linear maps are
    continuous: ``breakpoints`` run from 0 to 1, ``slopes`` has one entry per
    piece and ``start`` is f(0).
    """

    kind: MapKind
    slope: int = 1
    offset: float = 0.0
    breakpoints: Tuple[float, ...] = ()
    slopes: Tuple[float, ...] = ()
    start: float = 0.0
    matrix: Tuple[Tuple[float, ...], ...] = ()
    translation: Tuple[float, ...] = ()
    lipschitz: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", MapKind(self.kind))
        object.__setattr__(self, "breakpoints", tuple(float(b) for b in self.breakpoints))
        object.__setattr__(self, "slopes", tuple(float(s) for s in self.slopes))
        object.__setattr__(self, "matrix", tuple(tuple(float(v) for v in row) for row in self.matrix))
        object.__setattr__(self, "translation", tuple(float(v) for v in self.translation))
        if self.kind == MapKind.AFFINE_MOD_1:
            if int(self.slope) != self.slope or abs(self.slope) < 1:
                raise SystemDefinitionError(f"affine-mod-1 slope must be an integer with |a| >= 1, got {self.slope}")
            object.__setattr__(self, "slope", int(self.slope))
        elif self.kind == MapKind.PIECEWISE_LINEAR:
            self._check_piecewise()
        elif self.kind == MapKind.AFFINE_CONTRACTION:
            self._check_contraction()
        if self.lipschitz is None:
            object.__setattr__(self, "lipschitz", self.true_lipschitz)
        elif self.lipschitz < self.true_lipschitz - 1e-12:
            raise SystemDefinitionError(
                f"declared lipschitz {self.lipschitz} below true constant {self.true_lipschitz} for {self.kind.value}"
            )

    def _check_piecewise(self):
        bps, slopes = self.breakpoints, self.slopes
        if len(bps) < 2 or bps[0] != 0.0 or bps[-1] != 1.0:
            raise SystemDefinitionError("piecewise-linear breakpoints must start at 0 and end at 1")
        if any(b >= c for b, c in zip(bps, bps[1:])):
            raise SystemDefinitionError("piecewise-linear breakpoints must be strictly increasing")
        if len(slopes) != len(bps) - 1:
            raise SystemDefinitionError(
                f"piecewise-linear map needs {len(bps) - 1} slopes, got {len(slopes)}"
            )
        values = self.knot_values
        if min(values) < -POINT_TOL or max(values) > 1.0 + POINT_TOL:
            raise SystemDefinitionError(f"piecewise-linear range {min(values):.4g}..{max(values):.4g} leaves [0,1]")

    def _check_contraction(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or len(self.translation) != m.shape[0]:
            raise SystemDefinitionError("affine-contraction needs a square matrix and a matching translation")
        if self.true_lipschitz >= 1.0:
            raise SystemDefinitionError(f"affine-contraction operator norm {self.true_lipschitz:.4g} is not < 1")
        c = np.asarray(self.translation, dtype=np.float64)
        corners = np.array(list(itertools.product((0.0, 1.0), repeat=m.shape[0])))
        images = corners @ m.T + c
        if images.min() < -POINT_TOL or images.max() > 1.0 + POINT_TOL:
            raise SystemDefinitionError("affine-contraction does not map the unit cube into itself")

    # ===== DERIVED QUANTITIES =====

    @property
    def knot_values(self) -> Tuple[float, ...]:
        values = [self.start]
        for (left, right), s in zip(zip(self.breakpoints, self.breakpoints[1:]), self.slopes):
            values.append(values[-1] + s * (right - left))
        return tuple(values)

    @property
    def true_lipschitz(self) -> float:
        if self.kind == MapKind.AFFINE_MOD_1:
            return float(abs(self.slope))
        if self.kind == MapKind.PIECEWISE_LINEAR:
            return float(max(abs(s) for s in self.slopes))
        if self.kind == MapKind.AFFINE_CONTRACTION:
            return float(np.abs(np.asarray(self.matrix, dtype=np.float64)).sum(axis=1).max())
        return 2.0

    def check_space(self, space: StateSpace):
        if space.kind not in _COMPATIBLE[self.kind]:
            raise SystemDefinitionError(f"{self.kind.value} maps cannot act on a {space.kind.value} space")
        if self.kind == MapKind.AFFINE_CONTRACTION and len(self.translation) != space.dimension:
            raise SystemDefinitionError(
                f"affine-contraction of dimension {len(self.translation)} on torus of dimension {space.dimension}"
            )

    # ===== EVALUATION =====

    def apply_array(self, space: StateSpace, arr: np.ndarray) -> np.ndarray:
        """Apply the map elementwise to packed points of any leading shape."""
        if self.kind == MapKind.AFFINE_MOD_1:
            out = np.mod(self.slope * arr + self.offset, 1.0)
            return np.where(out >= 1.0, 0.0, out)
        if self.kind == MapKind.PIECEWISE_LINEAR:
            bps = np.asarray(self.breakpoints)
            piece = np.clip(np.searchsorted(bps, arr, side="right") - 1, 0, len(self.slopes) - 1)
            knots = np.asarray(self.knot_values)
            out = knots[piece] + np.asarray(self.slopes)[piece] * (arr - bps[piece])
            return np.clip(out, 0.0, 1.0)
        if self.kind == MapKind.AFFINE_CONTRACTION:
            m = np.asarray(self.matrix, dtype=np.float64)
            out = arr @ m.T + np.asarray(self.translation, dtype=np.float64)
            return np.clip(out, 0.0, 1.0)
        shifted = np.bitwise_and(np.left_shift(arr, space.bits), space.code_mask)
        return np.bitwise_or(shifted, space.fill)

    def compose_key(self, previous: Optional[Hashable]) -> Optional[Hashable]:
        """
        Key of (self after previous) when the composition has a closed form.

        Word-tree nodes with equal keys carry identical images for every point
        and are merged. None means no closed form is known.
        """
        if previous is None:
            return None
        if self.kind == MapKind.SHIFT and previous[0] == "shift":
            return ("shift", previous[1] + 1)
        if self.kind == MapKind.AFFINE_MOD_1 and previous[0] == "affine":
            _, slope, offset = previous
            return ("affine", self.slope * slope, round((self.slope * offset + self.offset) % 1.0, 12))
        return None

    def sample_lipschitz(self, space: StateSpace, seed: int = 0) -> float:
        """Largest observed distance ratio over random pairs."""
        rng = np.random.default_rng(seed)
        if space.kind == SpaceKind.SYMBOLIC:
            symbols = rng.integers(0, space.alphabet, size=(2, LIPSCHITZ_SAMPLE_PAIRS, space.length))
            xs = ["".join(str(s) for s in row) for row in symbols[0]]
            ys = ["".join(str(s) for s in row) for row in symbols[1]]
            a, b = space.to_array(xs), space.to_array(ys)
        else:
            shape = (LIPSCHITZ_SAMPLE_PAIRS, space.dimension) if space.kind == SpaceKind.TORUS else (LIPSCHITZ_SAMPLE_PAIRS,)
            a = rng.random(shape)
            b = np.clip(a + rng.normal(scale=1e-3, size=shape), 0.0, 1.0 - 1e-15)
        before = space.distance_array(a, b)
        after = space.distance_array(self.apply_array(space, a), self.apply_array(space, b))
        keep = before > POINT_TOL
        return float(np.max(after[keep] / before[keep])) if keep.any() else 0.0


def identity_key(space: StateSpace) -> Hashable:
    """Compose-key of the empty word."""
    if space.kind == SpaceKind.SYMBOLIC:
        return ("shift", 0)
    if space.kind == SpaceKind.CIRCLE:
        return ("affine", 1, 0.0)
    return ("identity",)
