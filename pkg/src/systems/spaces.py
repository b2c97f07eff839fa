# ============================================================================
# STATE SPACES
# File: src/systems/spaces.py
# Purpose: Compact metric spaces, point encodings and vectorized base metrics
# ============================================================================

from dataclasses import dataclass
from enum import Enum
from typing import Any, List, Sequence, Union

import numpy as np

from src.errors import SystemDefinitionError

Point = Union[float, tuple, str]

# Absolute tolerance for point equality on [0,1]
POINT_TOL = 1e-12

# int64 codes are exact through float64 bit-length extraction below this width
_NARROW_CODE_BITS = 52

_bit_length = np.frompyfunc(int.bit_length, 1, 1)


class SpaceKind(str, Enum):
    CIRCLE = "circle"
    INTERVAL = "interval"
    TORUS = "torus"
    SYMBOLIC = "symbolic"


@dataclass(frozen=True)
class StateSpace:
    """
    One of the four supported compact metric spaces.

    Symbolic points are digit strings of a fixed length ``length`` over the
    alphabet ``0..alphabet-1``. Internally they are packed into integer codes,
    ``bits`` bits per symbol with the first symbol in the most significant
    field, so that the first differing index comes from the highest set bit
    of an XOR.
    """

    kind: SpaceKind
    dimension: int = 1
    alphabet: int = 2
    length: int = 16
    fill: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", SpaceKind(self.kind))
        if self.kind == SpaceKind.TORUS and self.dimension < 1:
            raise SystemDefinitionError(f"torus dimension must be >= 1, got {self.dimension}")
        if self.kind == SpaceKind.SYMBOLIC:
            if not 2 <= self.alphabet <= 10:
                raise SystemDefinitionError(f"alphabet size must be in [2, 10], got {self.alphabet}")
            if self.length < 1:
                raise SystemDefinitionError(f"symbolic length must be >= 1, got {self.length}")
            if not 0 <= self.fill < self.alphabet:
                raise SystemDefinitionError(f"fill symbol {self.fill} outside alphabet")

    # ===== GEOMETRY =====

    @property
    def diameter(self) -> float:
        return 0.5 if self.kind == SpaceKind.CIRCLE else 1.0

    @property
    def is_symbolic(self) -> bool:
        return self.kind == SpaceKind.SYMBOLIC

    @property
    def bits(self) -> int:
        return max(1, int(self.alphabet - 1).bit_length())

    @property
    def wide_codes(self) -> bool:
        return self.length * self.bits > _NARROW_CODE_BITS

    @property
    def code_mask(self) -> int:
        return (1 << (self.length * self.bits)) - 1

    def contains(self, x: Point) -> bool:
        if self.kind == SpaceKind.CIRCLE:
            return isinstance(x, (int, float)) and 0.0 <= x < 1.0
        if self.kind == SpaceKind.INTERVAL:
            return isinstance(x, (int, float)) and 0.0 <= x <= 1.0
        if self.kind == SpaceKind.TORUS:
            return len(x) == self.dimension and all(0.0 <= c <= 1.0 for c in x)
        return (
            isinstance(x, str)
            and len(x) == self.length
            and all(ch.isdigit() and int(ch) < self.alphabet for ch in x)
        )

    # ===== ENCODING =====

    def encode(self, word: str) -> int:
        if len(word) != self.length:
            raise SystemDefinitionError(
                f"symbolic point '{word}' has length {len(word)}, expected {self.length}"
            )
        code = 0
        for ch in word:
            symbol = int(ch)
            if symbol >= self.alphabet:
                raise SystemDefinitionError(f"symbol {symbol} outside alphabet of size {self.alphabet}")
            code = (code << self.bits) | symbol
        return code

    def decode(self, code: int) -> str:
        symbol_mask = (1 << self.bits) - 1
        top = self.bits * (self.length - 1)
        return "".join(
            str((int(code) >> (top - self.bits * j)) & symbol_mask) for j in range(self.length)
        )

    def pad(self, prefix: str) -> str:
        """Extend a cylinder word to a full-length point with the fill symbol."""
        if len(prefix) > self.length:
            raise SystemDefinitionError(f"cylinder '{prefix}' longer than L={self.length}")
        return prefix + str(self.fill) * (self.length - len(prefix))

    def to_array(self, points: Sequence[Point]) -> np.ndarray:
        """Pack points into the array layout used by the word-tree engine."""
        if self.kind == SpaceKind.SYMBOLIC:
            codes = [self.encode(p) for p in points]
            if self.wide_codes:
                arr = np.empty(len(codes), dtype=object)
                arr[:] = codes
                return arr
            return np.asarray(codes, dtype=np.int64).reshape(len(codes))
        if self.kind == SpaceKind.TORUS:
            return np.asarray(points, dtype=np.float64).reshape(len(points), self.dimension)
        return np.asarray(points, dtype=np.float64).reshape(len(points))

    def from_array(self, arr: np.ndarray) -> List[Point]:
        if self.kind == SpaceKind.SYMBOLIC:
            return [self.decode(c) for c in arr]
        if self.kind == SpaceKind.TORUS:
            return [tuple(float(c) for c in row) for row in arr]
        return [float(v) for v in arr]

    def first_symbols(self, codes: np.ndarray) -> np.ndarray:
        shifted = np.right_shift(codes, self.bits * (self.length - 1))
        return np.bitwise_and(shifted, (1 << self.bits) - 1).astype(np.int64)

    # ===== METRIC =====

    def distance_array(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Broadcasting base metric on packed arrays."""
        if self.kind == SpaceKind.CIRCLE:
            gap = np.mod(np.abs(a - b), 1.0)
            return np.minimum(gap, 1.0 - gap)
        if self.kind == SpaceKind.INTERVAL:
            return np.abs(a - b)
        if self.kind == SpaceKind.TORUS:
            return np.max(np.abs(a - b), axis=-1)
        return self._symbolic_distance(a, b)

    def _symbolic_distance(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        diff = np.bitwise_xor(a, b)
        if self.wide_codes:
            nbits = _bit_length(diff).astype(np.int64)
        else:
            nbits = np.frexp(np.asarray(diff, dtype=np.float64))[1].astype(np.int64)
        first_diff = self.length - 1 - (nbits - 1) // self.bits
        same = np.asarray(nbits == 0)
        return np.where(same, 0.0, np.ldexp(1.0, -np.where(same, 0, first_diff)))


def base_distance(space: StateSpace, x: Point, y: Point) -> float:
    """The metric d of the state space between two points."""
    a = space.to_array([x])
    b = space.to_array([y])
    return float(space.distance_array(a, b)[0])


def dyadic_exponent(radius: float) -> int:
    """Return m with radius == 2**-m, or -1 when radius is not a power of 1/2."""
    mantissa, exponent = np.frexp(radius)
    if radius <= 0 or mantissa != 0.5:
        return -1
    return int(1 - exponent)


def describe(space: StateSpace) -> Any:
    if space.kind == SpaceKind.SYMBOLIC:
        return f"symbolic(k={space.alphabet}, L={space.length})"
    if space.kind == SpaceKind.TORUS:
        return f"torus(D={space.dimension})"
    return space.kind.value
