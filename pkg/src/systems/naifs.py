# ============================================================================
# NON-AUTONOMOUS ITERATED FUNCTION SYSTEMS
# File: src/systems/naifs.py
# Purpose: Eventually periodic schedules of generator families, words, orbits
# ============================================================================

import itertools
import logging
from dataclasses import dataclass
from typing import Iterator, List, Sequence, Tuple

from src.errors import MalformedWordError, SystemDefinitionError
from src.systems.maps import MapSpec
from src.systems.spaces import Point, StateSpace, base_distance

logger = logging.getLogger(__name__)

GeneratorFamily = Tuple[MapSpec, ...]


@dataclass(frozen=True)
class NaifsSystem:
    """
    A state space plus the schedule preamble + period^infinity.

    Immutable and hashable, so word-tree shapes can be cached per system.
    """

    space: StateSpace
    preamble: Tuple[GeneratorFamily, ...]
    period: Tuple[GeneratorFamily, ...]

    def __post_init__(self):
        object.__setattr__(self, "preamble", tuple(tuple(f) for f in self.preamble))
        object.__setattr__(self, "period", tuple(tuple(f) for f in self.period))
        if not self.period:
            raise SystemDefinitionError("schedule period must contain at least one family")
        for position, family in enumerate(self.preamble + self.period, start=1):
            if not family:
                raise SystemDefinitionError(f"generator family at schedule position {position} is empty")
            for generator in family:
                generator.check_space(self.space)
                observed = generator.sample_lipschitz(self.space)
                if observed > generator.lipschitz * (1 + 1e-9) + 1e-12:
                    raise SystemDefinitionError(
                        f"{generator.kind.value} at position {position}: sampled Lipschitz ratio "
                        f"{observed:.6g} exceeds declared {generator.lipschitz:.6g}"
                    )

    @property
    def start_classes(self) -> int:
        """Number of distinct start times i needed for the sup in d_n*."""
        return len(self.preamble) + len(self.period)

    @property
    def is_constant(self) -> bool:
        return not self.preamble and len(self.period) == 1

    def family_at(self, j: int) -> GeneratorFamily:
        if j < 1:
            raise ValueError(f"schedule time must be >= 1, got {j}")
        if j <= len(self.preamble):
            return self.preamble[j - 1]
        return self.period[(j - 1 - len(self.preamble)) % len(self.period)]


@dataclass(frozen=True)
class Word:
    """Generator indices chosen at times start, start+1, ..."""

    indices: Tuple[int, ...] = ()
    start: int = 1

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))
        if self.start < 1:
            raise MalformedWordError(f"word start time must be >= 1, got {self.start}")

    def __len__(self) -> int:
        return len(self.indices)

    def validate(self, system: NaifsSystem):
        for t, index in enumerate(self.indices):
            size = len(system.family_at(self.start + t))
            if not 0 <= index < size:
                raise MalformedWordError(
                    f"index {index} at step {t} invalid for family of size {size} at time {self.start + t}"
                )


# ===== OPERATIONS =====

def family_at(system: NaifsSystem, j: int) -> GeneratorFamily:
    return system.family_at(j)


def apply_map(system: NaifsSystem, j: int, i: int, x: Point) -> Point:
    """Apply generator i of the family scheduled at time j to a single point."""
    family = system.family_at(j)
    if not 0 <= i < len(family):
        raise MalformedWordError(f"index {i} invalid for family of size {len(family)} at time {j}")
    space = system.space
    image = family[i].apply_array(space, space.to_array([x]))
    return space.from_array(image)[0]


def orbit(system: NaifsSystem, x: Point, word: Word) -> List[Point]:
    word.validate(system)
    points = [x]
    for t, index in enumerate(word.indices):
        points.append(apply_map(system, word.start + t, index, points[-1]))
    return points


def iter_words(system: NaifsSystem, start: int, n: int) -> Iterator[Word]:
    """Every word of length n from the given start time, in lexicographic order."""
    sizes = [range(len(system.family_at(start + t))) for t in range(n)]
    for indices in itertools.product(*sizes):
        yield Word(indices=indices, start=start)


def orbit_distances(system: NaifsSystem, x: Point, y: Point, word: Word) -> List[float]:
    return [base_distance(system.space, a, b) for a, b in zip(orbit(system, x, word), orbit(system, y, word))]


def constant_system(space: StateSpace, family: Sequence[MapSpec]) -> NaifsSystem:
    """Free-semigroup case: one family at every time."""
    return NaifsSystem(space=space, preamble=(), period=(tuple(family),))
