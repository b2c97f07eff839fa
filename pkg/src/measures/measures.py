# ============================================================================
# BOREL MEASURES
# File: src/measures/measures.py
# Purpose: Atomic, Bernoulli and sampled probability measures + Bowen-ball masses
# ============================================================================

import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import norm

from src.dynamics.counting import SampleSet, greedy_separated
from src.dynamics.word_tree import DEFAULT_BUDGET, TreeBudget, dn_matrix, orbit_table
from src.errors import ExactnessError, SystemDefinitionError
from src.systems.naifs import NaifsSystem
from src.systems.spaces import Point, SpaceKind, StateSpace, dyadic_exponent

logger = logging.getLogger(__name__)

MASS_TOL = 1e-9
WILSON_LEVEL = 0.95
SAMPLERS = ("uniform",)


class MeasureKind(str, Enum):
    ATOMIC = "atomic"
    BERNOULLI = "bernoulli"
    SAMPLED = "sampled"


@dataclass(frozen=True)
class BorelMeasure:
    """
    A Borel probability measure the toolkit can evaluate on Bowen balls.

    - atomic:     ``points`` with ``weights`` summing to 1
    - bernoulli:  product measure with symbol probabilities ``probabilities``
    - sampled:    ``count`` i.i.d. draws of ``sampler`` (seeded); ball masses
                  are empirical fractions
    """

    kind: MeasureKind
    points: Tuple[Point, ...] = ()
    weights: Tuple[float, ...] = ()
    probabilities: Tuple[float, ...] = ()
    sampler: str = "uniform"
    count: int = 4096
    seed: int = 0
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "kind", MeasureKind(self.kind))
        object.__setattr__(self, "points", tuple(self.points))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "probabilities", tuple(float(p) for p in self.probabilities))
        if self.kind == MeasureKind.ATOMIC:
            if not self.points or len(self.points) != len(self.weights):
                raise ValueError("atomic measures need one positive weight per point")
            if min(self.weights) <= 0:
                raise ValueError("atomic weights must be positive")
            _check_total(self.weights, "atomic weights")
        elif self.kind == MeasureKind.BERNOULLI:
            if len(self.probabilities) < 2 or min(self.probabilities) < 0:
                raise ValueError("bernoulli measures need nonnegative probabilities for k >= 2 symbols")
            _check_total(self.probabilities, "bernoulli probabilities")
        else:
            if self.sampler not in SAMPLERS:
                raise ValueError(f"sampler must be one of {SAMPLERS}, got {self.sampler!r}")
            if self.count < 1:
                raise ValueError(f"sampled measures need count >= 1, got {self.count}")

    def validate_for(self, space: StateSpace):
        if self.kind == MeasureKind.BERNOULLI:
            if space.kind != SpaceKind.SYMBOLIC or len(self.probabilities) != space.alphabet:
                raise SystemDefinitionError(
                    f"bernoulli measure with {len(self.probabilities)} symbols does not fit {space.kind.value}"
                )
        if self.kind == MeasureKind.ATOMIC:
            outside = [p for p in self.points if not space.contains(p)]
            if outside:
                raise SystemDefinitionError(f"atoms outside the space: {outside[:3]}")

    @property
    def name(self) -> str:
        if self.label:
            return self.label
        if self.kind == MeasureKind.BERNOULLI:
            return "bernoulli(" + ",".join(f"{p:g}" for p in self.probabilities) + ")"
        if self.kind == MeasureKind.ATOMIC:
            return f"atomic({len(self.points)})"
        return f"sampled({self.sampler},{self.count})"

    # ===== DRAWS =====

    def draw(self, space: StateSpace, index: int, seed: int) -> Point:
        """One draw from the stream keyed by (seed, index)."""
        rng = np.random.default_rng([seed, index])
        if self.kind == MeasureKind.ATOMIC:
            return self.points[int(rng.choice(len(self.points), p=np.asarray(self.weights) / sum(self.weights)))]
        if self.kind == MeasureKind.BERNOULLI:
            probs = np.asarray(self.probabilities) / sum(self.probabilities)
            return "".join(str(s) for s in rng.choice(space.alphabet, size=space.length, p=probs))
        return _uniform_point(space, rng)

    def draws(self, space: StateSpace, count: int, seed: int) -> List[Point]:
        return [self.draw(space, i, seed) for i in range(count)]

    def support_sample(self, space: StateSpace) -> List[Point]:
        """The empirical support of a sampled measure."""
        return self.draws(space, self.count, self.seed)


def _check_total(values: Sequence[float], what: str):
    total = math.fsum(values)
    if abs(total - 1.0) > MASS_TOL:
        raise ValueError(f"{what} sum to {total}, expected 1")


def _uniform_point(space: StateSpace, rng: np.random.Generator) -> Point:
    if space.kind == SpaceKind.SYMBOLIC:
        return "".join(str(s) for s in rng.integers(space.alphabet, size=space.length))
    if space.kind == SpaceKind.TORUS:
        return tuple(float(c) for c in rng.random(space.dimension))
    return float(rng.random())


def dirac(x: Point) -> BorelMeasure:
    return BorelMeasure(kind=MeasureKind.ATOMIC, points=(x,), weights=(1.0,), label=f"dirac({x})")


def bernoulli(probabilities: Sequence[float]) -> BorelMeasure:
    return BorelMeasure(kind=MeasureKind.BERNOULLI, probabilities=tuple(probabilities))


def bernoulli_grid(values: Sequence[float]) -> List[BorelMeasure]:
    """Two-symbol Bernoulli measures with P(symbol 1) = p for each p."""
    return [BorelMeasure(kind=MeasureKind.BERNOULLI, probabilities=(1.0 - p, p), label=f"bernoulli(p={p:g})") for p in values]


def uniform_separated(
    system: NaifsSystem,
    sample: SampleSet,
    n: int,
    eps: float,
    budget: TreeBudget = DEFAULT_BUDGET,
) -> BorelMeasure:
    """Equal weights on a greedy (n, eps)-separated subset of the sample."""
    points = greedy_separated(system, sample, n, eps, metric="d_n", budget=budget)
    weight = 1.0 / len(points)
    return BorelMeasure(
        kind=MeasureKind.ATOMIC,
        points=tuple(points),
        weights=tuple([weight] * len(points)),
        label=f"uniform-separated(n={n},eps={eps:g},size={len(points)})",
    )


# ============================================================================
# BALL MASSES
# ============================================================================

@dataclass
class BallMass:
    value: float
    interval: Optional[Tuple[float, float]] = None   # Wilson interval for sampled measures

    @property
    def width(self) -> float:
        return 0.0 if self.interval is None else self.interval[1] - self.interval[0]


def wilson_interval(hits: int, trials: int, level: float = WILSON_LEVEL) -> Tuple[float, float]:
    z = float(norm.ppf(0.5 + level / 2))
    p = hits / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def bernoulli_log_masses(
    space: StateSpace,
    probabilities: Sequence[float],
    points: Sequence[str],
    n_values: Sequence[int],
    radius: float,
) -> np.ndarray:
    """
    log mu(B_n(x, 2^-m)) for every point and n: the log mass of the cylinder
    x_0 .. x_{n+m}. Shape (len(points), len(n_values)).
    """
    if radius > 1.0:
        return np.zeros((len(points), len(n_values)))
    m = dyadic_exponent(radius)
    if m < 0:
        raise ExactnessError(f"Bernoulli ball masses are exact only for radii 2^-m, got {radius}")
    longest = max(n_values) + m + 1
    if longest > space.length:
        raise ExactnessError(f"cylinder length {longest} exceeds the symbolic length {space.length}")
    with np.errstate(divide="ignore"):
        log_p = np.log(np.asarray(probabilities, dtype=np.float64))
    symbols = np.array([[int(ch) for ch in p[:longest]] for p in points], dtype=np.int64).reshape(len(points), longest)
    running = np.cumsum(log_p[symbols], axis=1)
    return running[:, [n + m for n in n_values]]


class BallMassTable:
    """
    Bowen-ball masses mu(B_n(x, r)) for a batch of centers, every r in a grid
    and every n up to ``depth``.
    """

    def __init__(
        self,
        system: NaifsSystem,
        measure: BorelMeasure,
        centers: Sequence[Point],
        depth: int,
        budget: TreeBudget = DEFAULT_BUDGET,
    ):
        measure.validate_for(system.space)
        self.system = system
        self.measure = measure
        self.centers = list(centers)
        self.depth = depth
        self.budget = budget

    @cached_property
    def _distances(self) -> np.ndarray:
        """d_n(center, atom) for n = 0..depth, shape (depth+1, C, A)."""
        space = self.system.space
        atoms = self.measure.points if self.measure.kind == MeasureKind.ATOMIC else self.measure.support_sample(space)
        centers = orbit_table(self.system, space.to_array(self.centers), self.depth, 1, self.budget)
        targets = orbit_table(self.system, space.to_array(atoms), self.depth, 1, self.budget)
        return dn_matrix(centers, targets)

    def masses(self, n_values: Sequence[int], radius: float) -> Tuple[np.ndarray, Optional[np.ndarray]]:
        """
        Returns (mass, half_width): arrays of shape (C, len(n_values)); the
        half width of the Wilson interval is given for sampled measures only.
        """
        if radius <= 0:
            raise ValueError(f"radius must be positive, got {radius}")
        if self.measure.kind == MeasureKind.BERNOULLI:
            logs = bernoulli_log_masses(self.system.space, self.measure.probabilities, self.centers, n_values, radius)
            return np.exp(logs), None
        inside = self._distances[list(n_values)] < radius          # (len(n), C, A)
        if self.measure.kind == MeasureKind.ATOMIC:
            mass = np.tensordot(inside, np.asarray(self.measure.weights), axes=([2], [0]))
            return np.minimum(mass.T, 1.0), None
        hits = inside.sum(axis=2).T
        trials = self.measure.count
        bounds = np.array([[wilson_interval(int(h), trials) for h in row] for row in hits])
        return hits / trials, (bounds[..., 1] - bounds[..., 0]) / 2


def ball_mass(
    system: NaifsSystem,
    measure: BorelMeasure,
    x: Point,
    n: int,
    r: float,
    budget: TreeBudget = DEFAULT_BUDGET,
) -> BallMass:
    table = BallMassTable(system, measure, [x], n, budget)
    mass, half = table.masses([n], r)
    value = float(mass[0, 0])
    if half is None:
        return BallMass(value=value)
    return BallMass(value=value, interval=wilson_interval(round(value * measure.count), measure.count))


def ball_measure(
    system: NaifsSystem,
    measure: BorelMeasure,
    x: Point,
    n: int,
    r: float,
    budget: TreeBudget = DEFAULT_BUDGET,
) -> float:
    """mu(B_n(x, r)) with B_n open: {y : d_n(x, y) < r}."""
    return ball_mass(system, measure, x, n, r, budget).value
