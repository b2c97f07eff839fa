# ============================================================================
# MEASURE TESTS
# File: src/measures/tests/test_measures.py
# Purpose: Ball masses, local pressure, Frostman, variational and bounds checks
# ============================================================================
import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent.parent.parent))

import math

import pytest

from src.dynamics.counting import cylinder_sample
from src.errors import ExactnessError, MeasurePreconditionError, SystemDefinitionError
from src.measures.checks import frostman_constant, frostman_inequality_check, pressure_bounds_check, variational_gap
from src.measures.local_pressure import local_lower_pressure, measure_pressure
from src.measures.measures import (
    BorelMeasure,
    ball_mass,
    ball_measure,
    bernoulli,
    bernoulli_grid,
    dirac,
    uniform_separated,
    wilson_interval,
)
from src.measures.targets import TargetSet, swap_symbols
from src.pressure.estimates import PressureParams
from src.systems.maps import MapSpec
from src.systems.naifs import constant_system
from src.systems.potentials import Potential
from src.systems.spaces import StateSpace

LOG2 = math.log(2)
ZERO = Potential(kind="constant", constant=0.0)
FAIR = bernoulli([0.5, 0.5])


def shift(length=16):
    return constant_system(StateSpace(kind="symbolic", alphabet=2, length=length), [MapSpec(kind="shift")])


# ===== TEST: BALL MASSES =====

def test_bernoulli_ball_is_a_cylinder():
    """B_3(x, 1/2) is a length-5 cylinder."""
    system = shift()
    assert ball_measure(system, FAIR, "0" * 16, 3, 0.5) == pytest.approx(2.0 ** -5)
    skewed = bernoulli([0.25, 0.75])
    x = "1101" + "0" * 12
    assert ball_measure(system, skewed, x, 2, 0.5) == pytest.approx(0.75 * 0.75 * 0.25 * 0.75)
    assert ball_measure(system, skewed, x, 2, 2.0) == 1.0
    print("✓ test_bernoulli_ball_is_a_cylinder passed")


def test_bernoulli_masses_need_dyadic_radii():
    system = shift()
    with pytest.raises(ExactnessError):
        ball_measure(system, FAIR, "0" * 16, 3, 0.3)
    with pytest.raises(ExactnessError):
        ball_measure(system, FAIR, "0" * 16, 15, 0.5)


def test_atomic_masses():
    system = shift()
    x, y = "0" * 16, "1" * 16
    assert ball_measure(system, dirac(x), x, 4, 0.5) == 1.0
    assert ball_measure(system, dirac(x), y, 4, 0.5) == 0.0
    two = BorelMeasure(kind="atomic", points=(x, y), weights=(0.25, 0.75))
    assert ball_measure(system, two, x, 2, 0.25) == pytest.approx(0.25)
    assert ball_measure(system, two, y, 0, 2.0) == pytest.approx(1.0)


def test_invalid_measures():
    with pytest.raises(ValueError):
        BorelMeasure(kind="atomic", points=("0",), weights=(0.5,))
    with pytest.raises(ValueError):
        bernoulli([0.5, 0.6])
    with pytest.raises(ValueError):
        BorelMeasure(kind="sampled", sampler="gaussian")
    with pytest.raises(SystemDefinitionError):
        FAIR.validate_for(StateSpace(kind="circle"))
    print("✓ test_invalid_measures passed")


def test_wilson_interval():
    lo, hi = wilson_interval(0, 100)
    assert lo == pytest.approx(0.0, abs=1e-12)
    assert 0.0 < hi < 0.05
    lo, hi = wilson_interval(50, 100)
    assert lo + hi == pytest.approx(1.0)
    assert 0.39 < lo < 0.41


def test_sampled_measure_mass():
    """Uniform draws on the circle: the ball of radius 0.1 holds about a fifth of them."""
    system = constant_system(StateSpace(kind="circle"), [MapSpec(kind="affine-mod-1", slope=2)])
    sampled = BorelMeasure(kind="sampled", count=2000, seed=1)
    mass = ball_mass(system, sampled, 0.5, 0, 0.1)
    assert mass.value == pytest.approx(0.2, abs=0.05)
    assert mass.interval[0] <= mass.value <= mass.interval[1]
    assert 0 < mass.width < 0.1


def test_uniform_separated_measure():
    system = shift()
    mu = uniform_separated(system, cylinder_sample(system.space, 5), 3, 0.5)
    assert len(mu.points) == 16
    assert math.fsum(mu.weights) == pytest.approx(1.0)
    assert "size=16" in mu.name


# ===== TEST: TARGET SETS =====

def test_target_measure_of():
    space = shift().space
    nested = TargetSet(kind="cylinders", cylinders=["01", "0"])
    assert nested.cylinders == ("0",)
    assert nested.measure_of(space, bernoulli([0.25, 0.75])) == pytest.approx(0.25)
    assert nested.measure_of(space, dirac("0" * 16)) == 1.0
    assert TargetSet(kind="whole").measure_of(space, FAIR) == 1.0
    assert TargetSet(kind="points", points=["0" * 16]).measure_of(space, FAIR) == 0.0
    assert len(TargetSet(kind="cylinders", cylinders=["0"], resolution=4).sample(space)) == 8
    print("✓ test_target_measure_of passed")


def test_grid_target_on_interval():
    space = StateSpace(kind="interval")
    box = TargetSet(kind="grid", resolution=11, box=[[0.0, 0.5]])
    assert len(box.sample(space)) == 6
    assert box.contains(space, 0.25) and not box.contains(space, 0.75)


def test_swap_symbols():
    assert swap_symbols(["0110", "1"]) == ["1001", "0"]
    assert swap_symbols(["012"], mapping=[2, 0, 1]) == ["201"]


# ===== TEST: LOCAL AND MEASURE PRESSURE =====

def test_local_pressure_of_fair_coin():
    """(-log mu(B_n(x, 2^-m)))/n = log 2 (n+m+1)/n at every point."""
    system = shift()
    value = local_lower_pressure(system, FAIR, ZERO, "0110" + "0" * 12, [0.5, 0.25], [4, 8])
    assert value.table[(0.5, 4)] == pytest.approx(LOG2 * 6 / 4)
    assert value.liminf[0.5] == pytest.approx(LOG2 * 10 / 8)
    assert value.value == pytest.approx(LOG2 * 11 / 8)
    assert not value.stabilized
    print("✓ test_local_pressure_of_fair_coin passed")


def test_local_pressure_grid_validation():
    system = shift()
    with pytest.raises(ValueError):
        local_lower_pressure(system, FAIR, ZERO, "0" * 16, [0.25, 0.5], [4, 8])
    with pytest.raises(ValueError):
        local_lower_pressure(system, FAIR, ZERO, "0" * 16, [0.5], [4, 6])


def test_measure_pressure_shifts_with_constant_potential():
    system = shift()
    base = measure_pressure(system, FAIR, ZERO, [0.5, 0.25], [4, 8], count=8, seed=2)
    shifted = measure_pressure(system, FAIR, Potential(kind="constant", constant=0.3), [0.5, 0.25], [4, 8], count=8, seed=2)
    assert base.integration == "monte-carlo"
    assert base.value == pytest.approx(LOG2 * 11 / 8)
    assert base.standard_error == pytest.approx(0.0, abs=1e-12)
    assert shifted.value == pytest.approx(base.value + 0.3)


def test_measure_pressure_exact_atomic():
    system = shift()
    mu = BorelMeasure(kind="atomic", points=("0" * 16, "1" * 16), weights=(0.5, 0.5))
    result = measure_pressure(system, mu, ZERO, [0.5, 0.25], [4, 8])
    assert result.integration == "exact-atomic"
    # each atom carries mass 1/2 in all of its balls
    assert result.value == pytest.approx(LOG2 / 8)
    with pytest.raises(ValueError):
        measure_pressure(system, FAIR, ZERO, [0.5], [4, 8], integration="exact-atomic")


def test_measure_pressure_workers_agree():
    system = shift()
    mu = bernoulli([0.3, 0.7])
    serial = measure_pressure(system, mu, ZERO, [0.5, 0.25], [4, 8], count=12, seed=5)
    parallel = measure_pressure(system, mu, ZERO, [0.5, 0.25], [4, 8], count=12, seed=5, workers=3)
    assert serial.value == parallel.value
    assert [v.point for v in serial.locals] == [v.point for v in parallel.locals]


# ===== TEST: FROSTMAN =====

def test_frostman_equality_at_first_length():
    """
    W(0.6, 1/2, 2) = 16 e^{-1.2}; the fair-coin mass 2^{-(n+2)} meets the
    bound with equality at n = 2 and stays below it afterwards.
    """
    system = shift()
    K = cylinder_sample(system.space, 8)
    c = frostman_constant(system, K, ZERO, 0.6, 0.5, 2, window=2)
    assert c == pytest.approx(16 * math.exp(-1.2), rel=1e-6)
    report = frostman_inequality_check(system, FAIR, K, ZERO, 0.6, 0.5, 2, 6, c)
    assert report.violations == 0
    assert report.checked == 256 * 5
    assert report.worst_n == 2
    assert report.worst_slack == pytest.approx(0.0, abs=1e-6)
    print("✓ test_frostman_equality_at_first_length passed")


def test_frostman_detects_oversized_constant():
    system = shift()
    K = cylinder_sample(system.space, 8)
    report = frostman_inequality_check(system, FAIR, K, ZERO, 0.6, 0.5, 2, 6, c=100.0)
    assert report.violations > 0
    with pytest.raises(ValueError):
        frostman_inequality_check(system, FAIR, K, ZERO, 0.6, 0.5, 2, 6, c=0.0)


# ===== TEST: VARIATIONAL GAP AND BOUNDS =====

@pytest.fixture
def long_shift():
    return shift(length=52)


def pressure_params():
    return PressureParams(delta_grid=(0.5, 0.25), N_grid=(2, 3), window=2)


def test_variational_gap_on_full_shift(long_shift):
    report = variational_gap(
        long_shift, TargetSet(kind="whole"), ZERO, bernoulli_grid([0.3, 0.5]), pressure_params(),
        r_grid=[0.5, 0.25], n_window=[30, 48], count=32,
    )
    assert report.pressure.value == pytest.approx(LOG2, abs=1e-3)
    assert report.best_measure == "bernoulli(p=0.5)"
    assert report.sup_measure_pressure == pytest.approx(LOG2 * 51 / 48)
    assert report.holds
    print("✓ test_variational_gap_on_full_shift passed")


def test_skewed_coin_measure_pressure_is_its_entropy(long_shift):
    """
    -log mu(B_n(x, 1/4)) averages H(1/4) (n+3) with H(1/4) = -1/4 log 1/4 - 3/4 log 3/4,
    so the tail value sits near H(1/4) and well below the fair coin's log 2.
    """
    entropy = -(0.25 * math.log(0.25) + 0.75 * math.log(0.75))
    result = measure_pressure(long_shift, bernoulli([0.25, 0.75]), ZERO, [0.5, 0.25], [30, 48], count=128, seed=4)
    assert result.value == pytest.approx(entropy, abs=0.08)
    assert result.standard_error < 0.02
    fair = measure_pressure(long_shift, FAIR, ZERO, [0.5, 0.25], [30, 48], count=8, seed=4)
    assert result.value < fair.value - 0.1
    print("✓ test_skewed_coin_measure_pressure_is_its_entropy passed")


def test_variational_gap_needs_full_mass(long_shift):
    with pytest.raises(MeasurePreconditionError):
        variational_gap(
            long_shift, TargetSet(kind="cylinders", cylinders=["0"]), ZERO, [FAIR], pressure_params(),
            r_grid=[0.5], n_window=[30, 48],
        )
    with pytest.raises(ValueError):
        variational_gap(long_shift, TargetSet(kind="whole"), ZERO, [], pressure_params(), [0.5], [30, 48])


def test_two_sided_bounds(long_shift):
    report = pressure_bounds_check(
        long_shift, TargetSet(kind="whole"), FAIR, ZERO, [0.5, 1.0], pressure_params(),
        r_grid=[0.5, 0.25], n_window=[30, 48], count=16,
    )
    assert report.local_min == pytest.approx(report.local_max)
    assert report.levels[0].lower_asserted and not report.levels[0].upper_asserted
    assert report.levels[1].upper_asserted and not report.levels[1].lower_asserted
    assert report.violations == 0


def test_bounds_need_positive_mass(long_shift):
    with pytest.raises(MeasurePreconditionError):
        pressure_bounds_check(
            long_shift, TargetSet(kind="points", points=["0" * 52]), FAIR, ZERO, [0.5], pressure_params(),
            r_grid=[0.5], n_window=[30, 48],
        )
