# ============================================================================
# SYSTEM TESTS
# File: src/systems/tests/test_systems.py
# Purpose: State spaces, generator maps, schedules and potentials
# ============================================================================
import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent.parent.parent))

import math

import numpy as np
import pytest

from src.errors import MalformedWordError, SystemDefinitionError
from src.systems.maps import MapSpec
from src.systems.naifs import NaifsSystem, Word, apply_map, constant_system, iter_words, orbit
from src.systems.potentials import Potential
from src.systems.spaces import StateSpace, base_distance, dyadic_exponent


def shift_space(length=8, alphabet=2):
    return StateSpace(kind="symbolic", alphabet=alphabet, length=length)


def doubling():
    return MapSpec(kind="affine-mod-1", slope=2)


def tripling():
    return MapSpec(kind="affine-mod-1", slope=3)


# ===== TEST: STATE SPACES =====

@pytest.mark.parametrize("x, y, expected", [
    ("01100000", "01100000", 0.0),
    ("01100000", "01000000", 0.25),
    ("01100000", "11100000", 1.0),
    ("01100000", "01100001", 2.0 ** -7),
])
def test_symbolic_distance_is_first_difference(x, y, expected):
    """d(x, y) = 2^-k with k the first index where x and y differ."""
    assert base_distance(shift_space(), x, y) == expected
    print("✓ test_symbolic_distance_is_first_difference passed")


def test_wide_symbolic_codes():
    """Points longer than a machine word use arbitrary-precision codes."""
    space = shift_space(length=60)
    assert space.wide_codes
    x = "0" * 60
    y = "0" * 59 + "1"
    assert base_distance(space, x, y) == 2.0 ** -59
    assert base_distance(space, x, "1" + "0" * 59) == 1.0
    print("✓ test_wide_symbolic_codes passed")


def test_three_symbol_alphabet():
    space = StateSpace(kind="symbolic", alphabet=3, length=4)
    assert space.bits == 2
    assert space.decode(space.encode("0121")) == "0121"
    assert base_distance(space, "0120", "0121") == 2.0 ** -3
    with pytest.raises(SystemDefinitionError):
        space.encode("0130")
    print("✓ test_three_symbol_alphabet passed")


def test_invalid_spaces_rejected():
    with pytest.raises(SystemDefinitionError):
        StateSpace(kind="symbolic", alphabet=11)
    with pytest.raises(SystemDefinitionError):
        StateSpace(kind="symbolic", alphabet=2, fill=2)
    with pytest.raises(SystemDefinitionError):
        StateSpace(kind="torus", dimension=0)
    print("✓ test_invalid_spaces_rejected passed")


def test_circle_and_torus_metrics():
    circle = StateSpace(kind="circle")
    assert base_distance(circle, 0.1, 0.9) == pytest.approx(0.2)
    assert circle.diameter == 0.5
    torus = StateSpace(kind="torus", dimension=2)
    assert base_distance(torus, (0.1, 0.2), (0.4, 0.3)) == pytest.approx(0.3)
    print("✓ test_circle_and_torus_metrics passed")


@pytest.mark.parametrize("radius, m", [(1.0, 0), (0.5, 1), (0.25, 2), (2.0 ** -10, 10), (0.3, -1), (0.75, -1)])
def test_dyadic_exponent(radius, m):
    assert dyadic_exponent(radius) == m


# ===== TEST: GENERATOR MAPS =====

def test_map_validation_errors():
    """Malformed generators fail at construction with SystemDefinitionError."""
    with pytest.raises(SystemDefinitionError):
        MapSpec(kind="affine-mod-1", slope=1.5)
    with pytest.raises(SystemDefinitionError):
        MapSpec(kind="piecewise-linear", breakpoints=[0.0, 1.0], slopes=[2.0], start=0.0)   # range [0, 2]
    with pytest.raises(SystemDefinitionError):
        MapSpec(kind="piecewise-linear", breakpoints=[0.0, 0.5, 1.0], slopes=[1.0], start=0.0)
    with pytest.raises(SystemDefinitionError):
        MapSpec(kind="affine-contraction", matrix=[[1.0, 0.0], [0.0, 0.5]], translation=[0.0, 0.0])
    with pytest.raises(SystemDefinitionError):
        MapSpec(kind="affine-mod-1", slope=3, lipschitz=2.0)
    print("✓ test_map_validation_errors passed")


def test_tent_map():
    tent = MapSpec(kind="piecewise-linear", breakpoints=[0.0, 0.5, 1.0], slopes=[2.0, -2.0], start=0.0)
    assert tent.knot_values == (0.0, 1.0, 0.0)
    assert tent.lipschitz == 2.0
    space = StateSpace(kind="interval")
    images = tent.apply_array(space, np.array([0.0, 0.25, 0.5, 0.75, 1.0]))
    assert images.tolist() == pytest.approx([0.0, 0.5, 1.0, 0.5, 0.0])
    print("✓ test_tent_map passed")


def test_contraction_on_torus():
    half = MapSpec(kind="affine-contraction", matrix=[[0.5, 0.0], [0.0, 0.5]], translation=[0.5, 0.0])
    space = StateSpace(kind="torus", dimension=2)
    image = half.apply_array(space, np.array([[1.0, 1.0]]))
    assert image.tolist() == [[1.0, 0.5]]
    assert half.lipschitz == 0.5


def test_maps_bound_to_their_space():
    with pytest.raises(SystemDefinitionError):
        constant_system(StateSpace(kind="interval"), [doubling()])
    with pytest.raises(SystemDefinitionError):
        constant_system(shift_space(), [doubling()])
    print("✓ test_maps_bound_to_their_space passed")


def test_shift_map_on_codes():
    space = shift_space(length=6)
    shift = MapSpec(kind="shift")
    image = shift.apply_array(space, space.to_array(["101101"]))
    assert space.from_array(image) == ["011010"]
    assert shift.compose_key(("shift", 2)) == ("shift", 3)


# ===== TEST: SCHEDULES AND WORDS =====

def test_family_at_follows_preamble_then_period():
    circle = StateSpace(kind="circle")
    system = NaifsSystem(space=circle, preamble=((doubling(),),), period=((doubling(), tripling()), (tripling(),)))
    assert len(system.family_at(1)) == 1
    assert len(system.family_at(2)) == 2
    assert len(system.family_at(3)) == 1
    assert len(system.family_at(4)) == 2
    assert system.start_classes == 3
    assert not system.is_constant
    with pytest.raises(ValueError):
        system.family_at(0)
    print("✓ test_family_at_follows_preamble_then_period passed")


def test_empty_schedules_rejected():
    circle = StateSpace(kind="circle")
    with pytest.raises(SystemDefinitionError):
        NaifsSystem(space=circle, preamble=(), period=())
    with pytest.raises(SystemDefinitionError):
        NaifsSystem(space=circle, preamble=((),), period=((doubling(),),))


def test_words_and_orbits():
    circle = StateSpace(kind="circle")
    system = constant_system(circle, [doubling(), tripling()])
    assert len(list(iter_words(system, 1, 3))) == 8
    assert apply_map(system, 1, 1, 0.25) == pytest.approx(0.75)
    points = orbit(system, 0.1, Word(indices=(0, 1)))
    assert points == pytest.approx([0.1, 0.2, 0.6])
    print("✓ test_words_and_orbits passed")


def test_malformed_words():
    system = NaifsSystem(space=StateSpace(kind="circle"), preamble=(), period=((doubling(),), (doubling(), tripling())))
    with pytest.raises(MalformedWordError):
        Word(indices=(1,), start=1).validate(system)
    Word(indices=(0, 1), start=1).validate(system)
    with pytest.raises(MalformedWordError):
        Word(indices=(0,), start=0)
    with pytest.raises(MalformedWordError):
        apply_map(system, 1, 2, 0.5)
    print("✓ test_malformed_words passed")


# ===== TEST: POTENTIALS =====

def test_first_symbol_potential():
    space = shift_space()
    phi = Potential(kind="first-symbol", table=[0.0, 1.0])
    phi.validate_for(space)
    assert phi.value(space, "10000000") == 1.0
    assert phi.sup(space) == 1.0 and phi.inf(space) == 0.0
    assert phi.modulus(space, 0.5) == 0.0
    assert phi.modulus(space, 2.0) == 1.0
    with pytest.raises(SystemDefinitionError):
        phi.validate_for(StateSpace(kind="circle"))
    with pytest.raises(SystemDefinitionError):
        phi.validate_for(StateSpace(kind="symbolic", alphabet=3))
    print("✓ test_first_symbol_potential passed")


def test_affine_potential_moduli():
    interval = StateSpace(kind="interval")
    phi = Potential(kind="affine", weights=[2.0], offset=-1.0)
    phi.validate_for(interval)
    assert phi.sup(interval) == 1.0
    assert phi.inf(interval) == -1.0
    assert phi.modulus(interval, 0.1) == pytest.approx(0.2)
    # the jump at 0 keeps the circle modulus at |w| for every radius
    circle = StateSpace(kind="circle")
    phi.validate_for(circle)
    assert phi.modulus(circle, 0.01) == 2.0
    with pytest.raises(SystemDefinitionError):
        Potential(kind="affine", weights=[1.0, 1.0]).validate_for(interval)


def test_grid_potential():
    interval = StateSpace(kind="interval")
    phi = Potential(kind="grid", values=[0.0, 1.0, 0.0])
    phi.validate_for(interval)
    assert phi.value(interval, 0.25) == pytest.approx(0.5)
    assert phi.modulus(interval, 0.1) == pytest.approx(0.2)
    with pytest.raises(SystemDefinitionError):
        Potential(kind="grid", values=[0.0, 1.0]).validate_for(StateSpace(kind="circle"))
    with pytest.raises(SystemDefinitionError):
        Potential(kind="grid", values=[0.0, 1.0, 2.0], shape=[2, 2])


def test_shifted_potential():
    space = shift_space()
    phi = Potential(kind="first-symbol", table=[0.0, 1.0]).shifted(0.5)
    assert phi.table == (0.5, 1.5)
    assert Potential(kind="constant", constant=1.0).shifted(-1.0).constant == 0.0
    assert math.isclose(phi.value(space, "00000000"), 0.5)
