# ============================================================================
# GUARDRAILS
# File: src/orchestrator/guardrails.py
# Purpose: Property checks evaluated on the quantities a check-suite computes
# ============================================================================

import math
from typing import Any, Callable, Dict, List, Sequence, Tuple


class Guardrail:
    """Single property that can be checked against computed quantities."""

    def __init__(
        self,
        name: str,
        description: str,
        rule_func: Callable[[Dict[str, Any]], bool],
        requires: Sequence[str] = (),
    ):
        self.name = name
        self.description = description
        self.rule_func = rule_func
        self.requires = tuple(requires)

    def applies(self, props: Dict[str, Any]) -> bool:
        return all(key in props for key in self.requires)

    def check(self, props: Dict[str, Any]) -> Tuple[bool, str]:
        """
        Returns:
            (passed, message)
        """
        try:
            if self.rule_func(props):
                return True, f"✓ {self.name}"
            return False, f"✗ {self.name}: {self.description}"
        except Exception as e:
            return False, f"✗ {self.name}: error evaluating property - {e}"


def _tol(props: Dict[str, Any]) -> float:
    return 2 * props.get("tolerance", 1e-3)


def _ordering(p) -> bool:
    return p["pp"] <= p["cp_lower"] + _tol(p) and p["cp_lower"] <= p["cp_upper"] + _tol(p)


def _prime_chain(p) -> bool:
    return all(-_tol(p) <= gap <= modulus + _tol(p) for gap, modulus in p["prime_gaps"])


def _union(p) -> bool:
    first, second, union = p["union_pp"]
    return union >= max(first, second) - _tol(p)


def _ball_monotone(p) -> bool:
    return p["ball_mass_monotone_r"] and p["ball_mass_monotone_n"]


def _measure_shift(p) -> bool:
    shift, base, shifted = p["measure_shift"]
    return math.isclose(shifted - base, shift, abs_tol=1e-9)


# ============================================================================
# PROPERTY GUARDRAILS
# ============================================================================

PROPERTY_GUARDRAILS: List[Guardrail] = [
    Guardrail(
        name="Pressure Ordering",
        description="pp <= lower capacity <= upper capacity within 2 tolerances",
        rule_func=_ordering,
        requires=("pp", "cp_lower", "cp_upper"),
    ),
    Guardrail(
        name="Ball-Sup Pressure Chain",
        description="0 <= P'(delta) - P(delta) <= modulus(delta) at every delta",
        rule_func=_prime_chain,
        requires=("prime_gaps",),
    ),
    Guardrail(
        name="W/M Sandwich",
        description="M(alpha+eps, 6 delta) <= W(alpha, delta) <= M(alpha, delta) for counted N",
        rule_func=lambda p: p["sandwich_violations"] == 0,
        requires=("sandwich_violations",),
    ),
    Guardrail(
        name="Empty Set Pressure",
        description="the pressure of the empty set is <= 0",
        rule_func=lambda p: p["empty_pressure"] <= 0,
        requires=("empty_pressure",),
    ),
    Guardrail(
        name="Subset Monotonicity",
        description="pp(Z1) <= pp(Z2) + 2 tol for Z1 inside Z2",
        rule_func=lambda p: p["subset_pp"][0] <= p["subset_pp"][1] + _tol(p),
        requires=("subset_pp",),
    ),
    Guardrail(
        name="Union Is Max",
        description="pp(Z1 u Z2) >= max(pp(Z1), pp(Z2)) - 2 tol",
        rule_func=_union,
        requires=("union_pp",),
    ),
    Guardrail(
        name="Capacity Subset Monotonicity",
        description="capacity pressures of Z1 <= those of Z2 + 0.02",
        rule_func=lambda p: all(a <= b + 0.02 for a, b in p["capacity_subset"]),
        requires=("capacity_subset",),
    ),
    Guardrail(
        name="Capacity Union",
        description="upper capacity of Z1 u Z2 >= max of the parts - tol",
        rule_func=lambda p: p["capacity_union"][2] >= max(p["capacity_union"][:2]) - _tol(p),
        requires=("capacity_union",),
    ),
    Guardrail(
        name="Symbol Swap Invariance",
        description="pp(Z, phi) = pp(g Z, phi o g^-1) within 2 tol for the symbol swap g",
        rule_func=lambda p: abs(p["swap_pp"][0] - p["swap_pp"][1]) <= _tol(p),
        requires=("swap_pp",),
    ),
    Guardrail(
        name="Cost Monotone In Alpha",
        description="the fractional cover cost strictly decreases as alpha grows",
        rule_func=lambda p: p["cost_monotone"],
        requires=("cost_monotone",),
    ),
    Guardrail(
        name="Variational Upper Bound",
        description="sup of measure pressures <= pp + tolerance",
        rule_func=lambda p: p["variational_S"] <= p["variational_P"] + p.get("check_tolerance", 0.05),
        requires=("variational_S", "variational_P"),
    ),
    Guardrail(
        name="Local Pressure Bounds",
        description="local lower pressure bounds imply the matching pressure bounds",
        rule_func=lambda p: p["bounds_violations"] == 0,
        requires=("bounds_violations",),
    ),
    Guardrail(
        name="Frostman Inequality",
        description="mu(B_n(x, eps)) <= exp(-alpha n + S_n phi(x)) / c on the test grid",
        rule_func=lambda p: p["frostman_violations"] == 0,
        requires=("frostman_violations",),
    ),
    Guardrail(
        name="Measure Pressure Shift",
        description="measure pressure of phi + c equals measure pressure of phi plus c",
        rule_func=_measure_shift,
        requires=("measure_shift",),
    ),
    Guardrail(
        name="Ball Measure Monotonicity",
        description="ball masses grow with r and shrink with n",
        rule_func=_ball_monotone,
        requires=("ball_mass_monotone_r", "ball_mass_monotone_n"),
    ),
    Guardrail(
        name="Vitali Containment",
        description="enlarged selected balls cover every input ball",
        rule_func=lambda p: p["vitali_ok"],
        requires=("vitali_ok",),
    ),
    Guardrail(
        name="Metric Axioms",
        description="d_n is symmetric, vanishes on the diagonal and satisfies the triangle inequality",
        rule_func=lambda p: p["metric_axioms"],
        requires=("metric_axioms",),
    ),
    Guardrail(
        name="Oracle Agreement",
        description="every estimate lies within the oracle tolerance of its closed-form value",
        rule_func=lambda p: all(gap <= p["oracle_tolerance"] for _, gap in p["oracle_gaps"]),
        requires=("oracle_gaps", "oracle_tolerance"),
    ),
    Guardrail(
        name="Enumeration Oracle",
        description="exact d_n, d_n*, ball membership and maximal Birkhoff sums match full word enumeration to 1e-9",
        rule_func=lambda p: p["oracle_max_error"] <= 1e-9 and p["oracle_membership_mismatches"] == 0,
        requires=("oracle_max_error", "oracle_membership_mismatches"),
    ),
]


# ============================================================================
# HELPER FUNCTION
# ============================================================================

def check_guardrails(
    guardrails: List[Guardrail],
    properties: Dict[str, Any],
) -> Tuple[bool, List[Dict[str, Any]]]:
    """
    Check every applicable guardrail against the computed properties.

    Returns:
        (all_passed, outcomes) with one {name, status, message} per guardrail;
        guardrails whose inputs were not computed are reported as skipped.
    """
    outcomes = []
    all_passed = True
    for guardrail in guardrails:
        if not guardrail.applies(properties):
            outcomes.append({"name": guardrail.name, "status": "skipped", "message": f"- {guardrail.name}: not computed"})
            continue
        passed, message = guardrail.check(properties)
        outcomes.append({"name": guardrail.name, "status": "pass" if passed else "fail", "message": message})
        if not passed:
            all_passed = False
    return all_passed, outcomes
