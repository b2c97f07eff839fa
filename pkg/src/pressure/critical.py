# ============================================================================
# CRITICAL EXPONENT
# File: src/pressure/critical.py
# Purpose: Bracket expansion + bisection for the alpha where a cost hits 1
# ============================================================================

import logging
import math
from typing import Callable, Tuple

from src.errors import UnboundedPressureError

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-3
MAX_EXPANSIONS = 60


def critical_alpha(
    log_cost: Callable[[float], float],
    bracket0: Tuple[float, float] = (-1.0, 1.0),
    tol: float = DEFAULT_TOLERANCE,
    max_expansions: int = MAX_EXPANSIONS,
) -> Tuple[float, Tuple[float, float]]:
    """
    Find alpha* with cost(alpha*) = 1 for a nonincreasing cost.

    ``log_cost`` returns log cost(alpha), so the level is 0 and costs that
    overflow a float stay usable. The bracket grows geometrically from
    ``bracket0`` until log_cost(lo) > 0 > log_cost(hi), then is bisected
    down to width <= tol.

    Returns:
        (alpha*, (lo, hi)) with alpha* the bracket midpoint
    """
    lo, hi = bracket0
    if not lo < hi:
        raise ValueError(f"bracket0 must satisfy lo < hi, got {bracket0}")
    if tol <= 0:
        raise ValueError(f"tolerance must be positive, got {tol}")

    step = hi - lo
    expansions = 0
    while not log_cost(lo) > 0.0:
        if expansions >= max_expansions:
            raise UnboundedPressureError(
                f"cost stays <= 1 down to alpha={lo:.6g} after {expansions} expansions"
            )
        hi, lo = lo, lo - step
        step *= 2.0
        expansions += 1
    step = hi - lo
    while not log_cost(hi) < 0.0:
        if expansions >= max_expansions:
            raise UnboundedPressureError(
                f"cost stays >= 1 up to alpha={hi:.6g} after {expansions} expansions"
            )
        lo, hi = hi, hi + step
        step *= 2.0
        expansions += 1

    if expansions:
        logger.debug(f"bracket expanded {expansions} time(s) to [{lo:.6g}, {hi:.6g}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        value = log_cost(mid)
        if math.isnan(value):
            raise ValueError(f"log cost is NaN at alpha={mid}")
        if value > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), (lo, hi)
