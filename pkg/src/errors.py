# ============================================================================
# ERRORS
# File: src/errors.py
# Purpose: Exception hierarchy shared by every subpackage
# ============================================================================

from typing import List, Optional


class PressureForgeError(Exception):
    """Base class for all errors raised by the toolkit."""


class ConfigValidationError(PressureForgeError):
    """Experiment config failed validation; carries every error found."""

    def __init__(self, errors: List[str]):
        self.errors = list(errors)
        summary = "; ".join(self.errors[:5])
        more = f" (+{len(self.errors) - 5} more)" if len(self.errors) > 5 else ""
        super().__init__(f"{len(self.errors)} config error(s): {summary}{more}")


class SystemDefinitionError(PressureForgeError, ValueError):
    """A space, map, schedule or potential is malformed."""


class MalformedWordError(PressureForgeError, ValueError):
    """A generator index is out of range for the family at its time step."""


class NoCoverError(PressureForgeError):
    """The candidate ball family does not cover the target sample."""

    def __init__(self, message: str, uncovered: Optional[int] = None):
        self.uncovered = uncovered
        super().__init__(message)


class UnboundedPressureError(PressureForgeError):
    """The cost function never crossed its level inside the bracket limit."""


class DegenerateFitError(PressureForgeError, ValueError):
    """Too few points for a least-squares slope."""


class ExactnessError(PressureForgeError, ValueError):
    """A closed-form evaluation was requested outside its exact regime."""


class MeasurePreconditionError(PressureForgeError, ValueError):
    """A measure does not give the target set the required mass."""
