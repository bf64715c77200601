"""
Domain errors for KP Torus Lab.

All errors derive from ValueError so callers can catch them broadly.
"""

from typing import Any, Optional


class ShapeError(ValueError):
    """Sample or coefficient array does not match the grid."""


class NonMeanZeroError(ValueError):
    """Nonzero k = 0 mass where the mean-zero sector is required."""


class ResonantInteractionError(ValueError):
    """Interaction with k = 0, k1 = 0 or k2 = 0."""


class HypothesisViolation(ValueError):
    """Probe parameters outside the hypotheses of the estimate being probed."""

    def __init__(self, case: str, violations: list):
        self.case = case
        self.violations = list(violations)
        super().__init__(f"{case}: " + "; ".join(self.violations))


class StabilityError(ValueError):
    """Time step exceeds the preflight stability bound."""


class SolverInstabilityError(ValueError):
    """NaN or overflow detected during time stepping."""

    def __init__(self, step: int, message: Optional[str] = None):
        self.step = step
        super().__init__(message or f"non-finite state at step {step}")


class PicardDivergenceError(ValueError):
    """Picard iteration difference ratio exceeded the divergence threshold."""

    def __init__(self, report: Any, message: str):
        self.report = report
        super().__init__(message)
