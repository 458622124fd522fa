"""Exception types shared across the package.

Every anticipated failure mode gets its own class so callers (and the CLI's
exit-status logic) can tell configuration mistakes apart from numerical
breakdowns.
"""

from __future__ import annotations


class ZeroNoiseError(Exception):
    """Base class for all package errors."""


class ValidationError(ZeroNoiseError):
    """Bad input: shapes, signs, missing keys, out-of-range parameters."""


class NonsingularityError(ValidationError):
    """A drift field changes sign, so it cannot be normalized to h > 0."""


class PositivityError(ValidationError):
    """A diffusion coefficient or density fails strict positivity."""


class PrecisionExhaustedError(ZeroNoiseError):
    """The requested epsilon is below what the grid can resolve.

    Carries ``eps_min``, the smallest epsilon the current grid handles
    safely, so callers can refine the grid or raise epsilon.
    """

    def __init__(self, message: str, eps_min: float):
        super().__init__(message)
        self.eps_min = eps_min


class SolverFailureError(ZeroNoiseError):
    """A linear solve produced an unusable result (singular system,
    non-finite entries, or negative density beyond tolerance)."""

    def __init__(self, message: str, condition_estimate: float | None = None):
        super().__init__(message)
        self.condition_estimate = condition_estimate


class InsufficientDataError(ValidationError):
    """Too few data points for the requested fit or study."""


class RefineGridError(ZeroNoiseError):
    """All probability mass collapsed into one grid cell; a finer grid
    (larger n) is needed to resolve the density at this epsilon."""


class ModeError(ValidationError):
    """An API meant for a unique global minimum was called on a potential
    with several; points the caller to the symmetric-well API."""
