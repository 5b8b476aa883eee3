"""Exception types raised by the package."""

from __future__ import annotations


class KurthBifError(Exception):
    """Base class for all package errors."""


class DomainError(KurthBifError, ValueError):
    """An argument lies outside the domain of the requested operation."""


class ChartSingularityError(DomainError):
    """Reduced coordinates are undefined at the requested point (r = 0)."""


class ContractionError(KurthBifError, ArithmeticError):
    """The iterate series of h lost its contraction ratio <= 1/2."""

    def __init__(self, message: str, ratio: float):
        super().__init__(message)
        self.ratio = ratio


class AccuracyError(KurthBifError, ArithmeticError):
    """A quadrature or solver error estimate exceeded its tolerance."""

    def __init__(self, message: str, estimate: float):
        super().__init__(message)
        self.estimate = estimate


class BuildError(AccuracyError):
    """A profile table failed its residual verification."""

    def __init__(self, message: str, estimate: float, residuals=None):
        super().__init__(message, estimate)
        self.residuals = residuals


class ConvergenceError(KurthBifError, RuntimeError):
    """An iterative solver did not converge."""


class SamplerError(KurthBifError, RuntimeError):
    """A Monte Carlo sampler could not produce samples."""
