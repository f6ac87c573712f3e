"""Exception types raised by the package."""

from __future__ import annotations


class FbmLabError(Exception):
    """Base class for package errors."""


class DomainError(FbmLabError, ValueError):
    """Arguments outside the domain of a kernel or bound function."""


class QuadratureError(FbmLabError, ArithmeticError):
    """A quadrature rule failed to reach its tolerance.

    Attributes
    ----------
    value
        Last available estimate.
    error
        Achieved error estimate.
    """

    def __init__(self, message: str, value: float = float("nan"), error: float = float("inf")):
        super().__init__(f"{message} (estimate {value!r}, error estimate {error:.3e})")
        self.value = value
        self.error = error


class FactorizationError(FbmLabError, ArithmeticError):
    """Cholesky factorization failed even after diagonal jitter."""


class IntegrationError(FbmLabError, ArithmeticError):
    """Non-finite state encountered while integrating an SDE.

    Attributes
    ----------
    step
        Index of the first step producing a non-finite value.
    """

    def __init__(self, message: str, step: int):
        super().__init__(f"{message} at step {step}")
        self.step = step


class ConfigError(FbmLabError, ValueError):
    """Invalid or unknown configuration entries."""


class CalibrationError(FbmLabError, RuntimeError):
    """No finite envelope constant dominates the calibration tails."""
