"""Exception hierarchy shared by the numeric modules."""

from __future__ import annotations


class IBVPError(Exception):
    """Base class for every error raised by this package."""


class NonIntegrableWeightError(IBVPError):
    """The reciprocal weight 1/p is not integrable on the requested range."""

    def __init__(self, message: str, location: float | None = None):
        super().__init__(message)
        self.location = location


class DegenerateKernelError(IBVPError):
    """The coupling constant D is not safely positive."""

    def __init__(self, D: float):
        super().__init__(f"coupling constant D={D!r} is not positive")
        self.D = D


class ZeroDenominatorError(IBVPError):
    """min{b1, b2} vanishes, so the derivative constant c is undefined."""


class QuadratureEvaluationError(IBVPError):
    """The integrand returned a non-finite value."""

    def __init__(self, abscissa: float, value: float):
        super().__init__(f"integrand is not finite at s={abscissa!r} (value {value!r})")
        self.abscissa = abscissa
        self.value = value


class TailModelError(IBVPError):
    """Evaluation requested outside [0, inf] for a piecewise function."""


class OperatorEvaluationError(IBVPError):
    """A term of the fixed-point operator could not be evaluated."""

    def __init__(self, term: str, location: float | None, detail: str = ""):
        msg = f"operator term {term!r} failed"
        if location is not None:
            msg += f" near s={location:.6g}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.term = term
        self.location = location


class ProbePlacementError(IBVPError):
    """A finite-difference probe lies too close to an impulse point."""


class ConfigError(IBVPError):
    """A run configuration could not be loaded."""
