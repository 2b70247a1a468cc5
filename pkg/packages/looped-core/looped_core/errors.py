"""
Exception hierarchy for looped-core.

Every error raised by the library derives from LoopedError so callers (the CLI
in particular) can map whole families of failures to exit codes.
"""

from typing import Optional


class LoopedError(Exception):
    """Base class for all looped-core errors."""

    pass


class DimensionError(LoopedError, ValueError):
    """Operands have the wrong rank, are empty, or do not conform."""

    pass


class NonFiniteError(LoopedError, ValueError):
    """An input contains NaN or Inf."""

    pass


class SymmetryError(LoopedError, ValueError):
    """A matrix expected to be symmetric is not, within tolerance."""

    def __init__(self, message: str, max_asymmetry: float):
        super().__init__(message)
        self.max_asymmetry = max_asymmetry


class ConvergenceError(LoopedError, ArithmeticError):
    """The eigen iteration did not converge to the requested accuracy."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual={residual:.3e})")
        self.residual = residual


class SingularMatrixError(LoopedError, ArithmeticError):
    """X^T X is not invertible in working precision."""

    def __init__(self, message: str, ratio: Optional[float] = None):
        super().__init__(message)
        self.ratio = ratio


class InvalidQueryError(LoopedError, ValueError):
    """The query scalar alpha is zero."""

    pass


class UnderdeterminedError(LoopedError, ValueError):
    """Fewer in-context examples than features (n <= d)."""

    pass


class ScheduleMismatchError(LoopedError, ValueError):
    """A bound was requested for a step schedule it does not cover."""

    pass


class HypothesisViolationError(LoopedError, ValueError):
    """The inputs violate a hypothesis of the bound being checked."""

    pass


class BoundViolationError(LoopedError, AssertionError):
    """An emitted empirical error exceeds its theoretical bound."""

    pass


__all__ = [
    "LoopedError",
    "DimensionError",
    "NonFiniteError",
    "SymmetryError",
    "ConvergenceError",
    "SingularMatrixError",
    "InvalidQueryError",
    "UnderdeterminedError",
    "ScheduleMismatchError",
    "HypothesisViolationError",
    "BoundViolationError",
]
