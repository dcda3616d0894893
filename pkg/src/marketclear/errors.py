"""Exception types raised by the solvers and model constructors."""

from __future__ import annotations


class SolverError(Exception):
    """Base class for all solver-level failures."""


class NonFiniteResidual(SolverError):
    """A residual or coordinate update evaluated to NaN or +/-inf."""


class ResponsivenessViolation(SolverError):
    """A coordinate residual never changes sign: no root can be bracketed."""


class MaxSweepsExceeded(SolverError):
    """The sweep budget ran out before the convergence criterion was met.

    Carries the trace accumulated so far in ``trace``.
    """

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace


class IrreducibilityViolation(SolverError):
    """The nonnegative matrix is reducible; no strictly positive eigenvector."""


class UnsupportedFrontier(SolverError):
    """The operation is undefined for this frontier variant."""


class InstanceTooLarge(SolverError):
    """The instance exceeds a size guard for exhaustive enumeration."""


class MaxRoundsExceeded(SolverError):
    """An iterative matching algorithm ran out of rounds.

    Carries the per-round trace accumulated so far in ``trace``.
    """

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace


class InternalError(SolverError):
    """An internal consistency check failed; indicates a bug, not bad input."""
