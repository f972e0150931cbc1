"""Exception types shared across the package."""

from __future__ import annotations


class MinigraphError(Exception):
    """Base class for all package errors."""


class UsageError(MinigraphError, ValueError):
    """Invalid call: wrong model, dimension, argument range or precondition."""


class DomainError(MinigraphError, ValueError):
    """Argument outside the mathematical domain of a function."""


class NoSolutionError(MinigraphError, ValueError):
    """An inverse lookup has no solution (value at or above the supremum)."""


class DegenerateInputError(UsageError):
    """Geometric input is degenerate (e.g. dependent polyhedron vertices)."""


class UnsupportedDomainError(UsageError):
    """Domain cannot be rasterized (touches the ideal boundary)."""


class ResolutionError(UsageError):
    """Grid too coarse for the domain."""


class ClassificationError(MinigraphError, RuntimeError):
    """A stencil reached an exterior node."""


class SolverFailure(MinigraphError, RuntimeError):
    """Nonlinear solve did not converge.

    Carries the last residual norm, the largest gradient seen on the last
    iterate and the per-iteration residual history.
    """

    def __init__(self, message, residual_norm, max_gradient, history=(), field=None):
        super().__init__(message)
        self.residual_norm = float(residual_norm)
        self.max_gradient = float(max_gradient)
        self.history = list(history)
        self.field = field


class ConsistencyError(MinigraphError, RuntimeError):
    """Internal consistency check failed (e.g. cap-sweep monotonicity)."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class NonConvergenceError(MinigraphError, RuntimeError):
    """Cap sweep Cauchy differences stopped decreasing."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
