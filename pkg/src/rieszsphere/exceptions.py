"""Exception types raised across the package."""
from __future__ import annotations


class InvalidArgumentError(ValueError):
    """A parameter is outside its documented domain."""


class SingularityError(ArithmeticError):
    """Two points coincide (or nearly so) where a kernel is singular."""

    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class ParseError(ValueError):
    """Malformed point-set file. ``line`` is 1-based."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConvergenceError(RuntimeError):
    """A spectral series did not converge before the hard degree cap.

    The partial sum reached is kept on ``partial``.
    """

    def __init__(self, message, partial=None, degree=None):
        super().__init__(message)
        self.partial = partial
        self.degree = degree


class StagnationError(RuntimeError):
    """Line search could not find a descent step; ``best`` holds the best iterate."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class PreconditionError(ValueError):
    """Inputs violate a structural hypothesis (e.g. caps overlap)."""


class SweepError(RuntimeError):
    """A sweep stage failed; ``n`` and ``stage`` locate the failure."""

    def __init__(self, message, n=None, stage=None):
        super().__init__(f"N={n}, stage={stage}: {message}")
        self.n = n
        self.stage = stage
