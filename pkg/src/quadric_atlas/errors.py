"""Exception hierarchy shared by all quadric_atlas modules."""


class QuadricAtlasError(Exception):
    """Base class for all errors raised by this package."""


class InputError(QuadricAtlasError, ValueError):
    """Malformed or inconsistent input (dimension mismatch, bad parameters)."""


class PreconditionError(QuadricAtlasError):
    """A documented operation precondition does not hold."""


class NumericError(QuadricAtlasError):
    """Numerical procedure failed (non-convergence, step underflow, ...)."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = tuple(trace) if trace else ()


class InfeasibleError(QuadricAtlasError):
    """The requested value is incompatible with the form's signature."""


class RaySignError(QuadricAtlasError):
    """Cancellation coefficient has the wrong sign; caller must restart."""

    def __init__(self, c):
        super().__init__(f"cancellation coefficient must be <= 0, got {c:.6g}")
        self.c = c


class ResourceError(QuadricAtlasError):
    """A configured resource cap (net size, ...) would be exceeded."""


class NoSolutionError(QuadricAtlasError):
    """Solver exhausted its restart and fallback budget."""

    def __init__(self, message, best_residual=None, c_signs=None):
        super().__init__(message)
        self.best_residual = best_residual
        self.c_signs = tuple(c_signs) if c_signs else ()


class ClearanceError(QuadricAtlasError):
    """Could not move the solution clear of the avoid set."""


class EscalationNeeded(QuadricAtlasError):
    """Two-segment construction is not available; use the five-knot chain."""


class NoPathError(QuadricAtlasError):
    """Path construction failed at some stage."""

    def __init__(self, message, stage=None):
        super().__init__(message)
        self.stage = stage
