"""Exception hierarchy shared by all hullspace modules.

ValidationError covers bad inputs and broken invariants (CLI exit code 1);
NumericalError covers failures of an otherwise well-posed computation
(CLI exit code 2).
"""


class HullspaceError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(HullspaceError):
    """Input or invariant violation detected before/while computing."""


class NumericalError(HullspaceError):
    """A numerical procedure failed (singular system, no convergence, ...)."""


class STLParseError(ValidationError):
    """Malformed STL content. Carries the byte offset of the defect."""

    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)


class ConvergenceError(NumericalError):
    """Iteration budget exhausted. Carries the best residual reached."""

    def __init__(self, message, best_residual=None):
        self.best_residual = best_residual
        if best_residual is not None:
            message = f"{message} (best residual {best_residual:.6e})"
        super().__init__(message)
