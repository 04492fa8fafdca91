"""Exception types shared across the package."""


class PathQVError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(PathQVError, ValueError):
    """An argument violates a documented precondition (off-grid point,
    mismatched levels, out-of-range index, malformed file, ...)."""


class NumericalError(PathQVError, RuntimeError):
    """A numerical procedure failed to reach its tolerance.

    Carries an optional ``trace`` (per-iteration defects or similar) so
    callers can report what happened before giving up.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace) if trace is not None else []


class FlowIntegrationError(NumericalError):
    """The adaptive ODE integrator underflowed its step size or exceeded
    its step budget."""
