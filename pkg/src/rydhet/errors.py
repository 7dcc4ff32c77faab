"""Exception hierarchy shared by all rydhet modules."""


class RydhetError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(RydhetError, ValueError):
    """A scenario failed validation.

    ``issues`` holds ``(field_path, message)`` pairs, one per violated
    invariant, so callers can report all problems at once.
    """

    def __init__(self, issues):
        self.issues = list(issues)
        text = "; ".join(f"{path}: {msg}" for path, msg in self.issues)
        super().__init__(text or "invalid configuration")


class DomainError(RydhetError, ValueError):
    """An argument lies outside the domain of a physical model."""


class DegenerateKernelError(RydhetError, ArithmeticError):
    """The Liouvillian has no unique steady state (e.g. all decay rates zero)."""


class SingularEliminationError(RydhetError, ZeroDivisionError):
    """A closed-form approximation hit a pole (e.g. Delta_p == Delta_c)."""


class QuadratureError(RydhetError, ArithmeticError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class FitPreconditionError(RydhetError, ValueError):
    """The spectrum handed to the peak fitter has no dominant peak."""
