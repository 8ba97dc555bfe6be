"""Exception hierarchy shared by all modules."""


class OrliczFBError(Exception):
    """Base class for package errors."""


class DomainError(OrliczFBError, ValueError):
    """Argument outside the domain of a function (negative t, point outside the box)."""


class DegenerateBallError(OrliczFBError, ValueError):
    """A ball contains no grid node."""


class DegenerateNormalizerError(OrliczFBError, ValueError):
    """Blow-up normalizer phi(x0, sigma) vanished."""


class PreconditionError(OrliczFBError, ValueError):
    """An estimate or solver precondition does not hold."""


class RegularizationError(OrliczFBError, RuntimeError):
    """The regularized integrand failed its a-posteriori verification."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ExpressionError(OrliczFBError, ValueError):
    """Parse or evaluation error in a coefficient expression."""

    def __init__(self, message, position=None):
        if position is not None:
            message = f"{message} (at column {position})"
        super().__init__(message)
        self.position = position


class ConfigError(OrliczFBError, ValueError):
    """Invalid experiment configuration."""
