"""Exception types shared across the package."""


class HamlinError(Exception):
    """Base class for every error raised by this package."""


class ParseError(HamlinError):
    """Expression source text failed to parse."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.message = message
        self.position = position


class EvalDomainError(HamlinError):
    """Evaluation hit a point outside an expression's domain.

    Carries the offending subexpression so callers can report which factor
    (e.g. a denominator or a fractional power) failed.
    """

    def __init__(self, message: str, subexpression: str | None = None):
        if subexpression:
            super().__init__(f"{message} in '{subexpression}'")
        else:
            super().__init__(message)
        self.subexpression = subexpression


class UnboundParameterError(HamlinError):
    """An expression references a parameter with no bound value."""


class SystemDocumentError(HamlinError):
    """A system document violates the schema or fails to parse."""

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class DomainSetError(HamlinError):
    """A point lies outside the domain set an operation requires."""


class IntegrationError(HamlinError):
    """Invalid integrator configuration or immediate integration failure."""
