"""Exception hierarchy shared across the package."""


class ComireError(Exception):
    """Base class for all package errors."""


class ConfigurationError(ComireError, ValueError):
    """Invalid model, basis or chain configuration."""


class DomainError(ComireError, ValueError):
    """An argument lies outside the domain of the operation."""


class InvariantError(ComireError, ValueError):
    """A parameter object violates one of its structural invariants."""


class NumericalError(ComireError, ArithmeticError):
    """A computation degenerated numerically (zero mass, underflow, ...)."""


class DataError(ComireError, ValueError):
    """Malformed or non-finite input data."""


class UsageError(ComireError, ValueError):
    """A caller asked for something that cannot be computed as requested."""


class DegenerateModelError(ComireError, ValueError):
    """The model state makes the requested functional undefined."""
