class BomberError(Exception):
    """Base class for errors raised by this package."""


class DomainError(BomberError, ValueError):
    """An argument lies outside the domain of the function."""


class ConfigurationError(BomberError, ValueError):
    """A solver, grid or simulation configuration cannot be used."""
