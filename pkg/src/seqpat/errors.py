"""Exception types shared across the package."""


class SeqpatError(Exception):
    """Base class for all package errors."""


class StructureError(SeqpatError, ValueError):
    """Input violates the expected shape (ragged grid, broken alternation, ...)."""


class DomainError(SeqpatError, ValueError):
    """A value falls outside its permitted domain."""


class ParseError(SeqpatError, ValueError):
    """Text could not be decoded; carries the offending position when known."""

    def __init__(self, message, row=None, col=None):
        super().__init__(message)
        self.row = row
        self.col = col


class ConfigError(SeqpatError, ValueError):
    """Invalid configuration (bad pool, unknown model kind, ...)."""


class MappingError(SeqpatError, ValueError):
    """A token is outside an alphabet's domain or image."""


class TransportError(SeqpatError, RuntimeError):
    """A remote model call failed after exhausting retries."""
