"""Exception taxonomy for covadapt.

Every error raised deliberately by this package derives from CovAdaptError so
callers can catch one base class at the boundary. The hierarchy is flat: each
subclass names a failure domain, not a location in the code.
"""

__all__ = [
    "CovAdaptError",
    "ConfigError",
    "DataError",
    "DegenerateError",
    "GeometryError",
    "IoError",
    "MissingColumnError",
    "NumericalError",
    "OracleError",
    "ParseError",
]


class CovAdaptError(Exception):
    """Base class for all covadapt errors."""


class GeometryError(CovAdaptError):
    """Series lengths, window counts, or index ranges do not fit together."""


class DataError(CovAdaptError):
    """Input values are unusable (non-finite, wrong dtype, empty)."""


class ConfigError(CovAdaptError):
    """A configuration value is missing, malformed, or out of range."""


class IoError(CovAdaptError):
    """A file or stream could not be read or written."""


class ParseError(CovAdaptError):
    """Structured text failed to parse.

    Carries the 1-based row and the column name when known.
    """

    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        super().__init__(message)
        self.row = row
        self.column = column


class MissingColumnError(CovAdaptError):
    """A referenced column is absent from the loaded table."""


class OracleError(CovAdaptError):
    """The base forecaster failed or returned a malformed reply."""


class NumericalError(CovAdaptError):
    """A numerical routine could not produce a trustworthy result."""


class DegenerateError(CovAdaptError):
    """A metric or statistic is undefined on the given inputs."""
