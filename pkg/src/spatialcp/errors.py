"""Exception hierarchy.

The CLI maps :class:`InputError` and :class:`ConfigError` to exit code 2 and
:class:`CalibrationError` to exit code 3.
"""


class SpatialCPError(Exception):
    """Base class for all package errors."""


class InputError(SpatialCPError):
    """Malformed or unusable input data."""


class ParseError(InputError):
    """A CSV file could not be parsed into a numeric grid."""

    def __init__(self, message: str, row: int | None = None, col: int | None = None):
        super().__init__(message)
        self.row = row
        self.col = col


class InputTooSmallError(InputError):
    """Fewer observations than any test can use."""


class DegenerateDataError(InputError):
    """A coordinate has zero spread, so it cannot be standardized."""

    def __init__(self, message: str, coordinate: int | None = None):
        super().__init__(message)
        self.coordinate = coordinate


class ConfigError(SpatialCPError):
    """A configuration value is invalid for the given sample size."""


class WindowEmptyError(ConfigError):
    """The boundary-removed scan window contains no candidate split."""


class TrimTooSmallError(ConfigError):
    """The trimmed end segments hold fewer than two observations."""


class CalibrationError(SpatialCPError):
    """An asymptotic null calibration is undefined for these inputs."""


class NuisanceError(SpatialCPError):
    """A nuisance estimate is unusable (for example a nonpositive trace estimate)."""
