"""Exception types raised across the package."""


class TwinError(Exception):
    """Base class for all package errors."""


class WindowError(TwinError, IndexError):
    """Sample window empty or outside the record."""


class ShapeError(TwinError, ValueError):
    """Signals with mismatched sampling rate, length or alignment."""


class DegenerateSignalError(TwinError, ValueError):
    """Fundamental component too small to define a phase."""


class InsufficientDataError(TwinError, ValueError):
    """Not enough zero crossings to estimate frequency."""


class ConfigurationError(TwinError, ValueError):
    """Invalid transformer, scenario or measurement configuration."""


class TopologyError(TwinError, RuntimeError):
    """Singular nodal matrix, usually a floating subnetwork."""


class ParseError(TwinError, ValueError):
    """Malformed waveform or configuration file."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class AlignmentError(TwinError, ValueError):
    """LV and MV recordings that cannot be compared sample by sample."""
