"""Exception hierarchy shared by the library, the CLI and the MCP server.

Every error carries an ``exit_code`` used by the CLI: ``2`` for bad input or
configuration, ``3`` for numerical failures.
"""

from __future__ import annotations


class TemVideoError(Exception):
    """Base class for all tem-video errors."""

    exit_code: int = 3


# ---------------------------------------------------------------------------
# Parse / configuration errors (exit code 2)
# ---------------------------------------------------------------------------


class ParseError(TemVideoError, ValueError):
    """A file or flag could not be parsed."""

    exit_code = 2

    def __init__(self, message: str, *, source: str | None = None, line: int | None = None) -> None:
        location = ""
        if source is not None:
            location = source if line is None else f"{source}:{line}"
            location += ": "
        super().__init__(f"{location}{message}")
        self.source = source
        self.line = line


class ConfigError(TemVideoError, ValueError):
    """An environment variable or sweep configuration is invalid."""

    exit_code = 2


class EvenDimensionError(TemVideoError, ValueError):
    """A frame cube has an even number of samples along some axis."""

    exit_code = 2


class NonFiniteError(TemVideoError, ValueError):
    """Input contains NaN or infinite values."""

    exit_code = 2


class OutOfRangeError(TemVideoError, IndexError):
    """A frequency or linear index lies outside its valid range."""

    exit_code = 2


class ShapeMismatchError(TemVideoError, ValueError):
    """Arrays or lists that must agree in shape or length do not."""

    exit_code = 2


class WindowEmptyError(TemVideoError, ValueError):
    """An observation window has ``end <= start``."""

    exit_code = 2


# ---------------------------------------------------------------------------
# Numerical errors (exit code 3)
# ---------------------------------------------------------------------------


class NonSpikingInputError(TemVideoError, ValueError):
    """The bias does not keep ``y(t) + beta`` strictly positive."""

    def __init__(self, message: str, *, sensor_id: int | None = None) -> None:
        if sensor_id is not None:
            message = f"sensor {sensor_id}: {message}"
        super().__init__(message)
        self.sensor_id = sensor_id


class DegenerateIntervalError(TemVideoError, ValueError):
    """An integration interval has ``t1 <= t0``."""


class InsufficientDataError(TemVideoError):
    """A linear system has no rows to solve."""


class DivisionByZeroError(TemVideoError, ZeroDivisionError):
    """A relative error was requested against an all-zero reference."""


class NotHermitianError(TemVideoError, ValueError):
    """Coefficients flagged as real lack conjugate symmetry."""


class InvalidSpikeTrainError(TemVideoError, ValueError):
    """Spike times are not strictly increasing or leave their window."""
