"""Exception hierarchy shared by the library and the CLI.

Each family maps to one CLI exit code (see cli.py): configuration
problems exit 2, data problems exit 3, numeric failures exit 4.
"""


class WeldwatchError(Exception):
    """Base class for all package-specific errors."""

    exit_code = 1


class ConfigError(WeldwatchError):
    """Invalid configuration value, file, or combination of flags."""

    exit_code = 2


class DataError(WeldwatchError):
    """Malformed or inconsistent input data (files, manifests, shapes)."""

    exit_code = 3


class ShapeError(DataError):
    """Array shape violates a layer or pipeline precondition."""


class UnsupervisedGuardError(DataError):
    """A labeled-defect sample reached a training path that must only see goods."""


class OverrunError(DataError):
    """A streaming buffer received more samples than its capacity allows."""


class NumericError(WeldwatchError):
    """Numeric failure during training or scoring (NaN/Inf, degenerate stats)."""

    exit_code = 4
