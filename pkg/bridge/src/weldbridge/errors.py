"""Exception hierarchy; exit codes mirror the consumer package."""


class BridgeError(Exception):
    """Base class; the CLI maps exit_code to the process exit status."""

    exit_code = 1


class ConfigError(BridgeError):
    """Invalid flags or an invalid flag combination."""

    exit_code = 2


class DecodeError(BridgeError):
    """The input video is missing, unreadable, or malformed."""

    exit_code = 3


class BackboneError(BridgeError):
    """The requested encoder backbone cannot run or misbehaved."""

    exit_code = 4
