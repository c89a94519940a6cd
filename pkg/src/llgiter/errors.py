"""Shared exception types."""


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


class ShapeMismatchError(ValueError):
    """Array shapes incompatible with the grid or with each other."""


class TimeResolutionError(ValueError):
    """Too few time steps for the requested stencil or norm index."""


class SnapshotFormatError(ValueError):
    """Corrupt or unrecognized field snapshot file."""


class BlowupError(RuntimeError):
    """Non-finite values or runaway growth during a computation.

    ``dump`` optionally carries the offending state for post-mortem output.
    """

    def __init__(self, message, dump=None):
        super().__init__(message)
        self.dump = dump
