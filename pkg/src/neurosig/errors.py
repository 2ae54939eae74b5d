"""Exception types shared across the package."""


class NeurosigError(Exception):
    """Base class for all library errors."""


class TruncatedStreamError(NeurosigError):
    """A bit source ran out of data before the requested read completed."""


class CorruptStreamError(NeurosigError):
    """Decoded data violates an invariant (bad symbol, out-of-range sample)."""


class FormatError(NeurosigError):
    """A container or file failed structural validation."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset
