"""Exception hierarchy shared across the pipeline."""


class DnapixError(Exception):
    """Base class for all pipeline errors."""


class MalformedAlphabet(DnapixError):
    """Sequence contains symbols outside {A,C,G,T} or violates length/adjacency rules."""


class CrcMismatch(DnapixError):
    """Block checksum failed; the block is corrupted."""


class NoValidSeed(DnapixError):
    """No scrambler seed in 0..255 produced a constraint-satisfying block."""


class DesignExhausted(DnapixError):
    """Reference design could not find enough orthogonal sequences within the attempt budget."""


class DuplicateEntry(DnapixError):
    """(image_id, layer) pair already registered in the dictionary."""


class NotFound(DnapixError):
    """(image_id, layer) pair missing from the dictionary."""


class NoAdapterFound(DnapixError):
    """Read contains no recognizable adapter; it cannot be segmented."""


class IrrecoverableLayer(DnapixError):
    """Layer decode failed: more erasures than the parity scheme can repair.

    ``missing`` lists the unrecoverable block indices.
    """

    def __init__(self, missing):
        self.missing = sorted(missing)
        super().__init__(f"irrecoverable layer, missing blocks {self.missing}")


class SessionStopped(DnapixError):
    """Command sent to a session that has already stopped."""


class SessionComplete(DnapixError):
    """Advance requested past the last layer."""
