"""Exception types shared across the toolkit."""


class TtcKitError(Exception):
    """Base class for all toolkit errors."""


class DomainError(TtcKitError, ValueError):
    """An input violates a documented precondition (e.g. non-positive depth)."""


class ScaleConversionError(TtcKitError, ValueError):
    """A scale-ratio FPS conversion left the valid range (denominator <= 0)."""


class FitFailedError(TtcKitError, RuntimeError):
    """A robust fit could not find enough inliers."""


class SequenceInvalidError(TtcKitError, ValueError):
    """A sequence is missing the frames/boxes an estimator needs."""


class ManifestError(TtcKitError, ValueError):
    """On-disk dataset manifest is missing, malformed, or inconsistent."""


class TrainingDivergedError(TtcKitError, RuntimeError):
    """Training hit a non-finite loss; carries the last good checkpoint."""

    def __init__(self, message: str, epoch: int, last_checkpoint=None):
        super().__init__(message)
        self.epoch = epoch
        self.last_checkpoint = last_checkpoint
