from typing import Optional


class MultipitchError(Exception):
    """Base class for all multipitch errors."""

    default_code = "multipitch_error"

    def __init__(self, detail: str, code: Optional[str] = None):
        self.detail = detail
        self.code = code or self.default_code
        super().__init__(self.__str__())

    def __str__(self):
        return f"[{self.code}] {self.detail}"


class NotFoundError(MultipitchError):
    """Raised when a track, split, table row or cache file does not exist."""

    default_code = "not_found"


class ValidationError(MultipitchError):
    """Raised when provided data or configuration is invalid."""

    default_code = "validation_error"


class ShapeError(MultipitchError):
    """Raised when an array or tensor does not have the expected shape."""

    default_code = "shape_error"


class TrackTooShortError(MultipitchError):
    """Raised when a track is too short for the requested analysis."""

    default_code = "track_too_short"


class ConflictError(MultipitchError):
    """Raised when runs or reports that must agree do not."""

    default_code = "conflict_error"


class ContainerError(MultipitchError):
    """Raised when a binary container cannot be decoded."""

    default_code = "container_error"


class NonFiniteLossError(MultipitchError):
    """Raised when the training loss becomes NaN or infinite."""

    default_code = "non_finite_loss"

    def __init__(self, epoch: int, batch: int, lr: float, code: Optional[str] = None):
        self.epoch = epoch
        self.batch = batch
        self.lr = lr
        super().__init__(
            f"Non-finite loss at epoch {epoch}, batch {batch} (lr={lr:g})", code
        )
