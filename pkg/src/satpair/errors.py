"""Exception types shared across the package.

Every error raised by satpair's own validation derives from SatpairError, so
callers can catch one base class at the CLI boundary.  Names follow the
condition they report, not the operation that raised them.
"""

from __future__ import annotations


class SatpairError(Exception):
    """Base class for all satpair errors."""


class ZeroRowError(SatpairError):
    """A row with (near-)zero Euclidean norm cannot be normalized."""

    def __init__(self, row: int):
        self.row = row
        super().__init__(f"row {row} has norm <= 1e-12 and cannot be L2-normalized")


class DimMismatchError(SatpairError):
    """Two matrices disagree on feature dimension."""


class ShapeMismatchError(SatpairError):
    """Array shapes are incompatible for the requested operation."""


class NotNormalizedError(SatpairError):
    """An operation requires row-normalized embeddings."""


class NonPositiveTemperatureError(SatpairError):
    """Softmax temperature must be strictly positive."""


class StepOutOfRangeError(SatpairError):
    """Scheduler queried outside the configured step range."""


class NaNScoreError(SatpairError):
    """A similarity score is NaN; ranking is undefined."""


class KOutOfRangeError(SatpairError):
    """Recall cutoff k must be >= 1."""


class KTooLargeError(SatpairError):
    """k exceeds the number of training points available to k-NN."""


class BadTemplateError(SatpairError):
    """Prompt template must contain the class-name placeholder exactly once."""


class LengthMismatchError(SatpairError):
    """Paired sequences have different lengths."""


class EmptyInputError(SatpairError):
    """An operation requires at least one element."""


class WindowTooLargeError(SatpairError):
    """Scan window does not fit inside the scene."""


class NoWindowsError(SatpairError):
    """An attention map needs at least one scored window."""


class WeightSumInvalidError(SatpairError):
    """Metric weights must be nonnegative and sum to 1."""


class ClassTooSmallError(SatpairError):
    """A class has too few members to split."""

    def __init__(self, label: int, count: int):
        self.label = label
        self.count = count
        super().__init__(f"class {label} has only {count} member(s); need at least 2 to split")


class InsufficientShotsError(SatpairError):
    """A class has fewer training members than the requested shot count."""

    def __init__(self, label: int, available: int, requested: int):
        self.label = label
        self.available = available
        self.requested = requested
        super().__init__(
            f"class {label} has {available} training member(s), cannot sample {requested} shots"
        )


class BadMagicError(SatpairError):
    """Embedding file does not start with the expected magic bytes."""


class TruncatedFileError(SatpairError):
    """Embedding file is shorter (or longer) than its header promises."""


class VersionUnsupportedError(SatpairError):
    """Embedding file declares a format version this reader does not know."""


class EndpointDownError(SatpairError):
    """Captioning endpoint unreachable after all retries."""


class MalformedResponseError(SatpairError):
    """Captioning endpoint answered outside its contract."""


class DuplicateKeyError(SatpairError):
    """Two manifest records share an (image_id, prompt_id) key."""

    def __init__(self, image_id: str, prompt_id: str):
        self.image_id = image_id
        self.prompt_id = prompt_id
        super().__init__(f"duplicate manifest key ({image_id!r}, {prompt_id})")


class ConvergenceWarning(UserWarning):
    """Optimizer stopped at max_iter with the gradient still above tolerance."""
