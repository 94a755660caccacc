"""Exception types raised across the package.

Everything derives from RewardZeroError so callers can catch the package's
failures with one except clause. The CLI maps these onto exit codes.
"""

from __future__ import annotations


class RewardZeroError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatchError(RewardZeroError):
    """Two embeddings that must share a dimension do not."""


class ZeroVectorError(RewardZeroError):
    """A vector with (near-)zero norm where a direction is required."""


class MissingPotentialError(RewardZeroError):
    """A tracker recomputation step was reached without a potential value."""


class ManifestParseError(RewardZeroError):
    """Manifest file could not be read or is not valid JSON."""


class ManifestValidationError(RewardZeroError):
    """Manifest parsed but violates the episode schema."""

    def __init__(self, message: str, episode_index: int | None = None, field: str | None = None):
        if episode_index is not None:
            message = f"episode {episode_index}: {message}"
        if field is not None:
            message = f"{message} (field: {field})"
        super().__init__(message)
        self.episode_index = episode_index
        self.field = field


class ProviderUnavailableError(RewardZeroError):
    """The embedding provider could not be reached or replied abnormally."""


class UnknownIdError(RewardZeroError):
    """A cache lookup or frame reference missed; misses are never fabricated."""


class DimensionInconsistencyError(RewardZeroError):
    """A batch of embeddings mixes dimensions."""


class DuplicateIdError(RewardZeroError):
    """An embedding id was written twice for the same kind and model tag."""


class CacheIoError(RewardZeroError):
    """Embedding cache file could not be read or written."""


class TooFewFramesError(RewardZeroError):
    """A metric needs at least two potentials."""


class LengthMismatchError(RewardZeroError):
    """Paired sequences differ in length."""


class EmptyResultsError(RewardZeroError):
    """Aggregation over an empty result list."""


class StepAfterDoneError(RewardZeroError):
    """env.step() called on a finished episode without reset()."""


class NonFiniteGradientError(RewardZeroError):
    """An optimizer update produced NaN/Inf gradients; the update was aborted."""
