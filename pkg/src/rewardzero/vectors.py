"""Embedding vector container with validation and one normalization point."""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .errors import ZeroVectorError

#: Norms below this are treated as zero; such vectors indicate a broken provider.
ZERO_NORM_EPS = 1e-12

#: Tolerance for the unit-norm invariant after normalization.
UNIT_NORM_TOL = 1e-6


class EmbeddingVector:
    """A finite, nonempty 1-D real vector of fixed dimension.

    Values are stored as float64. Construction rejects NaN/Inf; direction
    is only meaningful after ``normalized()``, which is the single place
    embeddings get L2-normalized on ingestion.
    """

    __slots__ = ("values",)

    def __init__(self, values: Iterable[float] | np.ndarray):
        arr = np.ascontiguousarray(values, dtype=np.float64)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError(f"embedding must be a nonempty 1-D sequence, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("embedding contains NaN or Inf")
        self.values = arr

    @property
    def dim(self) -> int:
        return int(self.values.size)

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def normalized(self) -> "EmbeddingVector":
        """Return the unit-norm copy of this vector.

        Raises ZeroVectorError below ZERO_NORM_EPS rather than fabricating
        a direction.
        """
        n = self.norm()
        if n < ZERO_NORM_EPS:
            raise ZeroVectorError(f"cannot normalize vector with norm {n:.3e}")
        return EmbeddingVector(self.values / n)

    def is_unit(self, tol: float = UNIT_NORM_TOL) -> bool:
        return abs(self.norm() - 1.0) <= tol

    def __len__(self) -> int:
        return self.dim

    def __repr__(self) -> str:
        head = ", ".join(f"{v:.4g}" for v in self.values[:4])
        tail = ", ..." if self.dim > 4 else ""
        return f"EmbeddingVector(dim={self.dim}, [{head}{tail}])"
