"""Dense vector primitives and the dataset container.

Coordinates are held as 64-bit floats; narrower input is widened on
ingestion so probability computations downstream stay stable at large n.
Datasets and norm tables are immutable after construction and safe for
concurrent readers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ContractViolationError",
    "FormatError",
    "Dataset",
    "NormTable",
    "as_vector",
    "build_norm_table",
    "inner_product",
    "l2_distance",
]


class FormatError(Exception):
    """A file or byte stream does not match its declared layout."""


class ContractViolationError(Exception):
    """A caller broke an operation precondition that cannot be recovered."""


def as_vector(coords) -> np.ndarray:
    """Coerce to a finite, non-empty float64 1-D array."""
    v = np.asarray(coords, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("vector must be one-dimensional and non-empty")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector coordinates must be finite")
    return v


def inner_product(a, b) -> float:
    """Dot product of two equal-dimension vectors.

    Accumulation is delegated to the platform BLAS dot (pairwise-style,
    deterministic for a given build); it agrees with a naive left-to-right
    loop to about 1e-12 relative at double precision.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.dot(a, b))


def l2_distance(a, b) -> float:
    """Euclidean distance between two equal-dimension vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    diff = a - b
    return float(np.sqrt(np.dot(diff, diff)))


@dataclass(frozen=True)
class NormTable:
    """Per-point squared 2-norms and 1-norms plus the global maximum.

    ``max_sq_l2_id`` is the lowest id among points attaining the maximum
    squared norm, so rebuilds are deterministic.
    """

    sq_l2: np.ndarray
    l1: np.ndarray
    max_sq_l2: float
    max_sq_l2_id: int


def build_norm_table(points) -> NormTable:
    """Precompute squared 2-norms, 1-norms and the norm argmax."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError("norm table needs a non-empty (n, d) point array")
    sq = np.einsum("ij,ij->i", pts, pts)
    l1 = np.abs(pts).sum(axis=1)
    max_id = int(np.argmax(sq))  # argmax keeps the first (lowest id) on ties
    return NormTable(sq_l2=sq, l1=l1, max_sq_l2=float(sq[max_id]), max_sq_l2_id=max_id)


@dataclass(frozen=True)
class Dataset:
    """An (n, d) point collection with dense integer ids 0..n-1."""

    points: np.ndarray
    norms: NormTable

    @classmethod
    def from_points(cls, points) -> "Dataset":
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[0] == 0 or pts.shape[1] == 0:
            raise ValueError("dataset needs a non-empty (n, d) point array")
        if not np.all(np.isfinite(pts)):
            raise ValueError("dataset coordinates must be finite")
        return cls(points=pts, norms=build_norm_table(pts))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]
