"""Gaussian random projection from d dimensions down to m.

Matrix entries are standard normals produced by an explicit Box-Muller
transform over a counter-based Philox stream keyed by (seed, row), so any
entry is reproducible in isolation, independent of generation order. The
same seed therefore rebuilds the same matrix bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Dataset

__all__ = [
    "ProjectionMatrix",
    "ProjectedDataset",
    "make_projection_matrix",
    "optimized_dimension",
    "project",
    "project_dataset",
    "project_many",
]

_MASK64 = (1 << 64) - 1


def _gaussian_row(seed: int, row: int, d: int) -> np.ndarray:
    key = np.array([seed & _MASK64, row], dtype=np.uint64)
    gen = np.random.Generator(np.random.Philox(key=key))
    pairs = (d + 1) // 2
    u = gen.random((2, pairs))
    # u[0] in [0, 1) -> 1 - u[0] in (0, 1], keeping the log argument positive.
    radius = np.sqrt(-2.0 * np.log1p(-u[0]))
    angle = (2.0 * np.pi) * u[1]
    z = np.empty(2 * pairs)
    z[0::2] = radius * np.cos(angle)
    z[1::2] = radius * np.sin(angle)
    return z[:d]


@dataclass(frozen=True)
class ProjectionMatrix:
    """m x d matrix of i.i.d. standard-normal entries, keyed by a seed."""

    rows: np.ndarray
    seed: int

    @property
    def m(self) -> int:
        return self.rows.shape[0]

    @property
    def d(self) -> int:
        return self.rows.shape[1]


@dataclass(frozen=True)
class ProjectedDataset:
    """The m-dimensional images of a dataset under one projection matrix."""

    points: np.ndarray
    matrix_seed: int

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def m(self) -> int:
        return self.points.shape[1]


def make_projection_matrix(d: int, m: int, seed: int) -> ProjectionMatrix:
    """Build the m x d Gaussian matrix for ``seed``; same seed, same matrix."""
    if d < 1 or m < 1:
        raise ValueError("both dimensions must be >= 1")
    rows = np.vstack([_gaussian_row(seed, i, d) for i in range(m)])
    rows.setflags(write=False)
    return ProjectionMatrix(rows=rows, seed=seed)


def project(matrix: ProjectionMatrix, point) -> np.ndarray:
    """Map one d-vector to its m-dimensional image (one dot per row)."""
    p = np.asarray(point, dtype=np.float64)
    if p.ndim != 1 or p.shape[0] != matrix.d:
        raise ValueError(f"point dimension {p.shape} does not match matrix d={matrix.d}")
    return matrix.rows @ p


def project_many(matrix: ProjectionMatrix, points) -> np.ndarray:
    """Project each row of an (n, d) array.

    Done point-by-point so each row is bit-identical to ``project`` on
    that point (a blocked matmul may round differently).
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != matrix.d:
        raise ValueError(f"points shape {pts.shape} does not match matrix d={matrix.d}")
    out = np.empty((pts.shape[0], matrix.m))
    for i in range(pts.shape[0]):
        out[i] = matrix.rows @ pts[i]
    return out


def project_dataset(matrix: ProjectionMatrix, dataset: Dataset) -> ProjectedDataset:
    pts = project_many(matrix, dataset.points)
    pts.setflags(write=False)
    return ProjectedDataset(points=pts, matrix_seed=matrix.seed)


def optimized_dimension(n: int) -> int:
    """Projected dimension minimizing group-scan cost 2^m (m+1) + n / 2^m.

    The argmin is searched over m in [1, 30]; ties break toward the
    smaller m (cheaper codes).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    best_m = 1
    best_cost = float("inf")
    for m in range(1, 31):
        cost = 2.0**m * (m + 1) + n / 2.0**m
        if cost < best_cost:
            best_cost = cost
            best_m = m
    return best_m
