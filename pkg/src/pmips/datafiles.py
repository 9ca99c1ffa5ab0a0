"""Dataset file readers and writers.

Two formats: ``fvecs`` (repeated records of a little-endian int32
dimension followed by that many float32 values, widened to float64 on
read) and ``csv`` (one vector per line, comma-separated decimals). All
records in a file must share one dimension and be finite; violations
raise FormatError naming the offending record.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .core import Dataset, FormatError

__all__ = [
    "ingest",
    "read_csv_vectors",
    "read_fvecs",
    "write_csv_vectors",
    "write_fvecs",
]


def read_fvecs(path) -> np.ndarray:
    data = Path(path).read_bytes()
    vecs = []
    offset = 0
    dim = None
    record = 0
    while offset < len(data):
        if offset + 4 > len(data):
            raise FormatError(f"record {record}: truncated dimension header")
        (d,) = struct.unpack_from("<i", data, offset)
        if d <= 0:
            raise FormatError(f"record {record}: non-positive dimension {d}")
        if dim is None:
            dim = d
        elif d != dim:
            raise FormatError(f"record {record}: dimension {d} != {dim}")
        end = offset + 4 + 4 * d
        if end > len(data):
            raise FormatError(f"record {record}: truncated payload")
        vecs.append(np.frombuffer(data, dtype="<f4", count=d, offset=offset + 4))
        offset = end
        record += 1
    if not vecs:
        raise FormatError("empty fvecs file")
    out = np.vstack(vecs).astype(np.float64)
    _check_finite(out)
    return out


def read_csv_vectors(path) -> np.ndarray:
    rows = []
    dim = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                values = [float(tok) for tok in line.split(",")]
            except ValueError as exc:
                raise FormatError(f"line {lineno}: {exc}") from exc
            if dim is None:
                dim = len(values)
            elif len(values) != dim:
                raise FormatError(f"line {lineno}: dimension {len(values)} != {dim}")
            rows.append(values)
    if not rows:
        raise FormatError("empty csv file")
    out = np.asarray(rows, dtype=np.float64)
    _check_finite(out)
    return out


def _check_finite(points: np.ndarray) -> None:
    finite = np.isfinite(points).all(axis=1)
    if not finite.all():
        bad = int(np.flatnonzero(~finite)[0])
        raise FormatError(f"record {bad}: non-finite value")


def write_fvecs(path, points) -> None:
    """Write float32 fvecs records (narrowing from float64)."""
    pts = np.asarray(points, dtype=np.float32)
    with open(path, "wb") as fh:
        header = struct.pack("<i", pts.shape[1])
        for row in pts:
            fh.write(header)
            fh.write(row.astype("<f4").tobytes())


def write_csv_vectors(path, points) -> None:
    pts = np.asarray(points, dtype=np.float64)
    with open(path, "w", encoding="utf-8") as fh:
        for row in pts:
            fh.write(",".join(repr(float(x)) for x in row))
            fh.write("\n")


def ingest(path, fmt: str) -> Dataset:
    """Load a dataset file into memory as float64."""
    if fmt == "fvecs":
        return Dataset.from_points(read_fvecs(path))
    if fmt == "csv":
        return Dataset.from_points(read_csv_vectors(path))
    raise ValueError(f"unknown dataset format: {fmt!r}")
