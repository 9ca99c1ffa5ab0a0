"""Sign-code bucketing of projected points and the range probe.

Each projected point is reduced to an m-bit code (bit i set iff coordinate
i is non-negative). Points sharing a code form a group ordered by the
1-norm of their original vectors; a per-group lower bound on projected
distance then lets ``quick_probe`` pick a single point whose projected
distance to the query serves as the range-search radius.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conditions import QueryContext, test_a
from .core import NormTable, l2_distance
from .projection import ProjectedDataset

__all__ = [
    "BinaryCodeGroup",
    "CodeGroups",
    "binary_code",
    "build_code_groups",
    "group_lower_bound",
    "group_lower_bounds",
    "quick_probe",
]


def binary_code(pp) -> int:
    """m-bit sign code of a projected point; zero coordinates count as set."""
    pp = np.asarray(pp, dtype=np.float64)
    bits = np.flatnonzero(pp >= 0.0)
    code = 0
    for i in bits:
        code |= 1 << int(i)
    return code


def _codes_for(points: np.ndarray) -> np.ndarray:
    m = points.shape[1]
    weights = (1 << np.arange(m, dtype=np.int64))
    return ((points >= 0.0).astype(np.int64) @ weights)


def group_lower_bound(code: int, pq) -> float:
    """Lower bound on the projected distance from any point with ``code`` to pq."""
    pq = np.asarray(pq, dtype=np.float64)
    return float(group_lower_bounds(np.array([code], dtype=np.int64), pq)[0])


def group_lower_bounds(codes: np.ndarray, pq: np.ndarray) -> np.ndarray:
    """Vectorized lower bounds for many codes against one projected query.

    For each code: (1/sqrt(m)) * sum over sign-disagreeing coordinates of
    |pq_i|.
    """
    m = pq.shape[0]
    q_code = binary_code(pq)
    xor = np.bitwise_xor(codes.astype(np.int64), q_code)
    bit_matrix = ((xor[:, None] >> np.arange(m)[None, :]) & 1).astype(np.float64)
    return (bit_matrix @ np.abs(pq)) / np.sqrt(m)


@dataclass(frozen=True)
class BinaryCodeGroup:
    """Point ids sharing one sign code, ordered by ascending original 1-norm."""

    code: int
    members: np.ndarray
    l1_values: np.ndarray

    @property
    def min_l1(self) -> float:
        return float(self.l1_values[0])


@dataclass(frozen=True)
class CodeGroups:
    """All non-empty sign-code groups of a projected dataset."""

    groups: dict[int, BinaryCodeGroup]
    m: int

    @property
    def codes(self) -> np.ndarray:
        return np.fromiter(self.groups.keys(), dtype=np.int64, count=len(self.groups))


def build_code_groups(projected: ProjectedDataset, norms: NormTable) -> CodeGroups:
    """Bucket points by sign code; members sorted by (1-norm, id)."""
    pts = projected.points
    if pts.shape[0] != norms.l1.shape[0]:
        raise ValueError("projected points and norm table cover different ids")
    codes = _codes_for(pts)
    groups: dict[int, BinaryCodeGroup] = {}
    for code in np.unique(codes):
        ids = np.flatnonzero(codes == code)
        l1 = norms.l1[ids]
        order = np.lexsort((ids, l1))
        members = ids[order].astype(np.int64)
        members.setflags(write=False)
        l1_sorted = l1[order]
        l1_sorted.setflags(write=False)
        groups[int(code)] = BinaryCodeGroup(code=int(code), members=members, l1_values=l1_sorted)
    return CodeGroups(groups=groups, m=pts.shape[1])


def quick_probe(groups: CodeGroups, ctx: QueryContext, projected) -> tuple[int, float]:
    """Pick the probe point fixing the range-search radius.

    Groups are scanned in ascending order of their distance lower bound
    (code value breaks ties). The first group whose head member passes
    ``test_a`` wins; if none passes, the head member with the largest
    recorded bound ratio is used instead. Only the returned point's
    projected vector is fetched (``projected[id]``), and the radius is its
    exact projected distance to the query.
    """
    if not groups.groups:
        raise ValueError("quick_probe needs at least one group")
    codes = groups.codes
    lbs = group_lower_bounds(codes, ctx.pq)
    order = np.lexsort((codes, lbs))

    chosen = -1
    best_value = 0.0
    best_id = -1
    for idx in order:
        group = groups.groups[int(codes[idx])]
        lb = float(lbs[idx])
        if test_a(ctx, lb, group.min_l1):
            chosen = int(group.members[0])
            break
        denom = group.min_l1 + ctx.l1_norm_q
        value = (lb * lb) / (ctx.c * denom * denom)
        if value >= best_value:
            best_value = value
            best_id = int(group.members[0])
    if chosen < 0:
        chosen = best_id
    return chosen, l2_distance(projected[chosen], ctx.pq)
