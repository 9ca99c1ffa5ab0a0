"""Partitioned distance-key index over the projected space.

Build pipeline: k-means partitions the projected points; each partition is
sliced into equal-width distance rings around its centroid, every ring
keyed into a single ordered key map; the points under one key are split
again by k-means into sub-partitions whose records are laid out
contiguously on fixed-size pages. Range search walks partitions, key
ranges and sub-partitions by sphere-intersection tests and only then
touches pages, post-filtering on exact projected distance.

Record layout (little-endian, never spanning a page):
    id u32 | m x f64 projected coordinates | u64 offset of the original
                                             vector in the sidecar store
The sidecar store holds the original d-dimensional vectors in id order, so
candidate verification I/O is page-counted too.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .codegroups import CodeGroups, build_code_groups
from .core import Dataset, FormatError, NormTable
from .projection import ProjectedDataset, ProjectionMatrix, make_projection_matrix
from .storage import PageStore, PageTally

__all__ = [
    "IDistanceIndex",
    "IndexConfig",
    "Partition",
    "SubPartition",
    "build_index",
    "compute_epsilon",
    "index_key",
    "key_constant",
    "kmeans",
    "load_index",
    "save_index",
]

_MAGIC = b"PMIP"
_VERSION = 1

# Conservative slack for sphere-intersection filters only; the final
# candidate test is the exact projected distance, so extra slack can only
# admit pages, never wrong results.
_FILTER_SLACK = 1e-9


def kmeans(points, k: int, seed: int, max_iter: int = 100, tol: float = 1e-6):
    """Lloyd's algorithm with D^2-weighted seeding, deterministic per seed.

    Stops after ``max_iter`` rounds or when the relative inertia change
    drops below ``tol``. Returns (centroids (k, m), assignment (n,)).
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError("kmeans needs a non-empty (n, m) point array")
    n = pts.shape[0]
    if k < 1 or k > n:
        raise ValueError(f"k={k} out of range for {n} points")

    rng = np.random.default_rng(seed)
    centers = np.empty((k, pts.shape[1]))
    centers[0] = pts[int(rng.integers(n))]
    d2 = np.sum((pts - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            # Remaining points all coincide with chosen centres; any pick
            # is equivalent, use the next index for determinism.
            centers[j] = pts[min(j, n - 1)]
        else:
            target = rng.random() * total
            pick = int(np.searchsorted(np.cumsum(d2), target, side="right"))
            pick = min(pick, n - 1)
            centers[j] = pts[pick]
        d2 = np.minimum(d2, np.sum((pts - centers[j]) ** 2, axis=1))

    prev_inertia = None
    assign = np.zeros(n, dtype=np.int64)
    for _ in range(max_iter):
        dist2 = (
            np.sum(pts * pts, axis=1)[:, None]
            - 2.0 * pts @ centers.T
            + np.sum(centers * centers, axis=1)[None, :]
        )
        assign = np.argmin(dist2, axis=1)
        inertia = float(np.maximum(dist2[np.arange(n), assign], 0.0).sum())
        for j in range(k):
            mask = assign == j
            if mask.any():
                centers[j] = pts[mask].mean(axis=0)
        if prev_inertia is not None:
            if prev_inertia == 0.0 or abs(prev_inertia - inertia) < tol * prev_inertia:
                break
        prev_inertia = inertia

    dist2 = (
        np.sum(pts * pts, axis=1)[:, None]
        - 2.0 * pts @ centers.T
        + np.sum(centers * centers, axis=1)[None, :]
    )
    assign = np.argmin(dist2, axis=1)
    return centers, assign


@dataclass(frozen=True)
class Partition:
    """A k-means cluster of projected points, with a covering radius."""

    id: int
    center: np.ndarray
    radius: float


@dataclass(frozen=True)
class SubPartition:
    """A pivot/radius sphere over a contiguous run of page records."""

    pivot: np.ndarray
    radius: float
    record_start: int
    record_count: int


@dataclass(frozen=True)
class IndexConfig:
    """Build parameters; defaults give selectivity 1/(5*40*10) = 0.0005."""

    k_p: int = 5
    n_key: int = 40
    k_sp: int = 10
    epsilon: float | None = None  # None -> mean partition radius / n_key
    page_size: int = 4096
    seed: int = 0

    def __post_init__(self):
        if self.k_p < 1 or self.n_key < 1 or self.k_sp < 1 or self.page_size < 1:
            raise ValueError("index parameters must be positive")
        if self.epsilon is not None and not self.epsilon > 0.0:
            raise ValueError("epsilon must be positive")

    @property
    def selectivity(self) -> float:
        return 1.0 / (self.k_p * self.n_key * self.k_sp)


def compute_epsilon(radii, n_key: int) -> float:
    """Ring width: mean partition radius over the per-partition key budget.

    A fully degenerate dataset (all radii zero) gets width 1 so keys stay
    well-defined.
    """
    radii = np.asarray(radii, dtype=np.float64)
    if radii.size == 0:
        raise ValueError("no partitions")
    mean = float(radii.mean())
    if mean <= 0.0:
        return 1.0
    return mean / n_key


def key_constant(n_key: int) -> int:
    """Per-partition key stride: smallest power of ten >= 10 * n_key."""
    c = 10
    while c < 10 * n_key:
        c *= 10
    return c


def index_key(partition_id: int, dist_to_ref: float, epsilon: float, c: int, n_key: int) -> int:
    """Distance-to-reference key; distances beyond the last ring clamp into it."""
    ring = int(dist_to_ref / epsilon)
    if ring > n_key - 1:
        ring = n_key - 1
    return partition_id * c + ring


@dataclass
class IDistanceIndex:
    """Immutable search structure over one projected dataset.

    Query methods are safe to call concurrently as long as each query uses
    its own ``PageTally``.
    """

    config: IndexConfig
    d: int
    m: int
    n: int
    epsilon: float
    C: int
    matrix: ProjectionMatrix
    norms: NormTable
    groups: CodeGroups
    partitions: list[Partition]
    key_map: dict[int, list[SubPartition]]
    record_of_id: np.ndarray
    record_store: PageStore
    original_store: PageStore
    record_dtype: np.dtype = field(init=False)
    records_per_page: int = field(init=False)

    def __post_init__(self):
        self.record_dtype = np.dtype(
            [("id", "<u4"), ("coords", "<f8", (self.m,)), ("offset", "<u8")]
        )
        self.records_per_page = self.config.page_size // self.record_dtype.itemsize
        if self.records_per_page < 1:
            raise ValueError("page size too small for one record")

    # -- record access ----------------------------------------------------

    def _read_records(self, start: int, count: int, tally: PageTally | None) -> np.ndarray:
        rpp = self.records_per_page
        rsize = self.record_dtype.itemsize
        chunks = []
        first_page = start // rpp
        last_page = (start + count - 1) // rpp
        for page in range(first_page, last_page + 1):
            lo = max(start, page * rpp)
            hi = min(start + count, (page + 1) * rpp)
            offset = page * self.config.page_size + (lo - page * rpp) * rsize
            chunks.append(self.record_store.read(offset, (hi - lo) * rsize, tally))
        return np.frombuffer(b"".join(chunks), dtype=self.record_dtype)

    def fetch_projected(self, point_id: int, tally: PageTally | None = None) -> np.ndarray:
        """Read one point's projected vector from its record page."""
        rec = self._read_records(int(self.record_of_id[point_id]), 1, tally)
        return rec["coords"][0].astype(np.float64)

    def fetch_original(self, offset: int, tally: PageTally | None = None) -> np.ndarray:
        """Read one original d-vector from the sidecar store at ``offset``."""
        raw = self.original_store.read(int(offset), self.d * 8, tally)
        return np.frombuffer(raw, dtype="<f8")

    def projected_view(self, tally: PageTally | None = None) -> "_ProjectedFetch":
        """Id-indexable view over projected vectors, page-counted via ``tally``."""
        return _ProjectedFetch(self, tally)

    def subpartition_member_ids(self, sp: SubPartition) -> np.ndarray:
        """Decode a sub-partition's member ids (untallied; for inspection)."""
        return self._read_records(sp.record_start, sp.record_count, None)["id"].astype(np.int64)

    # -- search ------------------------------------------------------------

    def range_search(self, pq, r: float, tally: PageTally | None = None):
        """All (id, projected distance, original offset) with distance <= r.

        Partition / ring / sub-partition filters are conservative; the
        returned set is exactly the linear-scan answer because every
        candidate is post-filtered on its true projected distance.
        """
        pq = np.asarray(pq, dtype=np.float64)
        if pq.shape != (self.m,):
            raise ValueError(f"query dimension {pq.shape} does not match m={self.m}")
        if r < 0.0:
            raise ValueError("radius must be non-negative")
        n_key = self.config.n_key
        results: list[tuple[int, float, int]] = []
        for part in self.partitions:
            dist_c = float(np.sqrt(np.sum((pq - part.center) ** 2)))
            slack = _FILTER_SLACK * (1.0 + dist_c + r)
            if dist_c - r > part.radius + slack:
                continue
            lo_val = max(0.0, dist_c - r - slack)
            hi_val = dist_c + r + slack
            lo_ring = min(int(lo_val / self.epsilon), n_key - 1)
            hi_ring = min(int(hi_val / self.epsilon), n_key - 1)
            base = part.id * self.C
            for key in range(base + lo_ring, base + hi_ring + 1):
                subs = self.key_map.get(key)
                if not subs:
                    continue
                for sp in subs:
                    pivot_dist = float(np.sqrt(np.sum((pq - sp.pivot) ** 2)))
                    if pivot_dist > sp.radius + r + slack:
                        continue
                    recs = self._read_records(sp.record_start, sp.record_count, tally)
                    coords = recs["coords"]
                    dists = np.sqrt(np.sum((coords - pq[None, :]) ** 2, axis=1))
                    hit = np.flatnonzero(dists <= r)
                    for i in hit:
                        results.append((int(recs["id"][i]), float(dists[i]), int(recs["offset"][i])))
        return results

    def incremental_nn(self, pq, tally: PageTally | None = None):
        """Yield all points once, by ascending projected distance (id ties).

        Implemented as range searches with doubling radius; every point
        found at radius r is confirmed (nothing unseen can be closer), so
        each round is emitted in full.
        """
        pq = np.asarray(pq, dtype=np.float64)
        seen = np.zeros(self.n, dtype=bool)
        emitted = 0
        r = self.epsilon
        while emitted < self.n:
            found = self.range_search(pq, r, tally)
            found.sort(key=lambda t: (t[1], t[0]))
            for point_id, dist, offset in found:
                if not seen[point_id]:
                    seen[point_id] = True
                    emitted += 1
                    yield point_id, dist, offset
            r *= 2.0


class _ProjectedFetch:
    def __init__(self, index: IDistanceIndex, tally: PageTally | None):
        self._index = index
        self._tally = tally

    def __getitem__(self, point_id: int) -> np.ndarray:
        return self._index.fetch_projected(point_id, self._tally)


def _sub_seed(seed: int, key: int) -> int:
    return (seed * 0x9E3779B9 + key) & 0x7FFFFFFF


def build_index(projected: ProjectedDataset, original: Dataset, cfg: IndexConfig) -> IDistanceIndex:
    """Build the full search structure; same inputs and seed, same bytes.

    The projection matrix is regenerated from the projected dataset's seed
    and embedded, along with the norm table and sign-code groups.
    """
    pts = projected.points
    n, m = pts.shape
    if n == 0:
        raise ValueError("cannot index an empty dataset")
    if original.n != n:
        raise ValueError("projected and original datasets cover different ids")

    matrix = make_projection_matrix(original.d, m, projected.matrix_seed)
    groups = build_code_groups(projected, original.norms)

    k_p = min(cfg.k_p, n)
    centers, assign = kmeans(pts, k_p, cfg.seed)
    dists = np.sqrt(np.sum((pts - centers[assign]) ** 2, axis=1))
    partitions = []
    radii = np.zeros(k_p)
    for i in range(k_p):
        mask = assign == i
        radii[i] = float(dists[mask].max()) if mask.any() else 0.0
        center = centers[i].copy()
        center.setflags(write=False)
        partitions.append(Partition(id=i, center=center, radius=radii[i]))

    epsilon = cfg.epsilon if cfg.epsilon is not None else compute_epsilon(radii, cfg.n_key)
    C = key_constant(cfg.n_key)

    keys = np.array(
        [index_key(int(assign[i]), float(dists[i]), epsilon, C, cfg.n_key) for i in range(n)],
        dtype=np.int64,
    )

    # Sub-partition each key's point set, then lay records out key by key,
    # sub-partition by sub-partition, so neighbours share pages.
    key_map: dict[int, list[SubPartition]] = {}
    layout: list[np.ndarray] = []
    next_record = 0
    for key in sorted(set(int(k) for k in keys)):
        ids = np.flatnonzero(keys == key)
        k_sub = min(cfg.k_sp, ids.size)
        sub_centers, sub_assign = kmeans(pts[ids], k_sub, _sub_seed(cfg.seed, key))
        subs = []
        for j in range(k_sub):
            member_ids = ids[sub_assign == j]
            if member_ids.size == 0:
                continue
            member_ids = np.sort(member_ids)
            sub_d = np.sqrt(np.sum((pts[member_ids] - sub_centers[j]) ** 2, axis=1))
            pivot = sub_centers[j].copy()
            pivot.setflags(write=False)
            subs.append(
                SubPartition(
                    pivot=pivot,
                    radius=float(sub_d.max()),
                    record_start=next_record,
                    record_count=int(member_ids.size),
                )
            )
            layout.append(member_ids)
            next_record += int(member_ids.size)
        key_map[key] = subs

    record_dtype = np.dtype([("id", "<u4"), ("coords", "<f8", (m,)), ("offset", "<u8")])
    rpp = cfg.page_size // record_dtype.itemsize
    if rpp < 1:
        raise ValueError("page size too small for one record")

    order = np.concatenate(layout)
    record_of_id = np.empty(n, dtype=np.int64)
    record_of_id[order] = np.arange(n)

    records = np.zeros(n, dtype=record_dtype)
    records["id"] = order
    records["coords"] = pts[order]
    records["offset"] = order.astype(np.uint64) * np.uint64(original.d * 8)

    n_pages = (n + rpp - 1) // rpp
    blob = bytearray(n_pages * cfg.page_size)
    rsize = record_dtype.itemsize
    for page in range(n_pages):
        lo = page * rpp
        hi = min(n, lo + rpp)
        raw = records[lo:hi].tobytes()
        start = page * cfg.page_size
        blob[start : start + len(raw)] = raw

    sidecar = np.ascontiguousarray(original.points, dtype="<f8").tobytes()

    return IDistanceIndex(
        config=cfg,
        d=original.d,
        m=m,
        n=n,
        epsilon=epsilon,
        C=C,
        matrix=matrix,
        norms=original.norms,
        groups=groups,
        partitions=partitions,
        key_map=key_map,
        record_of_id=record_of_id,
        record_store=PageStore(bytes(blob), cfg.page_size, "records"),
        original_store=PageStore(sidecar, cfg.page_size, "originals"),
    )


# -- persistence -----------------------------------------------------------

_HEADER = struct.Struct("<4sHIIIIIIdQIq")


def save_index(index: IDistanceIndex, path) -> None:
    """Serialize to a single little-endian file; rebuilds are byte-identical."""
    cfg = index.config
    out = bytearray()
    out += _HEADER.pack(
        _MAGIC,
        _VERSION,
        index.d,
        index.m,
        index.n,
        cfg.k_p,
        cfg.n_key,
        cfg.k_sp,
        index.epsilon,
        index.C,
        cfg.page_size,
        cfg.seed,
    )
    # Projection matrix (its own seed, then row-major entries).
    out += struct.pack("<q", index.matrix.seed)
    out += np.ascontiguousarray(index.matrix.rows, dtype="<f8").tobytes()
    # Norm table.
    out += np.ascontiguousarray(index.norms.sq_l2, dtype="<f8").tobytes()
    out += np.ascontiguousarray(index.norms.l1, dtype="<f8").tobytes()
    out += struct.pack("<dI", index.norms.max_sq_l2, index.norms.max_sq_l2_id)
    # Sign-code groups: code, count, then (id, l1) pairs in sorted order.
    out += struct.pack("<I", len(index.groups.groups))
    for code in sorted(index.groups.groups):
        g = index.groups.groups[code]
        out += struct.pack("<II", code, g.members.size)
        for i in range(g.members.size):
            out += struct.pack("<Id", int(g.members[i]), float(g.l1_values[i]))
    # Partition directory.
    out += struct.pack("<I", len(index.partitions))
    for part in index.partitions:
        out += np.ascontiguousarray(part.center, dtype="<f8").tobytes()
        out += struct.pack("<d", part.radius)
    # Ordered key table with sub-partition directory.
    out += struct.pack("<I", len(index.key_map))
    for key in sorted(index.key_map):
        subs = index.key_map[key]
        out += struct.pack("<qI", key, len(subs))
        for sp in subs:
            out += np.ascontiguousarray(sp.pivot, dtype="<f8").tobytes()
            out += struct.pack("<dII", sp.radius, sp.record_start, sp.record_count)
    # Id -> record slot map.
    out += np.ascontiguousarray(index.record_of_id, dtype="<u4").tobytes()
    # Page payloads.
    out += struct.pack("<Q", len(index.record_store.data))
    out += index.record_store.data
    out += struct.pack("<Q", len(index.original_store.data))
    out += index.original_store.data
    with open(path, "wb") as fh:
        fh.write(out)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, nbytes: int) -> bytes:
        if self.pos + nbytes > len(self.data):
            raise FormatError("truncated index file")
        chunk = self.data[self.pos : self.pos + nbytes]
        self.pos += nbytes
        return chunk

    def unpack(self, st: struct.Struct):
        return st.unpack(self.take(st.size))

    def floats(self, count: int) -> np.ndarray:
        return np.frombuffer(self.take(count * 8), dtype="<f8").astype(np.float64)


def load_index(path) -> IDistanceIndex:
    """Read an index file back; behaviorally identical to the saved one."""
    with open(path, "rb") as fh:
        data = fh.read()
    rd = _Reader(data)
    magic, version, d, m, n, k_p, n_key, k_sp, epsilon, C, page_size, seed = rd.unpack(_HEADER)
    if magic != _MAGIC:
        raise FormatError("bad magic bytes: not an index file")
    if version != _VERSION:
        raise FormatError(f"unsupported index version {version}")
    cfg = IndexConfig(k_p=k_p, n_key=n_key, k_sp=k_sp, epsilon=epsilon, page_size=page_size, seed=seed)

    (matrix_seed,) = rd.unpack(struct.Struct("<q"))
    rows = rd.floats(m * d).reshape(m, d)
    rows.setflags(write=False)
    matrix = ProjectionMatrix(rows=rows, seed=matrix_seed)

    sq_l2 = rd.floats(n)
    l1 = rd.floats(n)
    max_sq_l2, max_id = rd.unpack(struct.Struct("<dI"))
    norms = NormTable(sq_l2=sq_l2, l1=l1, max_sq_l2=max_sq_l2, max_sq_l2_id=max_id)

    from .codegroups import BinaryCodeGroup  # local import to avoid cycle noise

    (n_groups,) = rd.unpack(struct.Struct("<I"))
    groups: dict[int, BinaryCodeGroup] = {}
    pair = struct.Struct("<Id")
    for _ in range(n_groups):
        code, count = rd.unpack(struct.Struct("<II"))
        members = np.empty(count, dtype=np.int64)
        l1_vals = np.empty(count)
        for i in range(count):
            members[i], l1_vals[i] = pair.unpack(rd.take(pair.size))
        members.setflags(write=False)
        l1_vals.setflags(write=False)
        groups[code] = BinaryCodeGroup(code=code, members=members, l1_values=l1_vals)

    (n_parts,) = rd.unpack(struct.Struct("<I"))
    partitions = []
    for i in range(n_parts):
        center = rd.floats(m)
        center.setflags(write=False)
        (radius,) = rd.unpack(struct.Struct("<d"))
        partitions.append(Partition(id=i, center=center, radius=radius))

    (n_keys,) = rd.unpack(struct.Struct("<I"))
    key_map: dict[int, list[SubPartition]] = {}
    for _ in range(n_keys):
        key, n_subs = rd.unpack(struct.Struct("<qI"))
        subs = []
        for _ in range(n_subs):
            pivot = rd.floats(m)
            pivot.setflags(write=False)
            radius, rec_start, rec_count = rd.unpack(struct.Struct("<dII"))
            subs.append(
                SubPartition(pivot=pivot, radius=radius, record_start=rec_start, record_count=rec_count)
            )
        key_map[key] = subs

    record_of_id = np.frombuffer(rd.take(n * 4), dtype="<u4").astype(np.int64)

    (rec_bytes,) = rd.unpack(struct.Struct("<Q"))
    record_blob = rd.take(rec_bytes)
    (orig_bytes,) = rd.unpack(struct.Struct("<Q"))
    original_blob = rd.take(orig_bytes)

    return IDistanceIndex(
        config=cfg,
        d=d,
        m=m,
        n=n,
        epsilon=epsilon,
        C=C,
        matrix=matrix,
        norms=norms,
        groups=CodeGroups(groups=groups, m=m),
        partitions=partitions,
        key_map=key_map,
        record_of_id=record_of_id,
        record_store=PageStore(record_blob, page_size, "records"),
        original_store=PageStore(original_blob, page_size, "originals"),
    )
