"""Query engines: exact scan, incremental stop-rule search, probe-ranged search.

``mip_search_i`` drains the incremental nearest-neighbour stream in the
projected space, testing the deterministic rule then the probabilistic one
after every candidate. ``mip_search_ii`` instead fixes a radius up front
with the sign-code probe, runs one range search, and widens to the
compensation radius only if the probabilistic rule fails at the end.
Both verify candidates against original vectors fetched through the
page-counted sidecar store, each id at most once per query.
"""

from __future__ import annotations

import bisect
import time
from dataclasses import dataclass, field

import numpy as np

from .codegroups import quick_probe
from .conditions import QueryContext, condition_a, condition_b, extended_radius
from .core import Dataset, inner_product
from .index import IDistanceIndex
from .storage import PageTally

__all__ = [
    "QueryResult",
    "brute_force_mip",
    "make_query_context",
    "mip_search_i",
    "mip_search_ii",
]


@dataclass
class QueryResult:
    """Top-k ids with inner products (descending) plus run accounting."""

    ids: list[int]
    inner_products: list[float]
    pages: int = 0
    candidates: int = 0
    cpu_us: float = 0.0
    total_us: float = 0.0
    termination: str = "exhausted"


class _TopK:
    """Running top-k by (inner product desc, id asc)."""

    def __init__(self, k: int):
        self.k = k
        self._entries: list[tuple[float, int]] = []  # sorted by (-ip, id)

    def add(self, ip: float, point_id: int) -> bool:
        """Insert; True when the k-th best value became defined or rose."""
        entry = (-ip, point_id)
        if len(self._entries) < self.k:
            bisect.insort(self._entries, entry)
            return len(self._entries) == self.k
        if entry >= self._entries[-1]:
            return False
        old_kth = self._entries[-1][0]
        bisect.insort(self._entries, entry)
        self._entries.pop()
        return self._entries[-1][0] < old_kth

    @property
    def full(self) -> bool:
        return len(self._entries) == self.k

    @property
    def kth_ip(self) -> float:
        return -self._entries[-1][0]

    def ids(self) -> list[int]:
        return [e[1] for e in self._entries]

    def inner_products(self) -> list[float]:
        return [-e[0] for e in self._entries]


def brute_force_mip(dataset: Dataset, q, k: int) -> QueryResult:
    """Exact top-k inner products by full scan (ascending id breaks ties)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    q = np.asarray(q, dtype=np.float64)
    if q.shape != (dataset.d,):
        raise ValueError(f"query dimension {q.shape} does not match dataset d={dataset.d}")
    t0 = time.perf_counter()
    c0 = time.process_time()
    ips = dataset.points @ q
    k_eff = min(k, dataset.n)
    order = np.lexsort((np.arange(dataset.n), -ips))[:k_eff]
    return QueryResult(
        ids=[int(i) for i in order],
        inner_products=[float(ips[i]) for i in order],
        pages=0,
        candidates=dataset.n,
        cpu_us=(time.process_time() - c0) * 1e6,
        total_us=(time.perf_counter() - t0) * 1e6,
        termination="exhausted",
    )


def make_query_context(index: IDistanceIndex, q, c: float, p: float, k: int) -> QueryContext:
    """Project ``q`` with the index's matrix and bundle the query constants."""
    q = np.asarray(q, dtype=np.float64)
    if q.shape != (index.d,):
        raise ValueError(f"query dimension {q.shape} does not match index d={index.d}")
    pq = index.matrix.rows @ q
    return QueryContext(
        q=q,
        pq=pq,
        sq_norm_q=float(np.dot(q, q)),
        l1_norm_q=float(np.abs(q).sum()),
        c=c,
        p=p,
        k=k,
        max_sq_norm=index.norms.max_sq_l2,
        m=index.m,
        matrix_seed=index.matrix.seed,
    )


def _check_context(index: IDistanceIndex, ctx: QueryContext) -> None:
    if ctx.m != index.m or ctx.matrix_seed != index.matrix.seed:
        raise ValueError("query context was built against a different projection")


def mip_search_i(index: IDistanceIndex, ctx: QueryContext) -> QueryResult:
    """Incremental scan with per-candidate stopping rules.

    Candidates arrive in ascending projected distance; after each, the
    deterministic rule then the probabilistic one is evaluated on the
    current k-th best inner product (rules wait until k candidates exist).
    """
    _check_context(index, ctx)
    t0 = time.perf_counter()
    c0 = time.process_time()
    tally = PageTally()
    topk = _TopK(min(ctx.k, index.n))
    seen = 0
    reason = "exhausted"
    for point_id, dist, offset in index.incremental_nn(ctx.pq, tally):
        vec = index.fetch_original(offset, tally)
        topk.add(float(np.dot(vec, ctx.q)), point_id)
        seen += 1
        if topk.full:
            kth = topk.kth_ip
            if condition_a(ctx, kth):
                reason = "condition A"
                break
            if condition_b(ctx, dist * dist, kth):
                reason = "condition B"
                break
    return QueryResult(
        ids=topk.ids(),
        inner_products=topk.inner_products(),
        pages=tally.pages,
        candidates=seen,
        cpu_us=(time.process_time() - c0) * 1e6,
        total_us=(time.perf_counter() - t0) * 1e6,
        termination=reason,
    )


def mip_search_ii(index: IDistanceIndex, ctx: QueryContext) -> QueryResult:
    """Probe-ranged search with compensation.

    One range search at the probe radius (deterministic rule checked only
    when the k-th best improves); at exhaustion the probabilistic rule is
    checked once with the searched radius, and on failure the search
    continues over the annulus up to the compensation radius, which makes
    the rule hold by construction.
    """
    _check_context(index, ctx)
    t0 = time.perf_counter()
    c0 = time.process_time()
    tally = PageTally()
    n = index.n
    topk = _TopK(min(ctx.k, n))
    visited = np.zeros(n, dtype=bool)
    seen = 0

    probe_id, r = quick_probe(index.groups, ctx, index.projected_view(tally))

    def scan(radius: float) -> str | None:
        nonlocal seen
        for point_id, _dist, offset in index.range_search(ctx.pq, radius, tally):
            if visited[point_id]:
                continue
            visited[point_id] = True
            seen += 1
            vec = index.fetch_original(offset, tally)
            if topk.add(float(np.dot(vec, ctx.q)), point_id):
                if condition_a(ctx, topk.kth_ip):
                    return "condition A"
        return None

    reason = scan(r)
    # Degenerate ranges may hold fewer than k points; widen until the k-th
    # best exists (the rules are undefined before that).
    while reason is None and not topk.full and seen < n:
        r *= 2.0
        reason = scan(r)
    if reason is None:
        if seen >= n:
            reason = "exhausted"
        elif condition_b(ctx, r * r, topk.kth_ip):
            reason = "condition B"
        else:
            r_prime = extended_radius(ctx, topk.kth_ip)
            reason = scan(r_prime) or "r'-expanded"
    return QueryResult(
        ids=topk.ids(),
        inner_products=topk.inner_products(),
        pages=tally.pages,
        candidates=seen,
        cpu_us=(time.process_time() - c0) * 1e6,
        total_us=(time.perf_counter() - t0) * 1e6,
        termination=reason,
    )
