"""Byte-addressed page store with per-query distinct-page accounting.

The store is a read-only blob split into fixed-size pages. Every read
reports the pages it touched to a query-local tally (distinct pages per
query) and bumps a monotone per-store fetch counter. There is no cache in
the counting path, so repeated identical queries produce identical
tallies.
"""

from __future__ import annotations

__all__ = ["PageStore", "PageTally"]


class PageTally:
    """Query-local set of distinct (store, page) fetches."""

    def __init__(self):
        self._pages: set[tuple[str, int]] = set()

    def record(self, tag: str, page_no: int) -> None:
        self._pages.add((tag, page_no))

    @property
    def pages(self) -> int:
        return len(self._pages)

    def page_set(self) -> frozenset[tuple[str, int]]:
        return frozenset(self._pages)


class PageStore:
    """Read-only paged blob; reads may span pages but never exceed the blob."""

    def __init__(self, data: bytes, page_size: int, tag: str):
        if page_size < 1:
            raise ValueError("page size must be positive")
        self.data = bytes(data)
        self.page_size = page_size
        self.tag = tag
        self.access_count = 0  # monotone: counts every page fetch, not distinct

    @property
    def n_pages(self) -> int:
        return (len(self.data) + self.page_size - 1) // self.page_size

    def read(self, offset: int, nbytes: int, tally: PageTally | None = None) -> bytes:
        if nbytes < 1 or offset < 0 or offset + nbytes > len(self.data):
            raise ValueError("read outside store bounds")
        first = offset // self.page_size
        last = (offset + nbytes - 1) // self.page_size
        self.access_count += last - first + 1
        if tally is not None:
            for page in range(first, last + 1):
                tally.record(self.tag, page)
        return self.data[offset : offset + nbytes]
