"""Accuracy metrics for approximate top-k inner product results."""

from __future__ import annotations

from .search import QueryResult

__all__ = ["overall_ratio", "recall"]


def overall_ratio(returned: QueryResult, exact: QueryResult) -> float | None:
    """Mean rank-wise ratio of returned to exact inner products.

    Undefined (None) when any exact inner product is non-positive; such
    queries are excluded from aggregates by the caller.
    """
    if len(returned.inner_products) != len(exact.inner_products):
        raise ValueError("returned and exact results hold different k")
    if any(ip <= 0.0 for ip in exact.inner_products):
        return None
    ratios = [r / e for r, e in zip(returned.inner_products, exact.inner_products)]
    return sum(ratios) / len(ratios)


def recall(returned: QueryResult, exact: QueryResult) -> float:
    """Fraction of the exact top-k ids present in the returned top-k."""
    if len(returned.ids) != len(exact.ids):
        raise ValueError("returned and exact results hold different k")
    hits = len(set(returned.ids) & set(exact.ids))
    return hits / len(exact.ids)
