"""Stopping rules for c-approximate maximum inner product search.

``condition_a`` is the deterministic rule: once the running best inner
product is large enough against the largest point norm, a c-approximate
answer is already among the candidates. ``condition_b`` is the
probabilistic rule: the chi-square CDF of the projected distance over the
remaining slack certifies the same with probability at least p.
``test_a`` and ``extended_radius`` support the sign-code probe that
replaces incremental scanning with a single range search.

All functions are pure; evaluation order is A before B, so B may assume
the slack denominator is positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chi2 import chi_square_cdf, chi_square_inv_cdf
from .core import ContractViolationError

__all__ = [
    "QueryContext",
    "condition_a",
    "condition_b",
    "extended_radius",
    "stop_slack",
    "test_a",
]


@dataclass(frozen=True)
class QueryContext:
    """Per-query constants shared by the stopping rules.

    ``pq`` must be the projection of ``q`` under the same matrix that
    produced the index; ``matrix_seed`` lets engines verify that.
    """

    q: np.ndarray
    pq: np.ndarray
    sq_norm_q: float
    l1_norm_q: float
    c: float
    p: float
    k: int
    max_sq_norm: float
    m: int
    matrix_seed: int | None = None

    def __post_init__(self):
        if not 0.0 < self.c < 1.0:
            raise ValueError("approximation ratio c must lie in (0, 1)")
        if not 0.0 < self.p < 1.0:
            raise ValueError("guaranteed probability p must lie in (0, 1)")
        if self.k < 1:
            raise ValueError("k must be >= 1")


def stop_slack(ctx: QueryContext, ip: float) -> float:
    """max_sq_norm + |q|^2 - 2*ip/c; non-positive means a sure hit."""
    return ctx.max_sq_norm + ctx.sq_norm_q - 2.0 * ip / ctx.c


def condition_a(ctx: QueryContext, ip: float) -> bool:
    """Deterministic stop: the candidate inner product is provably enough.

    ``ip`` is the inner product under test (the running k-th best when
    k > 1).
    """
    return stop_slack(ctx, ip) <= 0.0


def condition_b(ctx: QueryContext, proj_dist_sq: float, ip_max: float) -> bool:
    """Probabilistic stop at confidence p.

    ``proj_dist_sq`` is the squared projected distance reached by the
    scan; ``ip_max`` the running best (k-th best) inner product. The
    caller must have applied condition_a first, so the slack is positive.
    """
    denom = stop_slack(ctx, ip_max)
    if denom <= 0.0:
        raise ContractViolationError(
            "condition_b called with non-positive slack; apply condition_a first"
        )
    return chi_square_cdf(ctx.m, proj_dist_sq / denom) >= ctx.p


def test_a(ctx: QueryContext, lb: float, min_l1: float) -> bool:
    """Group-level probe test from a distance lower bound and 1-norms.

    True when the group's first member is likely (at confidence p) to
    satisfy the probabilistic stop. A zero combined 1-norm means both
    points sit at the origin; the ratio is treated as +inf.
    """
    denom = min_l1 + ctx.l1_norm_q
    if denom == 0.0:
        return True
    ratio = (lb * lb) / (ctx.c * denom * denom)
    return chi_square_cdf(ctx.m, ratio) >= ctx.p


def extended_radius(ctx: QueryContext, ip_max: float) -> float:
    """Compensation radius restoring the probability guarantee.

    Used when a probe-determined range was exhausted without the
    probabilistic stop holding; searching out to this radius makes it
    hold by construction.
    """
    denom = stop_slack(ctx, ip_max)
    if denom <= 0.0:
        raise ContractViolationError(
            "extended_radius called with non-positive slack; condition_a already holds"
        )
    return math.sqrt(chi_square_inv_cdf(ctx.m, ctx.p) * denom)
