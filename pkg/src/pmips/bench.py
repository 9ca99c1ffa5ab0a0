"""Batch benchmark runner: build, query, score, report.

A run takes a dataset file, removes a seed-chosen query sample from it,
builds one index over the rest, then executes every (variant, c, p, k)
combination over the sample. Per-query rows go to one CSV per variant
(columns: k,c,p,seed,query_id,overall_ratio,recall,pages,candidates,
cpu_us,total_us) and aggregates plus the config echo go to a JSON report.
Everything except the timing columns is deterministic given the config.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .core import Dataset
from .datafiles import ingest
from .index import IndexConfig, build_index
from .metrics import overall_ratio, recall
from .projection import make_projection_matrix, optimized_dimension, project_dataset
from .search import QueryResult, brute_force_mip, make_query_context, mip_search_i, mip_search_ii

__all__ = ["BenchConfig", "load_config", "run_bench"]

_ENGINES = {"i": mip_search_i, "ii": mip_search_ii}


@dataclass
class BenchConfig:
    input: str
    fmt: str = "csv"
    n_queries: int = 100
    ks: tuple[int, ...] = (10,)
    cs: tuple[float, ...] = (0.9,)
    ps: tuple[float, ...] = (0.5,)
    variants: tuple[str, ...] = ("ii",)
    m: int | None = None  # None -> optimized for the indexed size
    k_p: int = 5
    n_key: int = 40
    k_sp: int = 10
    epsilon: float | None = None
    page_size: int = 4096
    seed: int = 0
    out: str = "bench_report"

    def __post_init__(self):
        if self.n_queries < 1:
            raise ValueError("n_queries must be >= 1")
        for v in self.variants:
            if v not in _ENGINES:
                raise ValueError(f"unknown search variant {v!r}")


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    if key in {"ks"}:
        return tuple(int(tok) for tok in raw.split(","))
    if key in {"cs", "ps"}:
        return tuple(float(tok) for tok in raw.split(","))
    if key == "variants":
        return tuple(tok.strip() for tok in raw.split(","))
    if key in {"n_queries", "k_p", "n_key", "k_sp", "page_size", "seed"}:
        return int(raw)
    if key in {"m", "epsilon"}:
        if raw.lower() == "auto":
            return None
        return int(raw) if key == "m" else float(raw)
    return raw


def load_config(path) -> BenchConfig:
    """Parse a flat key=value config file ('#' starts a comment)."""
    values: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"config line {lineno}: expected key=value")
            key, raw = line.split("=", 1)
            values[key.strip()] = _parse_value(key.strip(), raw)
    if "input" not in values:
        raise ValueError("config must set input=<dataset path>")
    return BenchConfig(**values)


def _sample_queries(data: Dataset, cfg: BenchConfig):
    if cfg.n_queries >= data.n:
        raise ValueError(f"query count {cfg.n_queries} must be below dataset size {data.n}")
    rng = np.random.default_rng(cfg.seed)
    query_ids = np.sort(rng.choice(data.n, size=cfg.n_queries, replace=False))
    mask = np.ones(data.n, dtype=bool)
    mask[query_ids] = False
    base = Dataset.from_points(data.points[mask])
    return base, data.points[query_ids], query_ids


def run_bench(cfg: BenchConfig) -> dict:
    """Execute the full benchmark; returns the report also written to disk."""
    data = ingest(cfg.input, cfg.fmt)
    base, queries, query_ids = _sample_queries(data, cfg)

    m = cfg.m if cfg.m is not None else optimized_dimension(base.n)
    matrix = make_projection_matrix(base.d, m, cfg.seed)
    projected = project_dataset(matrix, base)
    index_cfg = IndexConfig(
        k_p=cfg.k_p,
        n_key=cfg.n_key,
        k_sp=cfg.k_sp,
        epsilon=cfg.epsilon,
        page_size=cfg.page_size,
        seed=cfg.seed,
    )
    t_build = time.perf_counter()
    index = build_index(projected, base, index_cfg)
    build_secs = time.perf_counter() - t_build

    max_k = max(cfg.ks)
    exact_by_query = [brute_force_mip(base, q, max_k) for q in queries]

    aggregates = []
    rows_by_variant: dict[str, list[dict]] = {v: [] for v in cfg.variants}
    for variant in cfg.variants:
        engine = _ENGINES[variant]
        for c in cfg.cs:
            for p in cfg.ps:
                for k in cfg.ks:
                    per_query = []
                    undefined = 0
                    for qi, q in enumerate(queries):
                        ctx = make_query_context(index, q, c, p, k)
                        res = engine(index, ctx)
                        # The exact top-k is a prefix of the exact top-max_k.
                        exact_full = exact_by_query[qi]
                        k_eff = len(res.ids)
                        exact_view = QueryResult(
                            ids=exact_full.ids[:k_eff],
                            inner_products=exact_full.inner_products[:k_eff],
                        )
                        ratio = overall_ratio(res, exact_view)
                        rec = recall(res, exact_view)
                        if ratio is None:
                            undefined += 1
                        row = {
                            "k": k,
                            "c": c,
                            "p": p,
                            "seed": cfg.seed,
                            "query_id": int(query_ids[qi]),
                            "overall_ratio": ratio,
                            "recall": rec,
                            "pages": res.pages,
                            "candidates": res.candidates,
                            "cpu_us": res.cpu_us,
                            "total_us": res.total_us,
                        }
                        rows_by_variant[variant].append(row)
                        per_query.append(row)
                    defined = [r["overall_ratio"] for r in per_query if r["overall_ratio"] is not None]
                    aggregates.append(
                        {
                            "variant": variant,
                            "k": k,
                            "c": c,
                            "p": p,
                            "mean_overall_ratio": sum(defined) / len(defined) if defined else None,
                            "undefined_ratio_queries": undefined,
                            "mean_recall": float(np.mean([r["recall"] for r in per_query])),
                            "mean_pages": float(np.mean([r["pages"] for r in per_query])),
                            "mean_candidates": float(np.mean([r["candidates"] for r in per_query])),
                            "mean_cpu_us": float(np.mean([r["cpu_us"] for r in per_query])),
                            "mean_total_us": float(np.mean([r["total_us"] for r in per_query])),
                        }
                    )

    report = {
        "config": {**asdict(cfg), "m": m},
        "n_indexed": base.n,
        "build_seconds": build_secs,
        "aggregates": aggregates,
    }
    out = Path(cfg.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    for variant, rows in rows_by_variant.items():
        _write_rows(Path(f"{cfg.out}.{variant}.csv"), rows)
    with open(f"{cfg.out}.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
    return report


_COLUMNS = [
    "k", "c", "p", "seed", "query_id", "overall_ratio", "recall",
    "pages", "candidates", "cpu_us", "total_us",
]


def _write_rows(path: Path, rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join("" if row[c] is None else str(row[c]) for c in _COLUMNS) + "\n")
