"""Command-line surface: build, query, bench, oracle.

Exit codes: 0 ok, 1 usage or invalid arguments, 2 file format error,
3 contract violation.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .bench import load_config, run_bench
from .core import ContractViolationError, FormatError
from .datafiles import ingest, read_csv_vectors, read_fvecs
from .index import IndexConfig, build_index, load_index, save_index
from .projection import make_projection_matrix, optimized_dimension, project_dataset
from .search import brute_force_mip, make_query_context, mip_search_i, mip_search_ii

__all__ = ["main"]


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        sys.exit(1)


def _read_vectors(path: str, fmt: str) -> np.ndarray:
    if fmt == "fvecs":
        return read_fvecs(path)
    if fmt == "csv":
        return read_csv_vectors(path)
    raise ValueError(f"unknown dataset format: {fmt!r}")


def _cmd_build(args) -> int:
    data = ingest(args.input, args.format)
    m = optimized_dimension(data.n) if args.m == "auto" else int(args.m)
    epsilon = None if args.epsilon == "auto" else float(args.epsilon)
    matrix = make_projection_matrix(data.d, m, args.seed)
    projected = project_dataset(matrix, data)
    cfg = IndexConfig(
        k_p=args.kp,
        n_key=args.nkey,
        k_sp=args.ksp,
        epsilon=epsilon,
        page_size=args.page_size,
        seed=args.seed,
    )
    index = build_index(projected, data, cfg)
    save_index(index, args.out)
    print(
        f"built index: n={index.n} d={index.d} m={index.m} "
        f"partitions={len(index.partitions)} keys={len(index.key_map)} "
        f"epsilon={index.epsilon:.6g} -> {args.out}"
    )
    return 0


def _cmd_query(args) -> int:
    index = load_index(args.index)
    queries = _read_vectors(args.queries, args.queries_format)
    engine = mip_search_i if args.variant == "i" else mip_search_ii
    lines = ["query,k,c,p,ids,inner_products,pages,candidates,cpu_us,total_us,termination"]
    for qi, q in enumerate(queries):
        ctx = make_query_context(index, q, args.c, args.p, args.k)
        res = engine(index, ctx)
        lines.append(
            f"{qi},{args.k},{args.c},{args.p},"
            f"{';'.join(str(i) for i in res.ids)},"
            f"{';'.join(repr(ip) for ip in res.inner_products)},"
            f"{res.pages},{res.candidates},{res.cpu_us:.1f},{res.total_us:.1f},{res.termination}"
        )
    text = "\n".join(lines) + "\n"
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"wrote {len(queries)} query results to {args.report}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_oracle(args) -> int:
    data = ingest(args.input, args.format)
    queries = _read_vectors(args.queries, args.queries_format)
    lines = ["query,k,ids,inner_products"]
    for qi, q in enumerate(queries):
        res = brute_force_mip(data, q, args.k)
        lines.append(
            f"{qi},{args.k},"
            f"{';'.join(str(i) for i in res.ids)},"
            f"{';'.join(repr(ip) for ip in res.inner_products)}"
        )
    sys.stdout.write("\n".join(lines) + "\n")
    return 0


def _cmd_bench(args) -> int:
    report = run_bench(load_config(args.config))
    for agg in report["aggregates"]:
        ratio = agg["mean_overall_ratio"]
        print(
            f"variant={agg['variant']} k={agg['k']} c={agg['c']} p={agg['p']} "
            f"ratio={'n/a' if ratio is None else f'{ratio:.4f}'} "
            f"recall={agg['mean_recall']:.4f} pages={agg['mean_pages']:.1f}"
        )
    return 0


def main(argv=None) -> int:
    parser = _Parser(prog="pmips", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="build and persist an index")
    b.add_argument("--input", required=True)
    b.add_argument("--format", default="csv", choices=["csv", "fvecs"])
    b.add_argument("--m", default="auto", help="projected dimension (or 'auto')")
    b.add_argument("--kp", type=int, default=5)
    b.add_argument("--nkey", type=int, default=40)
    b.add_argument("--ksp", type=int, default=10)
    b.add_argument("--epsilon", default="auto", help="ring width (or 'auto')")
    b.add_argument("--page-size", type=int, default=4096)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", required=True)
    b.set_defaults(func=_cmd_build)

    q = sub.add_parser("query", help="run top-k searches against an index")
    q.add_argument("--index", required=True)
    q.add_argument("--queries", required=True)
    q.add_argument("--queries-format", default="csv", choices=["csv", "fvecs"])
    q.add_argument("--k", type=int, default=1)
    q.add_argument("--c", type=float, default=0.9)
    q.add_argument("--p", type=float, default=0.5)
    q.add_argument("--variant", default="ii", choices=["i", "ii"])
    q.add_argument("--report", default=None)
    q.set_defaults(func=_cmd_query)

    o = sub.add_parser("oracle", help="exact top-k by full scan")
    o.add_argument("--input", required=True)
    o.add_argument("--format", default="csv", choices=["csv", "fvecs"])
    o.add_argument("--queries", required=True)
    o.add_argument("--queries-format", default="csv", choices=["csv", "fvecs"])
    o.add_argument("--k", type=int, default=1)
    o.set_defaults(func=_cmd_oracle)

    n = sub.add_parser("bench", help="run a benchmark config")
    n.add_argument("--config", required=True)
    n.set_defaults(func=_cmd_bench)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return 2
    except ContractViolationError as exc:
        print(f"contract violation: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
