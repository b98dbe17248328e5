"""Command-line harness: ``fairmatch rerank | evaluate | demo``.

Exit codes: 0 success, 1 usage error, 2 input/output error, 3 internal
solver invariant violation.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .errors import InputError, SolverError
from .ingest import (
    RecommendationTable,
    generate_synthetic,
    generate_synthetic_ratings,
    parse_ratings,
    parse_recs,
    train_test_split,
    write_metrics,
    write_recs,
)
from .metrics import RecommendationBatch, evaluate, long_tail_split
from .rerankers import METHODS, rerank_table, to_table

log = logging.getLogger("fairmatch")

EXIT_USAGE, EXIT_IO, EXIT_INTERNAL = 1, 2, 3
ALPHA_GRID = "0,0.25,0.5,0.75,1"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> list[float]:
    try:
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty alpha list")
    return values


def _method_list(text: str) -> list[str]:
    methods = [m.strip() for m in text.split(",") if m.strip()]
    bad = [m for m in methods if m not in METHODS]
    if bad or not methods:
        raise argparse.ArgumentTypeError(f"unknown method(s) {bad}; choose from {', '.join(METHODS)}")
    return methods


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fairmatch", description="FairMatch re-ranking and evaluation harness")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, t=None, n=None, alpha="0.5", seed=0):
        p.add_argument("--t", type=int, required=t is None, default=t, help="input list length")
        p.add_argument("--n", type=int, required=n is None, default=n, help="output list length")
        p.add_argument("--alpha", type=_float_list, default=_float_list(alpha),
                       help="FairMatch alpha, or comma-separated list")
        p.add_argument("--seed", type=int, default=seed)
        p.add_argument("--weight-scale", type=int, default=100)

    rr = sub.add_parser("rerank", help="re-rank top-t lists into top-n lists")
    rr.add_argument("--recs", required=True)
    rr.add_argument("--method", choices=METHODS, default="fairmatch")
    rr.add_argument("--out-recs", required=True)
    common(rr)

    ev = sub.add_parser("evaluate", help="re-rank and append one metrics row per (method, alpha)")
    ev.add_argument("--recs", required=True)
    ev.add_argument("--ratings-train", required=True)
    ev.add_argument("--ratings-test", required=True)
    ev.add_argument("--method", type=_method_list, default=["fairmatch"])
    ev.add_argument("--k-longtail", type=float, default=20.0)
    ev.add_argument("--out-metrics", required=True)
    ev.add_argument("--jobs", type=int, default=1)
    common(ev)

    demo = sub.add_parser("demo", help="synthetic end-to-end comparison of all methods")
    demo.add_argument("--users", type=int, default=200)
    demo.add_argument("--items", type=int, default=100)
    demo.add_argument("--zipf", type=float, default=1.2)
    demo.add_argument("--k-longtail", type=float, default=20.0)
    demo.add_argument("--out-metrics")
    demo.add_argument("--out-recs", help="write the generated top-t input lists here")
    demo.add_argument("--jobs", type=int, default=1)
    common(demo, t=20, n=10, alpha=ALPHA_GRID, seed=7)
    return parser


def _check_config(args) -> None:
    if args.n <= 0 or args.t <= 0:
        raise UsageError("--t and --n must be positive")
    if args.n >= args.t:
        raise UsageError(f"--n ({args.n}) must be smaller than --t ({args.t})")
    if any(not 0 <= a <= 1 for a in args.alpha):
        raise UsageError("--alpha values must lie in [0, 1]")
    if args.weight_scale < 1:
        raise UsageError("--weight-scale must be at least 1")
    if getattr(args, "jobs", 1) < 1:
        raise UsageError("--jobs must be at least 1")
    k = getattr(args, "k_longtail", 50.0)
    if not 0 < k < 100:
        raise UsageError("--k-longtail must lie in (0, 100)")


@dataclass
class EvalContext:
    recs: RecommendationTable
    test_profiles: dict[str, set[str]]
    long_tail: set[str]
    catalog_size: int
    t: int
    n: int
    seed: int
    weight_scale: int
    k_percent: float


def _cells(methods, alphas):
    for method in methods:
        if method == "fairmatch":
            for alpha in alphas:
                yield method, alpha
        else:
            yield method, None


def _run_cell(ctx: EvalContext, cell) -> dict:
    method, alpha = cell
    lists = rerank_table(
        ctx.recs, method, ctx.n, alpha=alpha if alpha is not None else 0.5,
        seed=ctx.seed, weight_scale=ctx.weight_scale,
    )
    batch = RecommendationBatch(lists, ctx.catalog_size)
    report = evaluate(batch, ctx.test_profiles, ctx.long_tail, ctx.k_percent)
    return report.as_row(method, alpha, ctx.t)


def run_cells(ctx: EvalContext, cells, jobs: int = 1) -> list[dict]:
    cells = list(cells)
    if jobs == 1 or len(cells) == 1:
        return [_run_cell(ctx, c) for c in cells]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_cell, [ctx] * len(cells), cells))


def cmd_rerank(args) -> int:
    _check_config(args)
    if len(args.alpha) != 1:
        raise UsageError("rerank takes a single --alpha")
    recs = parse_recs(args.recs, args.t)
    lists = rerank_table(recs, args.method, args.n, alpha=args.alpha[0], seed=args.seed,
                         weight_scale=args.weight_scale)
    write_recs(to_table(lists, recs), args.out_recs)
    log.info("wrote %d lists to %s", len(lists), args.out_recs)
    return 0


def _context(args, recs, train, test) -> EvalContext:
    _, tail = long_tail_split(train, args.k_longtail)
    catalog = train.items | test.items | recs.items
    return EvalContext(
        recs=recs,
        test_profiles=test.profiles(),
        long_tail=tail,
        catalog_size=len(catalog),
        t=args.t,
        n=args.n,
        seed=args.seed,
        weight_scale=args.weight_scale,
        k_percent=args.k_longtail,
    )


def cmd_evaluate(args) -> int:
    _check_config(args)
    recs = parse_recs(args.recs, args.t)
    ctx = _context(args, recs, parse_ratings(args.ratings_train), parse_ratings(args.ratings_test))
    rows = run_cells(ctx, _cells(args.method, args.alpha), args.jobs)
    write_metrics(rows, args.out_metrics, append=True)
    log.info("appended %d rows to %s", len(rows), args.out_metrics)
    return 0


def format_table(rows: list[dict]) -> str:
    cols = ("method", "alpha", "precision", "coverage", "gini", "entropy", "longtail_coverage")
    heads = ("method", "alpha", "P@n", "C@n", "G@n", "E@n", "LT@n")
    lines = ["  ".join(f"{h:>9}" for h in heads)]
    for row in rows:
        cells = []
        for col in cols:
            v = row[col]
            cells.append(f"{v:>9.4f}" if isinstance(v, float) else f"{str(v):>9}")
        lines.append("  ".join(cells))
    return "\n".join(lines)


def cmd_demo(args) -> int:
    _check_config(args)
    recs = generate_synthetic(args.users, args.items, args.t, args.zipf, args.seed)
    ratings = generate_synthetic_ratings(args.users, args.items, args.t, args.zipf, args.seed + 1)
    train, test = train_test_split(ratings, 0.2, args.seed)
    if args.out_recs:
        write_recs(recs, args.out_recs)
    ctx = _context(args, recs, train, test)
    rows = run_cells(ctx, _cells(METHODS, args.alpha), args.jobs)
    if args.out_metrics:
        write_metrics(rows, args.out_metrics)
    print(f"users={args.users} items={args.items} zipf={args.zipf} t={args.t} n={args.n} seed={args.seed}")
    print(format_table(rows))
    return 0


COMMANDS = {"rerank": cmd_rerank, "evaluate": cmd_evaluate, "demo": cmd_demo}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"fairmatch: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, InputError) as exc:
        print(f"fairmatch: {exc}", file=sys.stderr)
        return EXIT_IO
    except SolverError as exc:
        print(f"fairmatch: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
