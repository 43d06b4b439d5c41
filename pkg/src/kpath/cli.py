"""Command-line front end: solve, verify, optimize, bench.

Exit codes are a stable contract: 0 yes / property holds, 1 no / property
violated, 2 usage or infeasibility errors, 3 verifier cap exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import random
import sys
from pathlib import Path

from . import analysis
from .cutpath import InfeasibleParamsError
from .families import (
    CapExceededError,
    SetFamily,
    UniversePartition,
    approx_universal_family,
    find_approx_universal_violation,
    find_representation_blocker,
    rep_family,
    strictify,
    universal_family,
)
from .graph import GraphFormatError, VertexSet, parse_graph
from .solver import BudgetExceededError, SolveConfig, solve

EXIT_YES = 0
EXIT_NO = 1
EXIT_ERROR = 2
EXIT_CAP = 3


def _read_graph(path: str):
    if path == "-":
        return parse_graph(sys.stdin.read())
    return parse_graph(Path(path).read_text())


def _parse_range(spec: str) -> list[float]:
    """START:STOP:COUNT with COUNT points, endpoints included."""
    try:
        a, b, count = spec.split(":")
        a, b, count = float(a), float(b), int(count)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad range {spec!r}, expected START:STOP:COUNT") from None
    if count < 1:
        raise argparse.ArgumentTypeError("range needs at least one point")
    if count == 1:
        return [a]
    return analysis.frange(a, b, count - 1)


def _int_list(spec: str) -> list[int]:
    return [int(x) for x in spec.split(",") if x != ""]


def cmd_solve(args) -> int:
    try:
        g = _read_graph(args.graph)
    except (OSError, GraphFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    endpoints = None
    if args.s is not None or args.t is not None:
        endpoints = (args.s, args.t)
    threads = args.threads
    if threads is None:
        threads = int(os.environ.get("KPATH_THREADS", "1"))
    cfg = SolveConfig(
        eps=args.eps,
        delta=args.delta,
        zeta=args.zeta,
        c_l=args.cl,
        c_r=args.cr,
        c_prime=args.cprime,
        m=args.m,
        psize=args.psize,
        lnum=args.lnum,
        rnum=args.rnum,
        budget=args.budget,
        threads=threads,
        prune=args.prune,
    )
    trace = [] if args.trace else None
    try:
        result = solve(g, args.k, args.mode, cfg, endpoints=endpoints, trace=trace)
    except (InfeasibleParamsError, BudgetExceededError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.trace:
        with open(args.trace, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["table", "key", "raw_size", "reduced_size"])
            for table, key, raw, reduced in trace or []:
                writer.writerow([table, " ".join(map(str, key)), raw, reduced])
    if args.plain:
        print(result.answer)
        if result.path is not None:
            print(" ".join(map(str, result.path)))
    else:
        print(result.to_json())
    return EXIT_YES if result.answer == "yes" else EXIT_NO


def _random_profile_family(
    n: int, block_sizes: list[int], profile: list[int], count: int, seed: int
) -> tuple[list[VertexSet], list[VertexSet]]:
    if sum(block_sizes) > n:
        raise ValueError("block sizes exceed n")
    blocks = []
    start = 0
    for size in block_sizes:
        blocks.append(VertexSet.from_ids(n, range(start, start + size)))
        start += size
    rng = random.Random(seed)
    members: list[VertexSet] = []
    seen: set[int] = set()
    for _ in range(count * 8):
        if len(members) == count:
            break
        mask = 0
        for blk, p in zip(blocks, profile):
            mask |= sum(1 << v for v in rng.sample(blk.elements(), p))
        if mask not in seen:
            seen.add(mask)
            members.append(VertexSet(n, mask))
    return members, blocks


def cmd_verify(args) -> int:
    try:
        if args.target == "rep":
            budgets = _int_list(args.budgets)
            profile = _int_list(args.profile)
            block_sizes = _int_list(args.block_sizes) if args.block_sizes else [args.n]
            if not (len(budgets) == len(profile) == len(block_sizes)):
                print("error: budgets, profile and block-sizes must align", file=sys.stderr)
                return EXIT_ERROR
            members, blocks = _random_profile_family(
                args.n, block_sizes, profile, args.count, args.seed
            )
            part = UniversePartition(tuple(blocks), tuple(budgets))
            family = SetFamily(tuple(members), tuple(profile))
            sub = rep_family(family, part)
            blocker = find_representation_blocker(family, sub, part, cap=args.cap)
            print(
                f"family={len(family)} reduced={len(sub)} modulus={part.modulus}"
            )
            if blocker is not None:
                print(f"violation: blocker {sorted(blocker.elements())}")
                return EXIT_NO
            return EXIT_YES
        if args.target == "universal":
            fam = universal_family(args.n, args.p, args.q, cap=args.cap)
            witness = find_approx_universal_violation(
                fam, args.n, args.p, args.q, 0.0, strict=False, cap=args.cap
            )
        elif args.target == "approx":
            fam, _ = approx_universal_family(args.n, args.p, args.q, args.zeta, cap=args.cap)
            witness = find_approx_universal_violation(
                fam, args.n, args.p, args.q, args.zeta, strict=False, cap=args.cap
            )
        else:  # strict
            base, _ = approx_universal_family(args.n, args.p, args.q, args.zeta, cap=args.cap)
            fam = strictify(base, args.n, args.p, args.q, args.zeta)
            witness = find_approx_universal_violation(
                fam, args.n, args.p, args.q, args.zeta, strict=True, cap=args.cap
            )
    except CapExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(f"family size {len(fam)}")
    if witness is not None:
        a, b = witness
        print(f"violation: A={sorted(a.elements())} B={sorted(b.elements())}")
        return EXIT_NO
    return EXIT_YES


def cmd_optimize(args) -> int:
    try:
        explicit = args.grid_cl or args.grid_cr or args.grid_zeta
        result = analysis.optimize(
            cl_range=_parse_range(args.grid_cl) if args.grid_cl else None,
            cr_range=_parse_range(args.grid_cr) if args.grid_cr else None,
            zeta_range=_parse_range(args.grid_zeta) if args.grid_zeta else None,
            bisection_iters=args.bisect,
            coarsen=1 if (explicit or args.full_grid) else 2,
            pin_paper_point=not explicit and not args.full_grid,
        )
    except argparse.ArgumentTypeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(result.to_plain() if args.plain else result.to_json())
    return EXIT_YES


def cmd_bench(args) -> int:
    corpus = Path(args.corpus)
    manifest = Path(args.manifest) if args.manifest else corpus / "manifest.csv"
    if not corpus.is_dir() or not manifest.is_file():
        print(f"error: missing corpus directory or manifest", file=sys.stderr)
        return EXIT_ERROR
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(
        ["graph", "k", "mode", "answer", "entries", "max_family", "raw_members",
         "kept_members", "wall_ms"]
    )
    with open(manifest, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].startswith("#") or row[0] == "file":
                continue
            name, k, mode = row[0].strip(), int(row[1]), row[2].strip()
            g = parse_graph((corpus / name).read_text())
            result = solve(g, k, mode, SolveConfig())
            writer.writerow(
                [
                    name,
                    k,
                    mode,
                    result.answer,
                    result.stats.get("entries", 0),
                    result.stats.get("max_family", 0),
                    result.stats.get("raw_members", 0),
                    result.stats.get("kept_members", 0),
                    f"{result.wall_ms:.1f}",
                ]
            )
    text = out.getvalue()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_YES


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kpath", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="decide k-path / k-(s,t)-path")
    p_solve.add_argument("graph", help="edge-list file, or '-' for stdin")
    p_solve.add_argument("--k", type=int, required=True)
    p_solve.add_argument("--mode", choices=["brute", "baseline", "cut"], default="cut")
    p_solve.add_argument("--s", type=int, default=None, help="required first vertex")
    p_solve.add_argument("--t", type=int, default=None, help="required last vertex")
    p_solve.add_argument("--eps", type=float, default=0.25)
    p_solve.add_argument("--delta", type=float, default=0.5)
    p_solve.add_argument("--zeta", type=float, default=0.3)
    p_solve.add_argument("--cl", type=float, default=1.136)
    p_solve.add_argument("--cr", type=float, default=1.645)
    p_solve.add_argument("--cprime", type=float, default=analysis.DEFAULT_C)
    p_solve.add_argument("--m", type=int, default=None)
    p_solve.add_argument("--psize", type=int, default=None)
    p_solve.add_argument("--lnum", type=int, default=None)
    p_solve.add_argument("--rnum", type=int, default=None)
    p_solve.add_argument("--budget", type=int, default=500_000)
    p_solve.add_argument("--threads", type=int, default=None)
    p_solve.add_argument("--prune", action="store_true")
    p_solve.add_argument("--trace", default=None, help="write per-entry family sizes as CSV")
    fmt = p_solve.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true", default=True)
    fmt.add_argument("--plain", action="store_true", default=False)
    p_solve.set_defaults(func=cmd_solve)

    p_verify = sub.add_parser("verify", help="construct and exhaustively verify families")
    p_verify.add_argument("target", choices=["rep", "universal", "approx", "strict"])
    p_verify.add_argument("--n", type=int, required=True)
    p_verify.add_argument("--p", type=int, default=1)
    p_verify.add_argument("--q", type=int, default=1)
    p_verify.add_argument("--zeta", type=float, default=0.5)
    p_verify.add_argument("--budgets", default="3", help="comma-separated per-block budgets")
    p_verify.add_argument("--profile", default="1", help="comma-separated per-block sizes")
    p_verify.add_argument("--block-sizes", default=None, help="comma-separated block sizes")
    p_verify.add_argument("--count", type=int, default=12, help="random members to generate")
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.add_argument("--cap", type=int, default=2_000_000)
    p_verify.set_defaults(func=cmd_verify)

    p_opt = sub.add_parser("optimize", help="reproduce the cost-model parameter search")
    p_opt.add_argument("--grid-cl", default=None, help="START:STOP:COUNT")
    p_opt.add_argument("--grid-cr", default=None, help="START:STOP:COUNT")
    p_opt.add_argument("--grid-zeta", default=None, help="START:STOP:COUNT")
    p_opt.add_argument("--bisect", type=int, default=30)
    p_opt.add_argument(
        "--full-grid", action="store_true",
        help="use the reference grid verbatim instead of the coarsened default",
    )
    fmt = p_opt.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true", default=True)
    fmt.add_argument("--plain", action="store_true", default=False)
    p_opt.set_defaults(func=cmd_optimize)

    p_bench = sub.add_parser("bench", help="run a manifest of (graph, k, mode) cells")
    p_bench.add_argument("corpus", help="directory of edge-list graphs")
    p_bench.add_argument("--manifest", default=None, help="CSV of file,k,mode rows")
    p_bench.add_argument("--out", default=None, help="write the CSV report here")
    p_bench.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
