"""Command-line front end: decide, benchmark, and generate instances.

Exit codes of `check`: 0 safe, 2 unsafe, 3 unknown (timeout, cap, or a
semi-decision procedure giving up), 64 usage error, 65 parse error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from fractions import Fraction
from pathlib import Path
from typing import Optional

from . import __version__, encode, qreach, structural
from .cover import Config, RunStats, backward_cover, backward_cover_q
from .gen import random_instance
from .mistio import Instance, ParseError, parse, serialize
from .ratlp import SolverTimeout

EXIT_BY_VERDICT = {"safe": 0, "unsafe": 2, "unknown": 3, "error": 65}
EXIT_USAGE = 64

ALGORITHMS = ("backward", "qcover", "trapcegar", "qreach-only")
CSV_COLUMNS = (
    "name", "algo", "verdict", "wall_ms", "solver_ms",
    "iterations", "pruned_total", "pruned_pct",
)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 64 instead of argparse's default 2
        raise _UsageError(message)


def _detect_format(path: str, explicit: Optional[str]) -> str:
    if explicit:
        return explicit
    return "json" if path.endswith(".json") else "mist"


def _load(path: str, fmt: Optional[str]) -> Instance:
    text = Path(path).read_text(encoding="utf-8")
    return parse(text, _detect_format(path, fmt), name=Path(path).stem)


def _config(args) -> Config:
    return Config(
        use_minbottle=not args.no_minbottle,
        c=args.c,
        k=args.k,
        timeout=args.timeout,
        max_iterations=args.max_iterations,
    )


def _run_target(inst: Instance, target, algo: str, cfg: Config) -> RunStats:
    if algo == "backward":
        _, stats = backward_cover(inst.net, inst.initial, target, cfg)
        return stats
    if algo == "qcover":
        _, stats = backward_cover_q(inst.net, inst.initial, target, cfg)
        return stats
    stats = RunStats(algorithm=algo)
    start = time.perf_counter()
    deadline = time.monotonic() + cfg.timeout if cfg.timeout else None
    try:
        if algo == "qreach-only":
            verdict = qreach.q_coverable(inst.net, inst.initial, target, deadline=deadline)
            stats.solver_queries = 1
            # Continuous coverability over-approximates coverability: a
            # negative answer proves safety, a positive one decides nothing.
            stats.verdict = "safe" if not verdict.reachable else "unknown"
            if verdict.reachable:
                stats.unknown_reason = "continuously-coverable"
        elif algo == "trapcegar":
            augmented, _ = qreach.augment_with_drains(inst.net)
            report = structural.trap_safety_check(augmented, inst.initial, target)
            stats.solver_queries = report.rounds
            safe = report.verdict is structural.TrapVerdict.SAFE
            stats.verdict = "safe" if safe else "unknown"
            if not safe:
                stats.unknown_reason = "trap-refinement-exhausted"
        else:
            raise _UsageError(f"unknown algorithm {algo!r}")
    except SolverTimeout:
        stats.verdict = "unknown"
        stats.unknown_reason = "timeout"
    stats.wall_time = time.perf_counter() - start
    return stats


def _combine(verdicts: list[str]) -> str:
    # The instance is unsafe when any disjunctive target is coverable.
    if "unsafe" in verdicts:
        return "unsafe"
    if "unknown" in verdicts:
        return "unknown"
    return "safe"


def _report(inst: Instance, algo: str, per_target: list[RunStats], no_times: bool) -> dict:
    wall = sum(s.wall_time for s in per_target)
    solver = sum(s.solver_time for s in per_target)
    return {
        "schema_version": 1,
        "toolkit_version": __version__,
        "instance": inst.name,
        "algorithm": algo,
        "verdict": _combine([s.verdict for s in per_target]),
        "wall_ms": 0.0 if no_times else round(wall * 1000, 3),
        "solver_ms": 0.0 if no_times else round(solver * 1000, 3),
        "targets": [
            _strip_times(s.as_dict()) if no_times else s.as_dict()
            for s in per_target
        ],
    }


def _strip_times(d: dict) -> dict:
    d = dict(d)
    d["solver_time_ms"] = 0.0
    d["wall_time_ms"] = 0.0
    return d


def cmd_check(args) -> int:
    try:
        inst = _load(args.instance, args.format)
    except ParseError as exc:
        print(f"{args.instance}: {exc}", file=sys.stderr)
        return EXIT_BY_VERDICT["error"]
    cfg = _config(args)

    if args.emit_smt:
        query = encode.build_cover_query(inst.net, inst.initial)
        body = encode.disj([
            encode.substitute(query, encode.cover_bindings(inst.net, t))
            for t in inst.targets
        ])
        Path(args.emit_smt).write_text(encode.emit_smtlib(body), encoding="utf-8")

    per_target = [_run_target(inst, t, args.algo, cfg) for t in inst.targets]
    report = _report(inst, args.algo, per_target, args.no_times)
    verdict = report["verdict"]
    print(f"{inst.name}: {verdict} ({args.algo}, {report['wall_ms']} ms)")
    if args.stats:
        Path(args.stats).write_text(
            json.dumps(report, indent=2) + "\n", encoding="utf-8"
        )
    return EXIT_BY_VERDICT[verdict]


def _bench_row(path: Path, algo: str, args) -> dict:
    try:
        inst = _load(str(path), args.format)
    except (ParseError, OSError, UnicodeDecodeError):
        return dict.fromkeys(CSV_COLUMNS, 0) | {
            "name": path.stem, "algo": algo, "verdict": "error", "pruned_pct": "0.0",
        }
    cfg = _config(args)
    per_target = [_run_target(inst, t, algo, cfg) for t in inst.targets]
    wall = sum(s.wall_time for s in per_target)
    solver = sum(s.solver_time for s in per_target)
    pruned = sum(s.pruned_total for s in per_target)
    candidates = sum(i.basis_candidates for s in per_target for i in s.iterations)
    pct = 100 * Fraction(pruned, candidates) if candidates else Fraction(0)
    return {
        "name": inst.name,
        "algo": algo,
        "verdict": _combine([s.verdict for s in per_target]),
        "wall_ms": 0 if args.no_times else round(wall * 1000),
        "solver_ms": 0 if args.no_times else round(solver * 1000),
        "iterations": sum(len(s.iterations) for s in per_target),
        "pruned_total": pruned,
        "pruned_pct": f"{float(pct):.1f}",
    }


def cmd_bench(args) -> int:
    root = Path(args.directory)
    if not root.is_dir():
        raise _UsageError(f"{args.directory} is not a directory")
    files = sorted(
        p for p in root.iterdir()
        if p.suffix in (".spec", ".mist", ".json") and p.is_file()
    )
    algos = args.algo or ["qcover"]
    rows = [_bench_row(path, algo, args) for path in files for algo in algos]
    rows.sort(key=lambda r: (r["name"], r["algo"]))
    out = io.StringIO()
    writer = csv.DictWriter(out, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    if args.out:
        Path(args.out).write_text(out.getvalue(), encoding="utf-8")
    else:
        sys.stdout.write(out.getvalue())
    return 0


def cmd_gen(args) -> int:
    inst = random_instance(
        places=args.places,
        transitions=args.transitions,
        seed=args.seed,
        max_weight=args.max_weight,
        max_tokens=args.max_tokens,
    )
    text = serialize(inst, args.format or "mist")
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="contcover", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--format", choices=("mist", "json"),
                       help="input format (default: by file extension)")
        p.add_argument("--c", type=int, default=10, help="bottleneck base width")
        p.add_argument("--k", type=int, default=5, help="bottleneck divisor")
        p.add_argument("--no-minbottle", action="store_true",
                       help="disable the small-sum-norm bottleneck")
        p.add_argument("--timeout", type=float, default=None, metavar="SECS")
        p.add_argument("--max-iterations", type=int, default=None)
        p.add_argument("--no-times", action="store_true",
                       help="report zero times for byte-reproducible output")

    check = sub.add_parser("check", help="decide one instance")
    check.add_argument("instance")
    common(check)
    check.add_argument("--algo", default="qcover", choices=ALGORITHMS)
    check.add_argument("--emit-smt", metavar="PATH",
                       help="write the continuous-coverability query as SMT-LIB2")
    check.add_argument("--stats", metavar="PATH", help="write a JSON report")
    check.set_defaults(func=cmd_check)

    bench = sub.add_parser("bench", help="run a directory of instances to CSV")
    bench.add_argument("directory")
    common(bench)
    bench.add_argument("--algo", action="append", default=None, choices=ALGORITHMS,
                       help="algorithm to run (repeatable; default qcover)")
    bench.add_argument("--out", metavar="PATH", help="CSV output path (default stdout)")
    bench.set_defaults(func=cmd_bench)

    gen = sub.add_parser("gen", help="generate a seeded random instance")
    gen.add_argument("--places", type=int, required=True)
    gen.add_argument("--transitions", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--max-weight", type=int, default=2)
    gen.add_argument("--max-tokens", type=int, default=3)
    gen.add_argument("--format", choices=("mist", "json"), default=None)
    gen.add_argument("--out", "-o", metavar="PATH")
    gen.set_defaults(func=cmd_gen)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_BY_VERDICT["error"]


def entry() -> None:
    sys.exit(main())
