"""``devstone`` command line: metric | run | verify | counts."""

from __future__ import annotations

import argparse
import os
import sys
from typing import Callable, List, Optional

from . import __version__
from .benchmark import (
    MIN_OFFICIAL_REPLICATIONS,
    NondeterminismError,
    run_benchmark,
    run_replications,
)
from .burn import ClockError
from .devstone import DevstoneConfig, DevstoneType, build_devstone, expected_counts
from .kernel import DEFAULT_TRANSITION_BUDGET, CoupledModel, KernelError
from .report import write_report
from .verify import FIELDS, describe_mismatches, grid, render_matrix, verify_grid

BUDGET_ENV = "DEVSTONE_MICROSTEP_BUDGET"

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _non_negative_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _delay(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected milliseconds, got {text!r}") from None
    if not value >= 0 or value == float("inf"):
        raise argparse.ArgumentTypeError(f"delay must be a finite value >= 0, got {text}")
    return value


def _devstone_type(text: str) -> DevstoneType:
    try:
        return DevstoneType.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _fmt(value: float, ci: Optional[float]) -> str:
    if ci is None:
        return f"{value:.3f}"
    return f"{value:.3f} ± {ci:.3f}"


def _budget() -> int:
    raw = os.environ.get(BUDGET_ENV)
    if raw is None or raw == "":
        return DEFAULT_TRANSITION_BUDGET
    value = int(raw)
    if value < 1:
        raise ValueError(f"{BUDGET_ENV} must be >= 1")
    return value


def cmd_metric(args) -> int:
    if args.reps < MIN_OFFICIAL_REPLICATIONS:
        print(
            f"warning: {args.reps} replication(s) per model; an official DEVStone "
            f"metric needs N >= {MIN_OFFICIAL_REPLICATIONS}",
            file=sys.stderr,
        )

    def progress(timing):
        print(f"  {timing.config.label:<14} {_fmt(timing.mean_s, timing.ci95_half_width_s)} s",
              flush=True)

    print(f"DEVStone metric, {args.reps} replication(s) per model "
          f"(pydevstone {__version__})")
    report = run_benchmark(args.reps, warmup=args.warmup, budget=args.budget,
                           progress=progress)
    print()
    print(f"{'Seconds / DEVStone':<22}{'DEVStones / minute'}")
    print(f"{_fmt(report.total_mean_s, report.total_ci95_s):<22}"
          f"{_fmt(report.devstones_per_minute, report.devstones_ci95)}")
    print(f"devstones_per_minute = 60 / {report.total_mean_s:.6f} = "
          f"{report.devstones_per_minute:.6f}")
    print("breakdown: " + "  ".join(
        f"{k} {v:.2f}%" for k, v in report.breakdown_pct.items()))
    if args.out:
        write_report(report, args.out, args.format)
        print(f"report written to {args.out}")
    return EXIT_OK


def cmd_run(args) -> int:
    config = DevstoneConfig(args.type, args.depth, args.width, args.int_delay, args.ext_delay)
    timing = run_replications(config, args.reps, budget=args.budget)
    stats = timing.stats
    print(f"{config.label}: {_fmt(timing.mean_s, timing.ci95_half_width_s)} s "
          f"over {args.reps} replication(s)")
    print(f"events: {stats.n_lambda}")
    if not args.stats:
        return EXIT_OK
    expected = expected_counts(config)
    print(f"transitions: int {stats.n_internal}  ext {stats.n_external}  "
          f"con {stats.n_confluent}")
    print(f"messages: routed {stats.n_messages_routed}  "
          f"discarded {stats.n_messages_discarded}  delivered {stats.n_messages_delivered}")
    print(f"n_lambda {stats.n_lambda}, expected {expected.n_events}")
    if stats.n_lambda == expected.n_events:
        print("MATCH")
        return EXIT_OK
    print("MISMATCH")
    return EXIT_FAILURE


def cmd_verify(args, builder: Callable[[DevstoneConfig], CoupledModel] = build_devstone) -> int:
    configs = grid(args.max_depth, args.max_width, args.hmod_max_depth, args.hmod_max_width)
    checks = verify_grid(configs, builder)
    print(render_matrix(checks))
    failures = describe_mismatches(checks)
    for line in failures:
        print(line)
    n_bad = sum(1 for c in checks if not c.ok)
    print(f"verify: {len(checks)} configurations, {n_bad} failed")
    return EXIT_FAILURE if failures else EXIT_OK


def cmd_counts(args) -> int:
    config = DevstoneConfig(args.type, args.depth, args.width)
    counts = expected_counts(config)
    print(" ".join(FIELDS))
    print(" ".join(str(v) for v in counts.as_tuple()))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="devstone", description="DEVStone benchmark on a sequential PDEVS kernel"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("metric", help="run the 12-model benchmark set")
    p.add_argument("--reps", type=_positive_int, default=MIN_OFFICIAL_REPLICATIONS)
    p.add_argument("--warmup", type=_non_negative_int, default=0,
                   help="untimed replications per model (default 0)")
    p.add_argument("--out", help="write the report to this path")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_metric)

    def add_model_args(p):
        p.add_argument("--type", type=_devstone_type, required=True,
                       help="LI, HI, HO or HMOD (case-insensitive)")
        p.add_argument("--depth", type=_positive_int, required=True)
        p.add_argument("--width", type=_positive_int, required=True)

    p = sub.add_parser("run", help="time a single DEVStone model")
    add_model_args(p)
    p.add_argument("--int-delay", type=_delay, default=0.0, help="milliseconds")
    p.add_argument("--ext-delay", type=_delay, default=0.0, help="milliseconds")
    p.add_argument("--reps", type=_positive_int, default=1)
    p.add_argument("--stats", action="store_true",
                   help="print counters and compare events with the closed form")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="check the generator against the closed forms")
    p.add_argument("--max-depth", type=_positive_int, default=10)
    p.add_argument("--max-width", type=_positive_int, default=10)
    p.add_argument("--hmod-max-depth", type=_positive_int, default=6)
    p.add_argument("--hmod-max-width", type=_positive_int, default=8)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("counts", help="print closed-form counts without simulating")
    add_model_args(p)
    p.set_defaults(func=cmd_counts)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        args.budget = _budget()
    except ValueError as exc:
        print(f"devstone: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (KernelError, NondeterminismError, ClockError) as exc:
        print(f"devstone: simulation failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
