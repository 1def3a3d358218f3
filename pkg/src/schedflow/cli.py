"""Command line front end.

Exit codes compose in pipelines: 0 clean, 1 analysis finding (divergence,
deadline miss with --fail-on-miss, validation error), 2 usage or file
error.
"""

from __future__ import annotations

import argparse
import sys

from . import report as report_mod
from . import transform as transform_mod
from .executor import timed_run, zero_time_run
from .model import Model, ModelError, load_model, serialize_model, utilization, validate
from .sorting import AlgebraicLoopError, model_sorted_orders
from .trace import signals_to_csv


def parse_duration(text: str) -> int:
    """Duration with us/ms/s suffix (bare integers are microseconds)."""
    text = text.strip()
    for suffix, factor in (("us", 1), ("ms", 1000), ("s", 1_000_000)):
        if text.endswith(suffix):
            number = text[: -len(suffix)].strip()
            try:
                value = float(number)
            except ValueError:
                raise argparse.ArgumentTypeError(f"bad duration {text!r}")
            ticks = value * factor
            if ticks != int(ticks):
                raise argparse.ArgumentTypeError(
                    f"duration {text!r} is not a whole number of microseconds"
                )
            return int(ticks)
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad duration {text!r}")


def _load(path: str) -> Model:
    try:
        return load_model(path)
    except FileNotFoundError:
        raise SystemExit(_usage_error(f"model file not found: {path}"))
    except ModelError as exc:
        raise SystemExit(_usage_error(f"{path}: {exc}"))


def _usage_error(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 2


def _write_output(path: str, content: str) -> None:
    if path == "-":
        sys.stdout.write(content)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(content)


def cmd_validate(args: argparse.Namespace) -> int:
    model = _load(args.model)
    diagnostics = validate(model)
    for d in diagnostics:
        print(d)
    return 1 if any(d.severity == "ERROR" for d in diagnostics) else 0


def cmd_sort(args: argparse.Namespace) -> int:
    model = _load(args.model)
    try:
        orders = model_sorted_orders(model)
    except AlgebraicLoopError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for order in orders:
        for bid, pos in order.entries:
            print(f"{order.context}:{pos}  {bid}")
    return 0


def cmd_transform(args: argparse.Namespace) -> int:
    model = _load(args.model)
    if not args.split:
        return _usage_error("transform requires --split")
    try:
        records = transform_mod.connectivity_records(model)
        split = transform_mod.split_model(model)
    except ModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _write_output(args.out, serialize_model(split))
    if args.table:
        _write_output(args.table, transform_mod.connectivity_table_csv(records))
    return 0


def _abort_on_errors(model: Model, path: str) -> int | None:
    errors = [d for d in validate(model) if d.severity == "ERROR"]
    if errors:
        for d in errors:
            print(d, file=sys.stderr)
        print(f"error: {path} fails validation; not simulating", file=sys.stderr)
        return 1
    return None


def _run(model: Model, args: argparse.Namespace):
    if args.split:
        model = transform_mod.split_model(model)
    if args.mode == "zero-time":
        return zero_time_run(model, args.horizon)
    return timed_run(model, args.horizon, args.seed)


def cmd_simulate(args: argparse.Namespace) -> int:
    model = _load(args.model)
    failed = _abort_on_errors(model, args.model)
    if failed is not None:
        return failed
    trace, signals = _run(model, args)
    if args.trace:
        _write_output(args.trace, trace.to_csv())
    if args.signals:
        _write_output(args.signals, signals_to_csv(signals))
    if args.gantt:
        fmt = "svg" if args.gantt.endswith(".svg") else "ascii"
        _write_output(args.gantt, report_mod.gantt(trace, mode=args.gantt_mode, fmt=fmt))
    reports = report_mod.deadline_report(trace)
    misses = sum(r.misses for r in reports.values())
    for r in reports.values():
        print(r.line())
    if args.fail_on_miss and misses > 0:
        return 1
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    model = _load(args.model)
    failed = _abort_on_errors(model, args.model)
    if failed is not None:
        return failed
    _, baseline = zero_time_run(model, args.horizon)
    subject_model = transform_mod.split_model(model) if args.split else model
    _, subject = timed_run(subject_model, args.horizon, args.seed)
    watch = args.signal or None
    try:
        result = report_mod.diff_signals(baseline, subject, watch)
    except report_mod.UnknownSignalError as exc:
        return _usage_error(f"unknown signal {exc.args[0]!r}")
    for name in sorted(result):
        hit = result[name]
        print(f"{name}: identical" if hit is None else hit.line())
    return 0 if report_mod.diff_is_clean(result) else 1


def cmd_report(args: argparse.Namespace) -> int:
    model = _load(args.model)
    failed = _abort_on_errors(model, args.model)
    if failed is not None:
        return failed
    trace, _signals = _run(model, args)
    print(f"utilization: {utilization(model):.4f}")
    reports = report_mod.deadline_report(trace)
    for r in reports.values():
        print(r.line())
    if args.fail_on_miss and sum(r.misses for r in reports.values()) > 0:
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="schedflow",
        description="Fixed-priority scheduling simulator for block-dataflow runnables",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run_flags(p: argparse.ArgumentParser, with_mode: bool = True) -> None:
        p.add_argument("--horizon", type=parse_duration, default=None,
                       help="simulation horizon (us/ms/s suffix)")
        p.add_argument("--seed", type=int, default=None, help="jitter seed override")
        p.add_argument("--split", action="store_true",
                       help="apply the fine-grain per-block split first")
        if with_mode:
            p.add_argument("--mode", choices=("timed", "zero-time"), default="timed")

    p = sub.add_parser("validate", help="structural and utilization checks")
    p.add_argument("model")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("sort", help="print block execution order per context")
    p.add_argument("model")
    p.set_defaults(func=cmd_sort)

    p = sub.add_parser("transform", help="write the fine-grain split model")
    p.add_argument("model")
    p.add_argument("--split", action="store_true")
    p.add_argument("--out", default="-", help="split model output path ('-' = stdout)")
    p.add_argument("--table", default=None, help="connectivity table CSV path")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("simulate", help="run one schedule and export artifacts")
    p.add_argument("model")
    add_run_flags(p)
    p.add_argument("--trace", default=None, help="trace CSV output path")
    p.add_argument("--signals", default=None, help="signal CSV output path")
    p.add_argument("--gantt", default=None,
                   help="gantt output path ('-' = stdout ascii, *.svg = svg)")
    p.add_argument("--gantt-mode", choices=("task", "runnable"), default="task")
    p.add_argument("--fail-on-miss", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="diff zero-time against timed signals")
    p.add_argument("model")
    p.add_argument("signal", nargs="*", help="signals to watch (default: all)")
    add_run_flags(p, with_mode=False)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("report", help="deadline and response-time summary")
    p.add_argument("model")
    add_run_flags(p)
    p.add_argument("--fail-on-miss", action="store_true")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
