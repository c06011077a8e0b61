"""``trp <command> --config <path> [--set key=value ...] [--workers N] [--seed S] [--out <path>]``

``--config`` accepts a YAML file, a built-in preset name (``trp presets``
lists them) or a ``.jsonl`` record file, whose last record is replayed.
Records are appended to ``--out`` (default ``trp_runs.jsonl``; the directory
is replaced by ``$TRP_OUTPUT_DIR`` when set).

Exit codes: 0 success, 1 usage error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from . import runner
from .config import COMMANDS, ConfigError, load_config, preset_names
from .linalg import LinalgError
from .metrics import MetricError
from .model import ModelError
from .propagate import PropagationError
from .records import RecordError, append_record

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="trp", description="Simulate and optimise twisted-rapid-passage quantum gates.")
    p.add_argument("command", choices=COMMANDS + ("presets",))
    p.add_argument("--config", help="YAML file, preset name or .jsonl record file")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config value, e.g. --set sweep.lambda=5.9 (repeatable)")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                   help="worker processes for scans and annealing restarts")
    p.add_argument("--seed", type=int, help="optimizer seed")
    p.add_argument("--out", help="JSON-lines output file")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def run(argv=None, emit=print) -> int:
    try:
        args = build_parser().parse_args(argv)
    except _UsageError as exc:
        print(f"trp: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "presets":
        for name in preset_names():
            emit(name)
        return EXIT_OK
    if not args.config:
        print("trp: usage error: --config is required", file=sys.stderr)
        return EXIT_USAGE
    if args.workers < 1:
        print("trp: usage error: --workers must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        overrides = [f"command={args.command}"] + args.overrides
        cfg = load_config(args.config, overrides, seed=args.seed, workers=args.workers, out=args.out)
    except (ConfigError, RecordError, OSError) as exc:
        print(f"trp: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if cfg.command == "simulate":
            records = runner.cmd_simulate(cfg, emit)
        elif cfg.command == "optimize":
            records = runner.cmd_optimize(cfg, emit)
        elif cfg.command == "scan":
            records = runner.cmd_scan(cfg, emit, workers=args.workers)
        elif cfg.command == "converge":
            records = runner.cmd_converge(cfg, emit)
        else:
            records = runner.cmd_report(cfg, emit)
    except ConfigError as exc:
        print(f"trp: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (LinalgError, ModelError, PropagationError, MetricError, FloatingPointError) as exc:
        print(f"trp: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    for rec in records:
        append_record(cfg.output_path, rec)
    emit(f"wrote {len(records)} record(s) to {cfg.output_path}")
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
