"""Command line: run, validate, plot."""
from __future__ import annotations

import argparse
import sys

from .config import ConfigError, load, validate
from .output import plot_csv
from .runner import run


def _run(args) -> int:
    try:
        cfg = load(args.config)
    except ConfigError as exc:
        for d in exc.diagnostics:
            print(f"error: {d}", file=sys.stderr)
        return 2
    manifest = run(cfg, args.out, args.workers)
    for task in manifest["tasks"]:
        line = f"{task['name']}: {task['status']}"
        if "error" in task:
            line += f" ({task['error']})"
        print(line)
    print(f"outputs written to {args.out or cfg.output}")
    return 0 if manifest["status"] == "ok" else 1


def _validate(args) -> int:
    problems = validate(args.config)
    for p in problems:
        print(p)
    if not problems:
        print("ok")
    return 1 if problems else 0


def _plot(args) -> int:
    try:
        path = plot_csv(args.csv, args.log_y, args.output)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qchaos", description="Quantum chaos diagnostics batch runner")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run an experiment config")
    p.add_argument("config")
    p.add_argument("--out", default=None, help="output directory (overrides the config)")
    p.add_argument("--workers", type=int, default=1, help="concurrent sub-tasks")
    p.set_defaults(func=_run)
    p = sub.add_parser("validate", help="check a config without running it")
    p.add_argument("config")
    p.set_defaults(func=_validate)
    p = sub.add_parser("plot", help="SVG line plot of a CSV")
    p.add_argument("csv")
    p.add_argument("--log-y", action="store_true")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "workers", 1) < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return 2
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
