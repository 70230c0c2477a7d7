"""Command line entry point: render figures for one run directory.

Usage: plots --run DIR [--figures LIST] [--strict]

Figures whose input artifacts are absent are skipped with a warning on
stderr; that only fails the invocation under --strict. A missing or
invalid run directory is always an error.
"""
from __future__ import annotations

import argparse
import sys

from .figures import FIGURES, render
from .run_dir import RunDirectory, RunDirectoryError

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plots",
        description="Render figures from a shocklab run directory.",
    )
    parser.add_argument("--run", required=True, help="run directory (manifest + CSVs)")
    parser.add_argument(
        "--figures",
        default=None,
        help=f"comma-separated subset of: {', '.join(FIGURES)} (default: all)",
    )
    parser.add_argument(
        "--strict",
        action="store_true",
        help="exit nonzero when any selected figure is skipped",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    names = None
    if args.figures is not None:
        names = [n.strip() for n in args.figures.split(",") if n.strip()]
        if not names:
            print("config error: --figures selected nothing", file=sys.stderr)
            return 2

    try:
        run = RunDirectory(args.run)
        written, skipped = render(run, names)
    except (RunDirectoryError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    for name, path in written.items():
        print(f"{name}: {path}")
    for name, reason in skipped.items():
        print(f"warning: skipped {name}: {reason}", file=sys.stderr)
    if skipped and args.strict:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
