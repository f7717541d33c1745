"""CLI for turning runner CSVs into static figures.

Exit codes: 0 on success (including empty-but-valid input), 2 on schema or
file errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import plot_sizes, plot_tmr
from .schema import SchemaError

EXIT_OK = 0
EXIT_BAD_INPUT = 2


def _cmd_tmr(args) -> int:
    try:
        figures = plot_tmr(args.csv, args.outdir, gamma=args.gamma)
    except (SchemaError, OSError) as exc:
        print(f"plots tmr: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    for info in figures:
        for path in info["files"]:
            print(path)
    return EXIT_OK


def _cmd_sizes(args) -> int:
    try:
        info = plot_sizes(args.table, args.outdir)
    except (SchemaError, OSError) as exc:
        print(f"plots sizes: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    for path in info.get("files", ()):
        print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plots", description="Render figures from mdrefe result CSVs"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    tmr_p = sub.add_parser("tmr", help="TMR-vs-budget curves, one figure per gamma")
    tmr_p.add_argument("csv", type=Path, help="report CSV from `mdrefe run`")
    tmr_p.add_argument("outdir", type=Path)
    tmr_p.add_argument("--gamma", type=float, help="render a single gamma level")
    tmr_p.set_defaults(func=_cmd_tmr)

    sizes_p = sub.add_parser("sizes", help="planned sample size vs budget panels")
    sizes_p.add_argument("table", type=Path, help="table from `mdrefe plan --budgets ... --out`")
    sizes_p.add_argument("outdir", type=Path)
    sizes_p.set_defaults(func=_cmd_sizes)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
