"""Command line front end: `plotkit render --kind trajectory --csv run.csv`."""

from __future__ import annotations

import argparse
import sys

from .figures import KINDS, FigureSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="plotkit",
                                 description="figures from billiardflow artifacts")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one figure from one CSV")
    p.add_argument("--kind", choices=KINDS, required=True)
    p.add_argument("--csv", required=True, help="input CSV (sidecar JSON is "
                   "looked up next to it)")
    p.add_argument("--out", required=True, help="output image path")
    p.add_argument("--title")
    p.add_argument("--dpi", type=int, default=150)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = FigureSpec(kind=args.kind, csv_path=args.csv, out_path=args.out,
                      title=args.title, dpi=args.dpi)
    try:
        out = render(spec)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"missing input: {exc}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
