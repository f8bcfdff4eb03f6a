"""qsweld-plots render --bundle PATH --figure NAME --out FILE."""

from __future__ import annotations

import argparse
import sys

from .reader import MissingData, UnknownFigure
from .render import FIGURES, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="qsweld-plots")
    sub = parser.add_subparsers(dest="action", required=True)
    r = sub.add_parser("render", help="render a figure from a bundle")
    r.add_argument("--bundle", required=True)
    r.add_argument("--figure", required=True,
                   help=f"one of {', '.join(FIGURES)}")
    r.add_argument("--out", required=True)
    r.add_argument("--container", default="F.qwgr",
                   help="grid container for the gridimage figure")
    args = parser.parse_args(argv)

    options = {}
    if args.figure == "gridimage":
        options["container"] = args.container
    try:
        render(args.bundle, args.figure, out=args.out, **options)
    except (MissingData, UnknownFigure) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
