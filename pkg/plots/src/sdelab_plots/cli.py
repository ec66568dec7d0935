"""Standalone figure-rendering script: --in artifact(s), --out image, --kind."""

from __future__ import annotations

import argparse
import sys
from typing import Optional

from .render import FIGURE_KINDS, FigureSpec, SchemaError, render


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="sdelab-plots",
        description="Render sdelab CSV/JSON artifacts into static SVG figures",
    )
    parser.add_argument(
        "--in",
        dest="inputs",
        action="append",
        required=True,
        metavar="PATH",
        help="input artifact; repeat to add a summary.json for annotations",
    )
    parser.add_argument("--out", required=True, help="output SVG path")
    parser.add_argument("--kind", required=True, choices=sorted(FIGURE_KINDS))
    args = parser.parse_args(argv)
    try:
        render(FigureSpec(inputs=tuple(args.inputs), kind=args.kind, output=args.out))
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
