"""seqmix-plot command line: render one figure kind from one CSV file."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .plots import FigureKind, FigureSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seqmix-plot",
        description="Render figures from seqmix experiment CSV outputs.",
    )
    parser.add_argument(
        "figure", choices=[k.value for k in FigureKind], help="figure kind"
    )
    parser.add_argument("--in", dest="input", required=True, help="input CSV file")
    parser.add_argument("--out", dest="output", required=True, help="output image file")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = FigureSpec(Path(args.input), FigureKind(args.figure), Path(args.output))
    try:
        render(spec)
    except (SchemaError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io-error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
