"""plotkit KIND --in FILE [--in FILE2] --out FILE.svg"""

import argparse
import sys

from .figures import _KINDS, DataError, FigureSpec, SchemaError, render


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="plotkit",
        description="Render deterministic SVG figures from simulation CSV files",
    )
    p.add_argument("kind", choices=sorted(_KINDS))
    p.add_argument(
        "--in", dest="inputs", action="append", required=True,
        metavar="FILE", help="input CSV (repeat for two-input kinds)",
    )
    p.add_argument("--out", required=True, help="output SVG path")
    p.add_argument("--title")
    p.add_argument("--xlabel")
    p.add_argument("--ylabel")
    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    spec = FigureSpec(
        kind=args.kind,
        inputs=tuple(args.inputs),
        out=args.out,
        title=args.title,
        xlabel=args.xlabel,
        ylabel=args.ylabel,
    )
    try:
        tables = render(spec)
    except (SchemaError, DataError, OSError) as e:
        print(f"plotkit: {e}", file=sys.stderr)
        return 1
    for t in tables:
        print(f"{t.path.name}  sha256:{t.sha256}")
    print(args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
