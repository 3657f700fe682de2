import argparse
import sys

from .render import KINDS, FigureSpec, PlotError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="render",
        description="render experiment CSV tables to figure files")
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--in", dest="inputs", action="append", required=True,
                        metavar="CSV",
                        help="input CSV; pass twice for the hist kind "
                             "(histogram table, then the results table)")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--xlabel", default=None)
    parser.add_argument("--ylabel", default=None)
    parser.add_argument("--title", default=None)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    try:
        result = render(FigureSpec(kind=args.kind, inputs=tuple(args.inputs),
                                   out=args.out, xlabel=args.xlabel,
                                   ylabel=args.ylabel, title=args.title))
    except PlotError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    print(f"wrote {result['out']}")
    return 0


def main_entry():
    sys.exit(main(sys.argv[1:]))


if __name__ == "__main__":
    main_entry()
