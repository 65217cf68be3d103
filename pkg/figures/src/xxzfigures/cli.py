"""Figure regeneration tool: one subcommand per figure kind, reading the
artifact directories written by the simulation CLI."""

import argparse
import sys

from .artifacts import SchemaError
from .render import PlotSpec, render

KINDS = ("heatmap", "timeseries", "scaling", "boundary", "gap", "filling", "sphere")


def build_parser():
    parser = argparse.ArgumentParser(prog="xxzfigures",
                                     description="Regenerate figures from artifacts")
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in KINDS:
        p = sub.add_parser(kind)
        p.add_argument("--artifacts", required=True, help="artifact directory")
        p.add_argument("--out", required=True, help="output image path")
        if kind in ("heatmap", "timeseries"):
            p.add_argument("--size", type=int, default=None)
        if kind == "timeseries":
            p.add_argument("--alpha", type=float, default=None)
        if kind == "sphere":
            p.add_argument("--time-tag", default=None)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    options = {k: v for k, v in vars(args).items()
               if k not in ("kind", "artifacts", "out") and v is not None}
    options = {k.replace("-", "_"): v for k, v in options.items()}
    spec = PlotSpec(kind=args.kind, artifacts=args.artifacts, out=args.out,
                    options=options)
    try:
        result = render(spec)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 3
    except FileNotFoundError as exc:
        print(f"missing input: {exc}", file=sys.stderr)
        return 2
    path = result[0] if isinstance(result, tuple) else result
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
