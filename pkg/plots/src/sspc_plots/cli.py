"""`plot` command line: render figures from sspc trace CSV files.

    plot traces    --in run/ell_1/trace.csv run/ell_2/trace.csv --out traces.svg
    plot residuals --in run/ell_1/trace.csv run/ell_2/trace.csv --out residuals.svg
"""
from __future__ import annotations

import argparse
import sys

from .frames import SchemaError
from .render import (INPUT_BOUND_DEFAULT, RATE_BOUND_DEFAULT, plot_residuals,
                     plot_traces)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plot", description="Render figures from sspc trace CSVs")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("traces", "residuals"):
        sp = sub.add_parser(name)
        sp.add_argument("--in", dest="inputs", nargs="+", required=True,
                        metavar="CSV", help="one or more trace.csv files")
        sp.add_argument("--out", required=True, help="output image (svg/pdf)")
        if name == "traces":
            sp.add_argument("--rate-bound", type=float,
                            default=RATE_BOUND_DEFAULT)
            sp.add_argument("--input-bound", type=float,
                            default=INPUT_BOUND_DEFAULT)
    args = parser.parse_args(argv)
    try:
        if args.command == "traces":
            out = plot_traces(args.inputs, args.out,
                              rate_bound=args.rate_bound,
                              input_bound=args.input_bound)
        else:
            out = plot_residuals(args.inputs, args.out)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
