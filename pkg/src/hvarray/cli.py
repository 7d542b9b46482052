"""Batch command-line front end.

    hvarray <subcommand> [--config FILE] [--out FILE] [--override k=v]...

Subcommands: read, write, form, iv-sweep, fig5, fig6.  Each runs one
experiment and writes one CSV.  Exit codes: 0 success, 2 bad config or
an operation that would stress a gate beyond its rating, 3 solver
non-convergence, 4 forming did not complete (the trace is still
written).
"""

from __future__ import annotations

import argparse
import sys

from .config import load_config
from .csvio import write_file
from .errors import HvArrayError, NonConvergenceError
from .experiments import RUNNERS, forming_succeeded

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NO_CONVERGENCE = 3
EXIT_FORMING_FAILED = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hvarray",
        description="Characterisation experiments on the simulated 2T1R array",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("read", "single read pulse, current and both resistance estimates"),
        ("write", "set or reset pulse with compliance flags and final state"),
        ("form", "staircase electroforming of one bistable pixel"),
        ("iv-sweep", "quasi-static I-V sweep at the addressed pixel"),
        ("fig5", "read and program transients on the default targets"),
        ("fig6", "log-spaced readout-error sweep on a Kelvin pixel"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=None, metavar="FILE",
                       help="key=value config file")
        p.add_argument("--out", default=f"{name}.csv", metavar="FILE",
                       help="output CSV path (default %(default)s)")
        p.add_argument("--override", action="append", default=[],
                       metavar="KEY=VALUE", help="override one config key")
        p.add_argument("--seed", type=int, default=None,
                       help="reserved for stochastic device models; "
                            "validated and ignored")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed is not None and args.seed < 0:
        print("error: --seed must be non-negative", file=sys.stderr)
        return EXIT_CONFIG
    try:
        config = load_config(args.config, tuple(args.override))
        trace = RUNNERS[args.command](config)
    except NonConvergenceError as exc:
        print(f"error: solver did not converge: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except HvArrayError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    write_file(args.out, trace)
    if args.command == "form" and not forming_succeeded(trace):
        print(f"forming failed; trace written to {args.out}", file=sys.stderr)
        return EXIT_FORMING_FAILED
    print(f"{args.command}: {len(trace.rows)} rows -> {args.out}")
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
