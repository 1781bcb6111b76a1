"""Command line entry point: ``shiftlab {classify,compare,curves,sample}``."""
from __future__ import annotations

import argparse
import sys

from .errors import ShiftlabError
from .report import EXIT_ERROR, RUNNERS, bundled_examples, dump_json, load_config


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shiftlab",
        description="Classify weighted backward shifts and compare their invariant measures.",
        epilog="Bundled examples: " + ", ".join(bundled_examples()),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("classify", "hypercyclicity, mixing, chaos and invariant measures"),
                       ("compare", "orthogonality report for a pair of shifts"),
                       ("curves", "CSV tables of autocorrelations, Theta and H_n"),
                       ("sample", "draw vectors from an invariant product measure")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, help="config JSON path or bundled example name")
        p.add_argument("--out", default=".", help="output directory (default: current directory)")
        p.add_argument("--seed", type=int, default=None, help="random seed, overrides the config")
        p.add_argument("--horizon", type=int, default=None, help="number of weights inspected")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.horizon, args.seed)
        report, code = RUNNERS[args.command](cfg, args.out)
    except ShiftlabError as exc:
        print(f"shiftlab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.command in ("classify", "compare"):
        sys.stdout.write(dump_json({k: report[k] for k in ("name", "example", "summary") if k in report}))
    else:
        sys.stdout.write(dump_json(report))
    return code


if __name__ == "__main__":
    sys.exit(main())
