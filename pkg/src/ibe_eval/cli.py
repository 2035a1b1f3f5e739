"""Command line entry point.

    ibe-eval <stage> --config <path> [--force] [--examples id1,id2]
                     [--features consistency,depth,...]
    ibe-eval run --config <path>      # all stages in order
    ibe-eval plot --config <path>     # render figures from the report series

Exit codes: 0 success, 1 usage error, 2 data error, 3 upstream-service error.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .config import load_config
from .errors import DataError, UpstreamError, UsageError
from .pipeline import STAGES, StageRunner


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # usage problems exit 1, not argparse's 2
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="ibe-eval", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in (*STAGES, "run", "plot"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="pipeline config file")
        if name not in ("plot",):
            p.add_argument("--force", action="store_true", help="rebuild even if cached")
            p.add_argument("--examples", default="", help="comma-separated example ids to keep")
            p.add_argument(
                "--features",
                default="",
                help="comma-separated feature subset for fitting/selection",
            )
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        config = load_config(args.config)
        if args.command == "plot":
            from .plots import render_figures

            for path in render_figures(config.run_dir):
                print(path)
            return 0
        if args.features:
            subset = tuple(n.strip() for n in args.features.split(",") if n.strip())
            config = dataclasses.replace(config, fit_features=subset)
        example_ids = [e.strip() for e in args.examples.split(",") if e.strip()]
        runner = StageRunner(config, force=args.force, example_ids=example_ids)
        if args.command == "run":
            artifact = runner.run_all()
        else:
            artifact = runner.run(args.command)
        print(artifact)
        return 0
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except UpstreamError as exc:
        print(f"upstream error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
