"""Command line entry point.

One subcommand per pipeline stage plus ``all``.  The config file comes
from ``--config`` or the ``INCITE_CONFIG`` environment variable.  Exit
codes: 0 success, 2 configuration error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .errors import ConfigError, DataError, NumericError
from .pipeline import STAGE_ORDER, make_context, run_all, run_stage

CONFIG_ENV_VAR = "INCITE_CONFIG"

_STAGE_HELP = {
    "ingest": "parse tweet and user inputs into artifacts",
    "classify-events": "assign each tweet to an event by keyword match",
    "filter": "select dangerous speech candidates per event",
    "kappa": "resolve annotations and report inter-annotator agreement",
    "build-graph": "build per-event and merged retweet graphs",
    "dab": "diffuse dangerous tweet counts into amplification scores",
    "classify": "split scores into danger categories with natural breaks",
    "polarity": "compute retweet and follower polarity per user",
    "centrality": "compute indegree, harmonic closeness, and eigenvector scores",
    "stats": "run the regression / ANOVA / HSD / median battery",
    "terms": "report configured term frequency ratios",
    "export-gexf": "export annotated networks as GEXF (and optionally DOT)",
    "report": "assemble the summary report",
    "all": "run every stage in order",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config",
        help=f"run configuration YAML (default: ${CONFIG_ENV_VAR})",
    )
    common.add_argument("--out", help="override the configured output directory")
    common.add_argument("--event", help="restrict per-event stages to one event")
    common.add_argument("--seed", type=int, help="override the configured RNG seed")
    common.add_argument(
        "--threads", type=int, help="upper bound on worker threads (advisory)"
    )
    common.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="increase log verbosity (repeatable)",
    )
    parser = argparse.ArgumentParser(
        prog="incite",
        description="Quantify dangerous speech propagation in retweet networks.",
        parents=[common],
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name in (*STAGE_ORDER, "all"):
        sub.add_parser(name, help=_STAGE_HELP[name], parents=[common])
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING
    if args.verbose == 1:
        level = logging.INFO
    elif args.verbose >= 2:
        level = logging.DEBUG
    logging.basicConfig(
        level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s"
    )
    config_path = args.config or os.environ.get(CONFIG_ENV_VAR)
    try:
        if not config_path:
            raise ConfigError(
                f"no config given: pass --config or set ${CONFIG_ENV_VAR}"
            )
        ctx = make_context(
            config_path,
            out_dir=args.out,
            event=args.event,
            seed=args.seed,
            threads=args.threads,
        )
        if args.command == "all":
            run_all(ctx)
        else:
            run_stage(ctx, args.command)
    except ConfigError as exc:
        print(f"incite: config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"incite: data error: {exc}", file=sys.stderr)
        return 3
    except (NumericError, ValueError, ArithmeticError) as exc:
        print(f"incite: numeric failure: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"incite: data error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
