"""Command-line entry point.

    netwell <stage> --config run.json --out outdir [--seed N] [--threads N]
                    [--threshold R]

Stages: synth | ingest | graph | features | analyze | train | report | all.
Each stage is idempotent, reads its predecessors' artifacts from the
output directory, and refuses to run on artifacts built under a different
configuration. Log verbosity comes from the NETWELL_LOG environment
variable (DEBUG/INFO/WARNING/ERROR; default WARNING).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .config import RunConfig
from .errors import (
    BudgetError,
    ConfigError,
    DataError,
    InputError,
    InternalContradictionError,
    NetwellError,
    SchemaError,
    StaleArtifactError,
)
from .pipeline import STAGE_FUNCS, run_all, run_stage

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_DATA = 4
EXIT_BUDGET = 5
EXIT_STALE = 6

_EXIT_BY_ERROR = [
    (ConfigError, EXIT_CONFIG),
    (InputError, EXIT_IO),
    (SchemaError, EXIT_DATA),
    (DataError, EXIT_DATA),
    (InternalContradictionError, EXIT_DATA),
    (BudgetError, EXIT_BUDGET),
    (StaleArtifactError, EXIT_STALE),
]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="netwell",
        description="weekly social-network + wearable analytics pipeline",
    )
    parser.add_argument("stage", choices=[*STAGE_FUNCS, "all"], help="pipeline stage to run")
    parser.add_argument("--config", required=True, help="path to the run config (JSON or TOML)")
    parser.add_argument("--out", required=True, help="output directory for stage artifacts")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--threads", type=int, default=1, help="bound on internal parallelism")
    parser.add_argument("--threshold", type=float, default=None,
                        help="override the correlation census threshold")
    return parser


def _configure_logging() -> None:
    level = os.environ.get("NETWELL_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    args = _build_parser().parse_args(argv)
    try:
        cfg = RunConfig.from_file(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
            cfg.split = {**cfg.split, "seed": args.seed}
        if args.threshold is not None:
            if not (0.0 < args.threshold <= 1.0):
                raise ConfigError("--threshold must be in (0, 1]")
            cfg.correlation_threshold = args.threshold
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.stage == "all":
            run_all(cfg, out, args.threads)
        else:
            run_stage(args.stage, cfg, out, args.threads)
    except NetwellError as exc:
        for err_type, code in _EXIT_BY_ERROR:
            if isinstance(exc, err_type):
                print(f"netwell: error: {exc}", file=sys.stderr)
                return code
        print(f"netwell: error: {exc}", file=sys.stderr)
        return EXIT_UNEXPECTED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
