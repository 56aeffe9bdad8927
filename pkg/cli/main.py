import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from activities.job_activities import JobActivities
from jobs.job_registry import JOBS
from models.job_definitions import JobConfig, JobResult
from shared.config import LDP_OUTPUT_DIR

logger = logging.getLogger("ldp")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_FLAGGED = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ldp",
        description="Large-deviation rates, limit checks and tail simulation for moving averages.",
    )
    parser.add_argument("command", help=f"one of: {', '.join(JOBS)}")
    parser.add_argument("--config", required=True, type=Path, help="JSON or YAML job config")
    parser.add_argument("--out", type=Path, default=Path(LDP_OUTPUT_DIR), help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="seed for the random streams")
    parser.add_argument("--threads", type=int, default=None, help="worker cap (overrides LDP_THREADS)")
    parser.add_argument(
        "--strict", action="store_true", help="exit 3 when a result carries a numerical failure flag"
    )
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="count", default=0)
    verbosity.add_argument("-q", "--quiet", action="store_true")
    return parser


def configure_logging(verbose: int, quiet: bool) -> None:
    level = logging.WARNING if quiet else (logging.DEBUG if verbose else logging.INFO)
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), rich_tracebacks=True)],
        force=True,
    )


def _print_summary(job: JobConfig, result: JobResult, paths: List[Path]) -> None:
    table = Table(title=f"ldp {job.command}")
    table.add_column("key")
    table.add_column("value")
    for key, value in result.summary["result"].items():
        if isinstance(value, (list, dict)):
            continue
        table.add_row(str(key), str(value))
    table.add_row("flags", ", ".join(result.summary["flags"]) or "-")
    for path in paths:
        table.add_row("artifact", str(path))
    Console(stderr=True).print(table)


def run(job: JobConfig) -> int:
    activities = JobActivities()
    if job.command not in JOBS:
        logger.error(f"Unknown command: {job.command} (expected one of {', '.join(JOBS)})")
        return EXIT_INVALID
    try:
        result = activities.run(job)
    except ValueError as e:  # LdpError, bad enum values in the config
        logger.error(str(e))
        return EXIT_INVALID
    paths = activities.write_artifacts(job, result)
    if job.verbosity >= 0:
        _print_summary(job, result, paths)
    failures = activities.strict_failures(result)
    if job.strict and failures:
        logger.error(f"Numerical flags under --strict: {', '.join(failures)}")
        return EXIT_FLAGGED
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose, args.quiet)
    job = JobConfig(
        command=args.command,
        config_path=args.config,
        output_dir=args.out,
        seed=args.seed,
        threads=args.threads,
        strict=args.strict,
        verbosity=-1 if args.quiet else args.verbose,
    )
    return run(job)


if __name__ == "__main__":
    sys.exit(main())
