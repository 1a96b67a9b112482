"""
Command-line entry point for the conformal energy toolkit
"""
import argparse
import logging
import sys
import time
from typing import List, Optional, Sequence

from config import settings
from conformal_energy.errors import ConformalEnergyError
from energy_cli import commands  # noqa: F401  registers the subcommands
from energy_cli.commands.registry import COMMANDS, Command
from energy_cli.reports import FORMATS, RunConfig, build_report, load_config_file, write_report, write_timings

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def setup_logging(level: str = settings.LOG_LEVEL) -> None:
    """Log to LOG_FILE (when set) and stderr; stdout is reserved for reports."""
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if settings.LOG_FILE:
        handlers.insert(0, logging.FileHandler(settings.LOG_FILE))
    logging.basicConfig(level=level.upper(), format=LOG_FORMAT, handlers=handlers)


# ----------------------------
# Parser
# ----------------------------
def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--map", help="map expression, e.g. mobius:a=0.5+0i,rot=0")
    parser.add_argument("--n", type=int, help="quadrature nodes")
    parser.add_argument("--scheme", help="midpoint-subtracted or midpoint-excluded")
    parser.add_argument("--refine", type=int, help="grid halvings used for the error estimate")
    parser.add_argument("--M", dest="M", type=int, help="Fourier truncation")
    parser.add_argument("--sampling-factor", dest="sampling_factor", type=int, help="FFT samples per mode")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--output", "-o", help="report path (stdout when omitted)")
    parser.add_argument("--format", choices=FORMATS)
    parser.add_argument("--config", dest="config_file", help="JSON file with RunConfig values")
    parser.add_argument("--log-level", dest="log_level")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="conformal-energy",
        description="Conformal energy of circle homeomorphisms",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in sorted(COMMANDS):
        entry = COMMANDS[name]
        sub = subparsers.add_parser(name, help=entry.help, description=entry.help)
        _add_common(sub)
        for flags, kwargs in entry.arguments:
            sub.add_argument(*flags, **kwargs)
    return parser


def _config_from_args(entry: Command, args: argparse.Namespace) -> RunConfig:
    values = {k: v for k, v in vars(args).items() if k not in ("command", "config_file", "log_level")}
    file_values = load_config_file(args.config_file) if args.config_file else None
    return RunConfig.from_sources(entry.name, entry.option_names, file_values, values)


# ----------------------------
# Run
# ----------------------------
def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse arguments, execute one subcommand and write its report.

    Returns:
        0 on success, 1 when a suite criterion fails, 2 on configuration
        errors and 3 on numerical failures
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.log_level:
        logging.getLogger().setLevel(args.log_level.upper())

    entry = COMMANDS[args.command]
    config = None
    started = time.perf_counter()
    try:
        config = _config_from_args(entry, args)
        logger.info("Running %s on %s", entry.name, config.map)
        outcome = entry.handler(config)
    except ConformalEnergyError as exc:
        logger.error("%s failed: %s", entry.name, exc.message)
        config = config or RunConfig(command=entry.name)
        report = exc.to_report()
        report.update({"command": entry.name, "config": config.to_dict()})
        config.format = "json"
        write_report(config, report)
        return exc.exit_code

    elapsed = time.perf_counter() - started
    report = build_report(config, outcome.result, success=outcome.passed)
    write_report(config, report, outcome.frame)
    write_timings(config, {"total": elapsed})
    if not outcome.passed:
        logger.error("%s: one or more criteria failed", entry.name)
        return 1
    return 0


def main():
    """Main entry point for the command line"""
    setup_logging()
    try:
        sys.exit(run())
    except KeyboardInterrupt:
        logger.info("Stopped by user")
        sys.exit(0)
    except Exception as e:
        logger.error(f"Error running command: {e}")
        sys.exit(3)


if __name__ == "__main__":
    main()
