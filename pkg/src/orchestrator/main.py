# ============================================================================
# CLI ENTRY POINT
# File: src/orchestrator/main.py
# Purpose: run / check / sweep / show verbs on top of the run pipeline
# ============================================================================

"""
Command-line entry point.

    python -m src.orchestrator.main run configs/two_shift.toml
    python -m src.orchestrator.main check
    python -m src.orchestrator.main sweep configs/circle_e2.toml --output results/sweep
    python -m src.orchestrator.main show results/two_shift/report.json

Exit codes: 0 success, 1 config validation error, 2 runtime or module error,
3 property-check failure.
"""

import argparse
import asyncio
import itertools
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

from src.errors import ConfigValidationError
from src.orchestrator.config import (
    ExperimentConfig,
    apply_overrides,
    cache_dir_from_env,
    config_from_dict,
    load_raw,
    parse_config,
    workers_from_env,
)
from src.orchestrator.formatter import Formatter
from src.orchestrator.pipeline_graph import run_pipeline
from src.orchestrator.tables import write_table

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID_CONFIG = 1
EXIT_RUNTIME_ERROR = 2
EXIT_CHECKS_FAILED = 3

BUNDLED_CONFIGS = Path(__file__).resolve().parent.parent.parent / "configs"
SWEEP_INDEX = "sweep_index.csv"


def configure_logging(verbose: bool = False, quiet: bool = False):
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[logging.StreamHandler(sys.stdout)],
        force=True,
    )


def exit_code_for(state: Dict[str, Any]) -> int:
    """Map a final pipeline state to a process exit code."""
    if state.get("pipeline_status") == "error":
        return EXIT_RUNTIME_ERROR
    if state.get("checks_passed") is False:
        return EXIT_CHECKS_FAILED
    return EXIT_OK


def _log_validation_errors(source: str, error: ConfigValidationError):
    logger.error(f"✗ {source}: {len(error.errors)} config error(s)")
    for message in error.errors:
        logger.error(f"  - {message}")


def run_experiment(config: ExperimentConfig, output_dir: str, workers: int, cache_dir: Optional[str] = None) -> Dict[str, Any]:
    """Run one validated config through the pipeline and return the final state."""
    return asyncio.run(run_pipeline(config, output_dir, cache_dir or cache_dir_from_env(), workers))


# ============================================================================
# VERBS
# ============================================================================

def cmd_run(args) -> int:
    try:
        config = parse_config(args.config)
    except ConfigValidationError as e:
        _log_validation_errors(args.config, e)
        return EXIT_INVALID_CONFIG
    output_dir = args.output or config.output.directory
    state = run_experiment(config, output_dir, args.workers)
    for path in state.get("written", []):
        logger.info(f"  wrote {path}")
    return exit_code_for(state)


def cmd_check(args) -> int:
    """Run every bundled config; the worst exit code wins."""
    config_dir = Path(args.configs)
    paths = sorted(config_dir.glob("*.toml"))
    if not paths:
        logger.error(f"No configs found in {config_dir}")
        return EXIT_INVALID_CONFIG

    root = Path(args.output or "results/check")
    outcomes = []
    for path in paths:
        try:
            config = parse_config(path)
        except ConfigValidationError as e:
            _log_validation_errors(str(path), e)
            outcomes.append((path.stem, EXIT_INVALID_CONFIG))
            continue
        state = run_experiment(config, str(root / path.stem), args.workers)
        outcomes.append((path.stem, exit_code_for(state)))

    logger.info("=" * 60)
    logger.info("ACCEPTANCE SUITE")
    logger.info("=" * 60)
    for name, code in outcomes:
        marker = "✓" if code == EXIT_OK else "✗"
        logger.info(f"  {marker} {name} (exit {code})")
    return max(code for _, code in outcomes)


def sweep_points(parameters: Dict[str, List[Any]]) -> List[Dict[str, Any]]:
    """Cartesian product of the sweep parameters, in key order then value order."""
    keys = list(parameters)
    return [dict(zip(keys, values)) for values in itertools.product(*(parameters[k] for k in keys))]


def cmd_sweep(args) -> int:
    try:
        raw = load_raw(args.config)
        base = config_from_dict(raw)
    except ConfigValidationError as e:
        _log_validation_errors(args.config, e)
        return EXIT_INVALID_CONFIG
    if base.sweep is None or not base.sweep.parameters:
        logger.error(f"✗ {args.config}: the sweep verb needs a [sweep] section with parameters")
        return EXIT_INVALID_CONFIG

    points = sweep_points(base.sweep.parameters)
    raw = {k: v for k, v in raw.items() if k != "sweep"}
    root = Path(args.output or base.output.directory)
    logger.info(f"Sweeping {len(points)} point(s) over {', '.join(base.sweep.parameters)}")

    # validate every point before spending time on any of them
    configs = []
    for i, overrides in enumerate(points):
        try:
            configs.append(config_from_dict(apply_overrides(raw, overrides)))
        except ConfigValidationError as e:
            _log_validation_errors(f"sweep point {i} {overrides}", e)
            return EXIT_INVALID_CONFIG

    rows = []
    worst = EXIT_OK
    for i, (overrides, config) in enumerate(zip(points, configs)):
        out_dir = root / f"sweep-{i:03d}"
        state = run_experiment(config, str(out_dir), args.workers)
        code = exit_code_for(state)
        worst = max(worst, code)
        row = {"index": i, "directory": out_dir.name, "status": state.get("pipeline_status"), "exit_code": code}
        row.update({key: json.dumps(value) for key, value in overrides.items()})
        for name, record in state.get("results", {}).items():
            if isinstance(record.get("value"), (int, float)):
                row[name] = float(record["value"])
        rows.append(row)

    index = write_table(root / SWEEP_INDEX, rows)
    logger.info(f"✓ Sweep index written to {index}")
    return worst


def cmd_show(args) -> int:
    path = Path(args.report)
    try:
        report = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        logger.error(f"✗ Could not read report {path}: {e}")
        return EXIT_RUNTIME_ERROR
    print(Formatter().format(report))
    if report.get("status") == "error":
        return EXIT_RUNTIME_ERROR
    return EXIT_CHECKS_FAILED if report.get("checks_passed") is False else EXIT_OK


# ============================================================================
# PARSER
# ============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Topological pressure of non-autonomous iterated function systems",
        epilog=(
            "Critical values default to grids.estimator = \"growth\": the exponent at which the cover cost "
            "stops changing between the two largest N. Set grids.estimator = \"crossing\" for the exponent "
            "where the cost at the largest N equals 1."
        ),
    )
    parser.add_argument("--verbose", action="store_true", help="Log at DEBUG level")
    parser.add_argument("--quiet", action="store_true", help="Log warnings and errors only")
    sub = parser.add_subparsers(dest="verb", required=True)

    run = sub.add_parser("run", help="Run one experiment config")
    run.add_argument("config", help="Path to a TOML experiment config")
    run.set_defaults(func=cmd_run)

    check = sub.add_parser("check", help="Run the bundled acceptance suite")
    check.add_argument("--configs", default=str(BUNDLED_CONFIGS), help="Directory of TOML configs (default: bundled configs)")
    check.set_defaults(func=cmd_check)

    sweep = sub.add_parser("sweep", help="Cartesian parameter sweep over a config's [sweep] section")
    sweep.add_argument("config", help="Path to a TOML experiment config with a [sweep] section")
    sweep.set_defaults(func=cmd_sweep)

    show = sub.add_parser("show", help="Print the summary of a report.json")
    show.add_argument("report", help="Path to a report.json")
    show.set_defaults(func=cmd_show)

    for verb in (run, check, sweep):
        verb.add_argument("--output", default=None, help="Output directory (overrides [output].directory)")
        verb.add_argument("--workers", type=int, default=None, help="Worker-pool size (default: PRESSURE_WORKERS or 1)")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """CLI entry point."""
    load_dotenv()
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose, args.quiet)
    if getattr(args, "workers", None) is None:
        args.workers = workers_from_env()
    args.workers = max(1, args.workers)

    try:
        return args.func(args)
    except KeyboardInterrupt:
        logger.warning("Interrupted by user.")
        return EXIT_RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())
