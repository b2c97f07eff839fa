# ============================================================================
# GRAPH NODES
# File: src/orchestrator/graph_nodes.py
# Purpose: Implement each step of the run pipeline as a node
# ============================================================================

import json
import logging
import re
import time
from pathlib import Path
from typing import Any, Dict

from src import __version__
from src.errors import PressureForgeError
from src.orchestrator.config import (
    build_measures,
    build_params,
    build_pool,
    build_potential,
    build_system,
    build_target,
    config_hash,
)
from src.orchestrator.formatter import Formatter
from src.orchestrator.guardrails import PROPERTY_GUARDRAILS, check_guardrails
from src.orchestrator.pipeline_state import PipelineState
from src.orchestrator.result_cache import ResultCache
from src.orchestrator.tables import write_table
from src.orchestrator.tasks import TASK_RUNNERS, TaskContext, TaskOutput, oracle_gaps
from src.systems.spaces import describe

logger = logging.getLogger(__name__)

TOOL_NAME = "naifs-pressure-forge"
REPORT_FILE = "report.json"
SUMMARY_FILE = "summary.md"
TABLES_DIR = "tables"


async def build_context_node(state: PipelineState) -> PipelineState:
    """
    NODE 1: Build the domain objects the task runs on

    Input: config, cache_dir, workers
    Output: context, build_error, failed_step
    """
    config = state["config"]
    logger.info(f"[build_context] Building system for task '{config.task.kind}'")
    try:
        system = build_system(config)
        sample = build_target(config).sample(system.space)
        state["context"] = TaskContext(
            config=config,
            system=system,
            potential=build_potential(config, system),
            target=build_target(config),
            sample=sample,
            pool=build_pool(config, system, sample),
            params=build_params(config, state.get("workers", 1)),
            measures=build_measures(config, system, sample),
            cache=ResultCache(state["cache_dir"]),
        )
        ctx = state["context"]
        schedule = "constant" if system.is_constant else f"{len(system.preamble)}+{len(system.period)}"
        logger.info(
            f"[build_context] ✓ {describe(system.space)}, schedule {schedule}, "
            f"sample={len(ctx.sample)} pool={len(ctx.pool)} measures={len(ctx.measures)}"
        )
    except (PressureForgeError, ValueError) as e:
        state["context"] = None
        state["build_error"] = f"{type(e).__name__}: {e}"
        state["error_messages"].append(f"Build failed: {state['build_error']}")
        state["failed_step"] = "build"
        logger.error(f"[build_context] ✗ {e}")
    return state


async def compute_task_node(state: PipelineState) -> PipelineState:
    """
    NODE 2: Run the task through the result cache

    Input: context
    Output: results, tables, properties, compute_error, failed_step
    """
    ctx = state["context"]
    kind = ctx.config.task.kind
    logger.info(f"[compute_task] Running {kind}")
    out = TaskOutput()
    try:
        TASK_RUNNERS[kind](ctx, out)
        logger.info(f"[compute_task] ✓ {kind} finished ({len(out.results)} result(s), {len(out.tables)} table(s))")
    except Exception as e:
        state["compute_error"] = f"{type(e).__name__}: {e}"
        state["error_messages"].append(f"Task '{kind}' failed: {state['compute_error']}")
        state["failed_step"] = "compute"
        logger.error(f"[compute_task] ✗ {kind}: {e}")
        logger.debug("traceback", exc_info=True)
    state["results"] = out.results
    state["tables"] = out.tables
    state["properties"] = out.properties
    return state


async def run_checks_node(state: PipelineState) -> PipelineState:
    """
    NODE 3: Evaluate the property guardrails

    Input: properties, results
    Output: checks, checks_passed, pipeline_status
    """
    logger.info("[run_checks] Evaluating properties")
    props = dict(state.get("properties", {}))
    gaps = oracle_gaps(state.get("results", {}))
    if gaps:
        props["oracle_gaps"] = gaps
        props["oracle_tolerance"] = state["config"].task.oracle_tolerance

    all_passed, outcomes = check_guardrails(PROPERTY_GUARDRAILS, props)
    evaluated = [o for o in outcomes if o["status"] != "skipped"]
    state["checks"] = outcomes if evaluated else []
    state["checks_passed"] = all_passed if evaluated else None
    state["pipeline_status"] = "success"

    for outcome in evaluated:
        logger.info(f"  {outcome['message']}")
    if evaluated:
        marker = "✓" if all_passed else "✗"
        logger.info(f"[run_checks] {marker} {sum(o['status'] == 'pass' for o in evaluated)}/{len(evaluated)} properties passed")
    else:
        logger.info("[run_checks] no properties to evaluate")
    return state


async def handle_error_node(state: PipelineState) -> PipelineState:
    """
    NODE 4: Mark the run as failed; partial results are still persisted

    Input: error_messages, failed_step
    Output: pipeline_status
    """
    logger.error(f"[handle_error] Run failed at step '{state.get('failed_step')}'")
    for message in state.get("error_messages", []):
        logger.error(f"  {message}")
    state["pipeline_status"] = "error"
    return state


def _table_file(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name) + ".csv"


def assemble_report(state: PipelineState) -> Dict[str, Any]:
    """The machine-readable report; holds only values that are identical across reruns."""
    config = state["config"]
    results = state.get("results", {})
    formats = config.output.formats
    return {
        "tool": TOOL_NAME,
        "version": __version__,
        "config_hash": config_hash(config),
        "seed": config.seed,
        "task": config.task.kind,
        "status": "error" if state.get("pipeline_status") == "error" else "ok",
        "failed_step": state.get("failed_step"),
        "errors": list(state.get("error_messages", [])),
        "lower_bound": any(r.get("mode") == "lower-bound" for r in results.values()),
        "results": results,
        "tables": {name: f"{TABLES_DIR}/{_table_file(name)}" for name in state.get("tables", {})} if "csv" in formats else {},
        "checks": state.get("checks", []),
        "checks_passed": state.get("checks_passed"),
    }


async def persist_outputs_node(state: PipelineState) -> PipelineState:
    """
    NODE 5: Write the report, the tables and the markdown summary

    Input: results, tables, checks, pipeline_status
    Output: report, summary, written, wall_time_s
    """
    config = state["config"]
    out_dir = Path(state["output_dir"])
    logger.info(f"[persist_outputs] Writing outputs to {out_dir}")
    report = assemble_report(state)
    state["wall_time_s"] = time.perf_counter() - state.get("started_at", time.perf_counter())
    ctx = state.get("context")
    cache = {"hits": ctx.cache.hits, "misses": ctx.cache.misses, "enabled": ctx.cache.enabled} if ctx else None
    state["report"] = report
    state["summary"] = Formatter().format(report, wall_time_s=state["wall_time_s"], cache=cache)

    written = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        if "json" in config.output.formats:
            path = out_dir / REPORT_FILE
            with open(path, "w", encoding="utf-8") as f:
                json.dump(report, f, sort_keys=True, indent=2)
                f.write("\n")
            written.append(str(path))
        if "csv" in config.output.formats:
            for name, rows in state.get("tables", {}).items():
                written.append(str(write_table(out_dir / report["tables"][name], rows)))
        if "md" in config.output.formats:
            path = out_dir / SUMMARY_FILE
            path.write_text(state["summary"], encoding="utf-8")
            written.append(str(path))
        logger.info(f"[persist_outputs] ✓ {len(written)} file(s) written")
    except OSError as e:
        state["error_messages"].append(f"Could not write outputs: {e}")
        state["pipeline_status"] = "error"
        logger.error(f"[persist_outputs] ✗ {e}")
    state["written"] = written
    return state
