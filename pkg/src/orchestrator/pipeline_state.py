# ============================================================================
# PIPELINE STATE
# File: src/orchestrator/pipeline_state.py
# Purpose: Define the explicit state that flows through all nodes
# ============================================================================

import time
from typing import Any, Dict, List, Optional

from typing_extensions import TypedDict

from src.orchestrator.config import ExperimentConfig
from src.orchestrator.tasks import TaskContext


class PipelineState(TypedDict, total=False):
    """
    Explicit state passed through all nodes of one experiment run.

    Every node receives this state, modifies it, and returns it.
    """

    # ===== INPUT =====
    config: ExperimentConfig
    output_dir: str  # Directory for report.json, tables and summary.md
    cache_dir: str  # Result-cache directory
    workers: int  # Worker-pool size for independent grid cells
    started_at: float  # perf_counter at run start

    # ===== AFTER BUILD NODE =====
    context: Optional[TaskContext]  # Space, system, potential, samples, params, measures, cache
    build_error: Optional[str]

    # ===== AFTER COMPUTE NODE =====
    results: Dict[str, Dict[str, Any]]  # Result records by name
    tables: Dict[str, List[Dict[str, Any]]]  # Table rows by name
    properties: Dict[str, Any]  # Quantities the property checks read
    compute_error: Optional[str]

    # ===== AFTER CHECK NODE =====
    checks: List[Dict[str, Any]]  # One {name, status, message} per property
    checks_passed: Optional[bool]  # None when no property was evaluated

    # ===== AFTER PERSIST NODE =====
    report: Optional[Dict[str, Any]]  # Machine-readable run report
    summary: Optional[str]  # Markdown summary
    written: List[str]  # Paths of files written
    wall_time_s: float

    # ===== ERROR TRACKING (GLOBAL) =====
    pipeline_status: str  # "running" | "success" | "error"
    failed_step: Optional[str]
    error_messages: List[str]  # All errors that occurred during execution


def create_initial_state(config: ExperimentConfig, output_dir: str, cache_dir: str, workers: int = 1) -> PipelineState:
    """
    Create the initial state for a new run.

    Args:
        config: Validated experiment config
        output_dir: Where report files are written
        cache_dir: Result-cache directory
        workers: Worker-pool size

    Returns:
        Initialized PipelineState
    """
    return {
        "config": config,
        "output_dir": output_dir,
        "cache_dir": cache_dir,
        "workers": workers,
        "started_at": time.perf_counter(),
        "context": None,
        "build_error": None,
        "results": {},
        "tables": {},
        "properties": {},
        "compute_error": None,
        "checks": [],
        "checks_passed": None,
        "report": None,
        "summary": None,
        "written": [],
        "wall_time_s": 0.0,
        "pipeline_status": "running",
        "failed_step": None,
        "error_messages": [],
    }
