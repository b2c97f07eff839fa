# ============================================================================
# GRAPH EDGES
# File: src/orchestrator/graph_edges.py
# Purpose: Define routing logic between nodes
# ============================================================================

from src.orchestrator.pipeline_state import PipelineState


def route_after_build(state: PipelineState) -> str:
    """
    After build, decide next step.

    If the domain objects were built → compute
    Otherwise → error handler
    """
    if state.get("context") is not None and not state.get("build_error"):
        return "compute_task"
    return "handle_error"


def route_after_compute(state: PipelineState) -> str:
    """
    After compute, decide next step.

    If the task finished → run property checks
    If a module raised → error handler (partial results are kept)
    """
    if not state.get("compute_error"):
        return "run_checks"
    return "handle_error"
