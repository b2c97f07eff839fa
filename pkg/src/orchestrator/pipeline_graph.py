# ============================================================================
# PIPELINE GRAPH
# File: src/orchestrator/pipeline_graph.py
# Purpose: Create and compile the StateGraph
# ============================================================================

import logging

from langgraph.graph import END, StateGraph

from src.orchestrator.config import ExperimentConfig
from src.orchestrator.graph_edges import route_after_build, route_after_compute
from src.orchestrator.graph_nodes import (
    build_context_node,
    compute_task_node,
    handle_error_node,
    persist_outputs_node,
    run_checks_node,
)
from src.orchestrator.pipeline_state import PipelineState, create_initial_state

logger = logging.getLogger(__name__)


def create_pipeline_graph():
    """
    Create the run pipeline as a LangGraph StateGraph.

    Structure:
    build_context → compute_task → run_checks → persist_outputs → END
          ↓               ↓                          ↑
          └──────→ handle_error ─────────────────────┘

    Returns:
        Compiled StateGraph ready for execution
    """
    graph = StateGraph(PipelineState)

    # ===== ADD NODES =====
    graph.add_node("build_context", build_context_node)
    graph.add_node("compute_task", compute_task_node)
    graph.add_node("run_checks", run_checks_node)
    graph.add_node("handle_error", handle_error_node)
    graph.add_node("persist_outputs", persist_outputs_node)

    # ===== ADD EDGES =====
    graph.add_conditional_edges(
        "build_context",
        route_after_build,
        {
            "compute_task": "compute_task",
            "handle_error": "handle_error",
        },
    )
    graph.add_conditional_edges(
        "compute_task",
        route_after_compute,
        {
            "run_checks": "run_checks",
            "handle_error": "handle_error",
        },
    )
    graph.add_edge("run_checks", "persist_outputs")
    # failed runs still write their partial results
    graph.add_edge("handle_error", "persist_outputs")
    graph.add_edge("persist_outputs", END)

    # ===== SET ENTRY POINT =====
    graph.set_entry_point("build_context")

    compiled_graph = graph.compile()
    logger.debug("[create_pipeline_graph] ✓ Graph compiled")
    return compiled_graph


# ===== SINGLETON PATTERN =====
_graph_instance = None


def get_pipeline_graph():
    """
    Get or create the singleton pipeline graph.

    Returns:
        Compiled StateGraph
    """
    global _graph_instance

    if _graph_instance is None:
        _graph_instance = create_pipeline_graph()

    return _graph_instance


async def run_pipeline(config: ExperimentConfig, output_dir: str, cache_dir: str, workers: int = 1) -> PipelineState:
    """
    Run one experiment through the pipeline.

    Args:
        config: Validated experiment config
        output_dir: Where report files are written
        cache_dir: Result-cache directory
        workers: Worker-pool size

    Returns:
        Final state after pipeline execution
    """
    graph = get_pipeline_graph()
    initial_state = create_initial_state(config, output_dir, cache_dir, workers)

    logger.info("=" * 60)
    logger.info(f"RUNNING {config.task.kind} (seed {config.seed})")
    logger.info("=" * 60)

    final_state = await graph.ainvoke(initial_state)

    logger.info("=" * 60)
    logger.info(f"PIPELINE COMPLETE - Status: {final_state.get('pipeline_status')} ({final_state.get('wall_time_s', 0.0):.2f}s)")
    logger.info("=" * 60)
    return final_state
