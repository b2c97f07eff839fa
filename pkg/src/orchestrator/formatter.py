# ============================================================================
# FORMATTER
# File: src/orchestrator/formatter.py
# Purpose: Format run reports into a markdown summary
# ============================================================================

import logging
import math
from typing import Any, Dict, List, Optional

logger = logging.getLogger(__name__)


# ============================================================================
# HELPER FUNCTIONS
# ============================================================================

def format_value(value: Any) -> str:
    """
    Format a report value for display.

    Args:
        value: Value to format (float, list, dict, ...)

    Returns:
        Formatted string
    """
    if isinstance(value, bool) or value is None:
        return str(value)
    if isinstance(value, float):
        if math.isinf(value) or math.isnan(value):
            return str(value)
        return f"{value:.6f}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(format_value(v) for v in value) + "]"
    if isinstance(value, dict):
        return ", ".join(f"{k}: {format_value(v)}" for k, v in value.items())
    return str(value)


def format_results_section(results: Dict[str, Dict[str, Any]]) -> str:
    """
    One table row per result record.

    Records without a scalar ``value`` (sandwich, bounds, ...) list their
    remaining fields instead.
    """
    if not results:
        return ""
    lines = ["## Results\n", "| Result | Value | Bracket | Direction | Mode |", "|--------|-------|---------|-----------|------|"]
    extra: List[str] = []
    for name, record in results.items():
        if "value" in record:
            lines.append(
                f"| {name} | {format_value(record['value'])} | {format_value(record.get('bracket', ''))} "
                f"| {record.get('direction', '')} | {record.get('mode', '')} |"
            )
        else:
            extra.append(f"- **{name}**: {format_value(record)}")
    lines.append("")
    if extra:
        lines.extend(extra)
        lines.append("")
    return "\n".join(lines)


def format_checks_section(checks: List[Dict[str, Any]], passed: Optional[bool]) -> str:
    if not checks:
        return ""
    verdict = "all passed" if passed else "FAILED"
    lines = [f"## Property Checks ({verdict})\n"]
    for check in checks:
        lines.append(f"- {check['message']}")
    lines.append("")
    return "\n".join(lines)


def assemble_markdown(
    report: Dict[str, Any],
    wall_time_s: Optional[float] = None,
    cache: Optional[Dict[str, Any]] = None,
) -> str:
    """
    Assemble a run report into markdown.

    Args:
        report: Report as written to report.json
        wall_time_s: Wall time of the run, when known
        cache: Cache statistics of the run, when known

    Returns:
        Markdown formatted string
    """
    lines = [f"# Run Summary: {report.get('task', 'unknown')}\n"]

    lines.append("| Field | Value |")
    lines.append("|-------|-------|")
    lines.append(f"| Status | {report.get('status')} |")
    lines.append(f"| Tool version | {report.get('version')} |")
    lines.append(f"| Config hash | `{str(report.get('config_hash', ''))[:16]}` |")
    lines.append(f"| Seed | {report.get('seed')} |")
    if wall_time_s is not None:
        lines.append(f"| Wall time | {wall_time_s:.2f} s |")
    if cache is not None:
        state = "enabled" if cache.get("enabled") else "disabled"
        lines.append(f"| Cache | {cache.get('hits', 0)} hit(s), {cache.get('misses', 0)} miss(es), {state} |")
    lines.append("")

    if report.get("lower_bound"):
        lines.append("> Word trees were truncated (beam mode): estimates flagged `lower-bound` are lower bounds.\n")

    lines.append(format_results_section(report.get("results", {})))
    lines.append(format_checks_section(report.get("checks", []), report.get("checks_passed")))

    tables = report.get("tables", {})
    if tables:
        lines.append("## Tables\n")
        for name, path in tables.items():
            lines.append(f"- {name}: `{path}`")
        lines.append("")

    if report.get("errors"):
        lines.append("## Errors\n")
        if report.get("failed_step"):
            lines.append(f"Failed at step **{report['failed_step']}**; results above are partial.\n")
        for error in report["errors"]:
            lines.append(f"- {error}")
        lines.append("")

    return "\n".join(line for line in lines if line is not None)


# ============================================================================
# FORMATTER CLASS - For LangGraph Integration
# ============================================================================

class Formatter:
    """Converts run reports into markdown output for the persist node and the show verb."""

    def format(
        self,
        report: Dict[str, Any],
        wall_time_s: Optional[float] = None,
        cache: Optional[Dict[str, Any]] = None,
    ) -> str:
        try:
            output = assemble_markdown(report, wall_time_s=wall_time_s, cache=cache)
            logger.debug(f"[Formatter.format] ✓ Formatted summary for {report.get('task')}")
            return output
        except (KeyError, TypeError, ValueError) as e:
            logger.error(f"[Formatter.format] ✗ Error: {e}")
            return f"# Run Summary\n\nCould not format report: {e}\n"
