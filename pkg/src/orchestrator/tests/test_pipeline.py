# ============================================================================
# PIPELINE TESTS
# File: src/orchestrator/tests/test_pipeline.py
# Purpose: Nodes, routers, full runs and the CLI verbs
# ============================================================================
import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent.parent.parent))

import json
import math

import pytest

from src.orchestrator import graph_nodes
from src.orchestrator.config import apply_overrides, config_from_dict
from src.orchestrator.graph_edges import route_after_build, route_after_compute
from src.orchestrator.graph_nodes import (
    REPORT_FILE,
    SUMMARY_FILE,
    build_context_node,
    compute_task_node,
    handle_error_node,
    run_checks_node,
)
from src.orchestrator.main import (
    EXIT_CHECKS_FAILED,
    EXIT_INVALID_CONFIG,
    EXIT_OK,
    EXIT_RUNTIME_ERROR,
    SWEEP_INDEX,
    build_parser,
    exit_code_for,
    main,
    run_experiment,
    sweep_points,
)
from src.orchestrator.pipeline_graph import run_pipeline
from src.orchestrator.pipeline_state import create_initial_state
from src.orchestrator.tables import read_table

LOG2 = math.log(2)

SMALL_TOML = """\
seed = 0

[system]
space = "symbolic"
alphabet = 2
length = 16
period = [[{ kind = "shift" }]]

[target]
kind = "whole"
resolution = 8

[grids]
delta_grid = [0.5, 0.25]
N_grid = [2, 3]
window = 2

[task]
kind = "pp-pressure"
pressure_oracle = 0.6931471805599453
"""


def small_config(**changes):
    data = {
        "seed": 0,
        "system": {"space": "symbolic", "alphabet": 2, "length": 16, "period": [[{"kind": "shift"}]]},
        "target": {"kind": "whole", "resolution": 8},
        "grids": {"delta_grid": [0.5, 0.25], "N_grid": [2, 3], "window": 2},
        "task": {"kind": "pp-pressure", "pressure_oracle": LOG2},
    }
    return config_from_dict(apply_overrides(data, changes))


def unbuildable_config():
    """Passes validation, but cylinder targets only exist on symbolic spaces."""
    return small_config(**{
        "system.space": "circle",
        "system.period": [[{"kind": "affine-mod-1", "slope": 2}]],
        "target.kind": "cylinders",
        "target.cylinders": ["0"],
    })


# ===== TEST: STATE AND ROUTERS =====

def test_initial_state(tmp_path):
    state = create_initial_state(small_config(), str(tmp_path / "out"), str(tmp_path / "cache"), workers=2)
    assert state["pipeline_status"] == "running"
    assert state["context"] is None
    assert state["checks_passed"] is None
    assert state["workers"] == 2
    assert state["error_messages"] == [] and state["written"] == []
    print("✓ test_initial_state passed")


def test_routers():
    assert route_after_build({"context": None}) == "handle_error"
    assert route_after_build({"context": object(), "build_error": None}) == "compute_task"
    assert route_after_build({"context": object(), "build_error": "boom"}) == "handle_error"
    assert route_after_compute({"compute_error": None}) == "run_checks"
    assert route_after_compute({"compute_error": "ValueError: boom"}) == "handle_error"


# ===== TEST: NODES =====

@pytest.mark.asyncio
async def test_build_and_compute_nodes(tmp_path):
    state = create_initial_state(small_config(), str(tmp_path / "out"), str(tmp_path / "cache"))
    state = await build_context_node(state)
    assert state["context"] is not None
    assert len(state["context"].sample) == 256
    state = await compute_task_node(state)
    assert state["compute_error"] is None
    assert set(state["results"]) == {"pp", "pp-prime"}
    assert state["results"]["pp"]["value"] == pytest.approx(LOG2, abs=1e-3)
    assert "pp" in state["tables"]
    print("✓ test_build_and_compute_nodes passed")


@pytest.mark.asyncio
async def test_check_suite_reports_sup_entropy(tmp_path):
    """Counts of length-8 cylinder samples stay unsaturated up to n = 5, so the slope is log 2."""
    config = small_config(**{"task.kind": "check-suite", "grids.n_range": [2, 3, 4, 5]})
    state = create_initial_state(config, str(tmp_path / "out"), str(tmp_path / "cache"))
    state = await build_context_node(state)
    state = await compute_task_node(state)
    assert state["compute_error"] is None
    entropy = state["results"]["sup-entropy"]
    assert entropy["value"] == pytest.approx(LOG2, abs=1e-9)
    assert entropy["oracle_gap"] == pytest.approx(0.0, abs=1e-9)
    assert "sup-entropy" in state["tables"]
    state = await run_checks_node(state)
    assert next(c for c in state["checks"] if c["name"] == "Oracle Agreement")["status"] == "pass"
    assert next(c for c in state["checks"] if c["name"] == "Enumeration Oracle")["status"] == "pass"
    print("✓ test_check_suite_reports_sup_entropy passed")


@pytest.mark.asyncio
async def test_build_node_records_error(tmp_path):
    state = create_initial_state(unbuildable_config(), str(tmp_path / "out"), str(tmp_path / "cache"))
    state = await build_context_node(state)
    assert state["context"] is None
    assert state["failed_step"] == "build"
    assert state["build_error"].startswith("ValueError")
    state = await handle_error_node(state)
    assert state["pipeline_status"] == "error"


@pytest.mark.asyncio
async def test_run_checks_node_reads_oracle_gaps(tmp_path):
    state = create_initial_state(small_config(), str(tmp_path / "out"), str(tmp_path / "cache"))
    state["results"] = {"pp": {"value": 0.7, "oracle_gap": 0.007}}
    state = await run_checks_node(state)
    assert state["checks_passed"] is True
    assert state["pipeline_status"] == "success"
    state["results"] = {"pp": {"value": 1.0, "oracle_gap": 0.31}}
    state = await run_checks_node(state)
    assert state["checks_passed"] is False


@pytest.mark.asyncio
async def test_nothing_to_check(tmp_path):
    state = create_initial_state(small_config(), str(tmp_path / "out"), str(tmp_path / "cache"))
    state = await run_checks_node(state)
    assert state["checks"] == []
    assert state["checks_passed"] is None


# ===== TEST: FULL RUNS =====

@pytest.mark.asyncio
async def test_full_run_writes_outputs(tmp_path):
    out = tmp_path / "out"
    final = await run_pipeline(small_config(), str(out), str(tmp_path / "cache"))
    assert final["pipeline_status"] == "success"
    assert final["checks_passed"] is True
    assert exit_code_for(final) == EXIT_OK

    report = json.loads((out / REPORT_FILE).read_text(encoding="utf-8"))
    assert report["status"] == "ok"
    assert report["task"] == "pp-pressure"
    assert report["results"]["pp"]["value"] == pytest.approx(LOG2, abs=1e-3)
    assert report["tables"] == {"pp": "tables/pp.csv", "pp-prime": "tables/pp-prime.csv"}
    assert "wall_time_s" not in report
    assert (out / SUMMARY_FILE).read_text(encoding="utf-8").startswith("# Run Summary: pp-pressure")
    assert len(read_table(out / "tables" / "pp.csv")) == 4
    print("✓ test_full_run_writes_outputs passed")


@pytest.mark.asyncio
async def test_rerun_hits_cache_with_identical_report(tmp_path):
    cache = str(tmp_path / "cache")
    first = await run_pipeline(small_config(), str(tmp_path / "a"), cache)
    second = await run_pipeline(small_config(), str(tmp_path / "b"), cache)
    assert first["context"].cache.misses == 2
    assert second["context"].cache.hits == 2
    assert second["context"].cache.misses == 0
    assert (tmp_path / "a" / REPORT_FILE).read_bytes() == (tmp_path / "b" / REPORT_FILE).read_bytes()
    print("✓ test_rerun_hits_cache_with_identical_report passed")


@pytest.mark.asyncio
async def test_worker_count_does_not_change_report(tmp_path):
    await run_pipeline(small_config(), str(tmp_path / "serial"), str(tmp_path / "c1"), workers=1)
    await run_pipeline(small_config(), str(tmp_path / "pooled"), str(tmp_path / "c4"), workers=4)
    assert (tmp_path / "serial" / REPORT_FILE).read_bytes() == (tmp_path / "pooled" / REPORT_FILE).read_bytes()


@pytest.mark.asyncio
async def test_run_survives_unwritable_cache(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("", encoding="utf-8")
    final = await run_pipeline(small_config(), str(tmp_path / "out"), str(blocker))
    assert final["pipeline_status"] == "success"
    assert not final["context"].cache.enabled


@pytest.mark.asyncio
async def test_build_failure_still_writes_report(tmp_path):
    out = tmp_path / "out"
    final = await run_pipeline(unbuildable_config(), str(out), str(tmp_path / "cache"))
    assert final["pipeline_status"] == "error"
    assert exit_code_for(final) == EXIT_RUNTIME_ERROR
    report = json.loads((out / REPORT_FILE).read_text(encoding="utf-8"))
    assert report["status"] == "error"
    assert report["failed_step"] == "build"
    assert report["results"] == {}


@pytest.mark.asyncio
async def test_compute_failure_keeps_partial_results(tmp_path, monkeypatch):
    def half_done(ctx, out):
        out.results["pp"] = {"value": 0.5}
        raise RuntimeError("solver gave up")

    monkeypatch.setitem(graph_nodes.TASK_RUNNERS, "pp-pressure", half_done)
    final = await run_pipeline(small_config(), str(tmp_path / "out"), str(tmp_path / "cache"))
    assert final["pipeline_status"] == "error"
    assert final["failed_step"] == "compute"
    assert final["results"] == {"pp": {"value": 0.5}}
    assert any("solver gave up" in e for e in final["error_messages"])
    assert "## Errors" in final["summary"]


def test_exit_codes():
    assert exit_code_for({"pipeline_status": "success", "checks_passed": True}) == EXIT_OK
    assert exit_code_for({"pipeline_status": "success", "checks_passed": None}) == EXIT_OK
    assert exit_code_for({"pipeline_status": "success", "checks_passed": False}) == EXIT_CHECKS_FAILED
    assert exit_code_for({"pipeline_status": "error", "checks_passed": False}) == EXIT_RUNTIME_ERROR


# ===== TEST: CLI =====

@pytest.fixture
def cli_env(tmp_path, monkeypatch):
    monkeypatch.setenv("PRESSURE_CACHE_DIR", str(tmp_path / "cache"))
    monkeypatch.delenv("PRESSURE_WORKERS", raising=False)
    monkeypatch.chdir(tmp_path)
    return tmp_path


def test_cli_run_and_show(cli_env, capsys):
    config = cli_env / "small.toml"
    config.write_text(SMALL_TOML, encoding="utf-8")
    out = cli_env / "out"
    assert main(["--quiet", "run", str(config), "--output", str(out)]) == EXIT_OK
    assert (out / REPORT_FILE).exists()
    capsys.readouterr()
    assert main(["--quiet", "show", str(out / REPORT_FILE)]) == EXIT_OK
    assert "# Run Summary: pp-pressure" in capsys.readouterr().out
    print("✓ test_cli_run_and_show passed")


def test_cli_invalid_config(cli_env):
    config = cli_env / "bad.toml"
    config.write_text(SMALL_TOML.replace("window = 2", "windw = 2"), encoding="utf-8")
    assert main(["--quiet", "run", str(config)]) == EXIT_INVALID_CONFIG
    assert main(["--quiet", "run", str(cli_env / "missing.toml")]) == EXIT_INVALID_CONFIG
    assert main(["--quiet", "show", str(cli_env / "missing.json")]) == EXIT_RUNTIME_ERROR


def test_sweep_points_order():
    points = sweep_points({"grids.window": [0, 2], "task.counter": ["separated", "spanning"]})
    assert points == [
        {"grids.window": 0, "task.counter": "separated"},
        {"grids.window": 0, "task.counter": "spanning"},
        {"grids.window": 2, "task.counter": "separated"},
        {"grids.window": 2, "task.counter": "spanning"},
    ]


def test_cli_sweep(cli_env):
    config = cli_env / "sweep.toml"
    config.write_text(SMALL_TOML + '\n[sweep.parameters]\n"grids.window" = [0, 2]\n', encoding="utf-8")
    root = cli_env / "sweep"
    assert main(["--quiet", "sweep", str(config), "--output", str(root)]) == EXIT_OK
    index = read_table(root / SWEEP_INDEX)
    assert index["directory"].tolist() == ["sweep-000", "sweep-001"]
    assert index["status"].tolist() == ["success", "success"]
    assert index["grids.window"].tolist() == ["0", "2"]
    assert index["pp"].tolist() == pytest.approx([LOG2, LOG2], abs=1e-3)
    assert (root / "sweep-001" / REPORT_FILE).exists()


def test_cli_sweep_needs_parameters(cli_env):
    config = cli_env / "small.toml"
    config.write_text(SMALL_TOML, encoding="utf-8")
    assert main(["--quiet", "sweep", str(config)]) == EXIT_INVALID_CONFIG


def test_help_names_default_estimator():
    text = build_parser().format_help()
    assert "grids.estimator" in text
    assert '"growth"' in text
    assert '"crossing"' in text


def test_run_experiment_reuses_cache(tmp_path):
    config = small_config(**{"output.formats": ["json"]})
    first = run_experiment(config, str(tmp_path / "a"), workers=1, cache_dir=str(tmp_path / "cache"))
    second = run_experiment(config, str(tmp_path / "b"), workers=2, cache_dir=str(tmp_path / "cache"))
    assert exit_code_for(first) == exit_code_for(second) == EXIT_OK
    assert second["context"].cache.hits == 2
    assert sorted(p.name for p in (tmp_path / "b").iterdir()) == [REPORT_FILE]
