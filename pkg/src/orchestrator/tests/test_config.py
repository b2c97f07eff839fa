# ============================================================================
# CONFIG AND OUTPUT TESTS
# File: src/orchestrator/tests/test_config.py
# Purpose: Config validation, result cache, tables, guardrails and formatter
# ============================================================================
import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent.parent.parent))

import json
import math

import numpy as np
import pytest

from src.errors import ConfigValidationError
from src.measures.checks import variational_gap
from src.orchestrator.config import (
    apply_overrides,
    build_measures,
    build_params,
    build_potential,
    build_system,
    build_target,
    cache_dir_from_env,
    config_from_dict,
    config_hash,
    load_raw,
    parse_config,
    section_key,
    workers_from_env,
)
from src.orchestrator.formatter import Formatter, assemble_markdown, format_value
from src.orchestrator.guardrails import PROPERTY_GUARDRAILS, Guardrail, check_guardrails
from src.orchestrator.result_cache import ResultCache
from src.orchestrator.tables import SCHEMA_PREFIX, read_table, write_table

BUNDLED = Path(__file__).parent.parent.parent.parent / "configs"


def raw_config(**changes):
    data = {
        "seed": 0,
        "system": {"space": "symbolic", "alphabet": 2, "length": 16, "period": [[{"kind": "shift"}]]},
        "target": {"kind": "whole", "resolution": 8},
        "grids": {"delta_grid": [0.5, 0.25], "N_grid": [2, 3], "window": 2},
        "task": {"kind": "pp-pressure", "pressure_oracle": math.log(2)},
    }
    return apply_overrides(data, changes)


# ===== TEST: CONFIG VALIDATION =====

def test_valid_config_builds():
    config = config_from_dict(raw_config())
    assert config.task.kind == "pp-pressure"
    assert config.potential.kind == "constant"
    assert build_system(config).is_constant
    params = build_params(config, workers=3)
    assert params.delta_grid == (0.5, 0.25)
    assert params.workers == 3
    print("✓ test_valid_config_builds passed")


@pytest.mark.parametrize("path", sorted(BUNDLED.glob("*.toml")), ids=lambda p: p.stem)
def test_bundled_configs_parse(path):
    assert parse_config(path).task.pressure_oracle is not None


def test_gibbs_config_finds_the_equilibrium_measure():
    """
    phi = x_0 on the 2-shift: P = log(1 + e), attained by Bernoulli with
    P(symbol 1) = e / (1 + e).
    """
    config = parse_config(BUNDLED / "two_shift_gibbs.toml")
    system = build_system(config)
    target = build_target(config)
    sample = target.sample(system.space)
    measures = build_measures(config, system, sample)
    report = variational_gap(
        system, target, build_potential(config, system), measures, build_params(config),
        config.grids.r_grid, config.grids.n_window, count=config.measures.count, seed=config.seed,
    )
    weight_of_one = {m.name: m.probabilities[1] for m in measures}
    assert abs(weight_of_one[report.best_measure] - math.e / (1 + math.e)) <= 0.05
    assert report.sup_measure_pressure == pytest.approx(math.log(1 + math.e), abs=0.1)
    assert report.pressure.value == pytest.approx(config.task.pressure_oracle, abs=1e-2)
    print("✓ test_gibbs_config_finds_the_equilibrium_measure passed")


def test_increasing_grid_rejected():
    with pytest.raises(ConfigValidationError) as excinfo:
        config_from_dict(raw_config(**{"grids.delta_grid": [0.25, 0.5]}))
    assert any(e.startswith("grids.delta_grid") and "decreasing" in e for e in excinfo.value.errors)


def test_unknown_key_suggests_closest():
    with pytest.raises(ConfigValidationError) as excinfo:
        config_from_dict(raw_config(**{"grids.windw": 3}))
    assert "grids.windw: unknown key (did you mean 'grids.window'?)" in excinfo.value.errors
    print("✓ test_unknown_key_suggests_closest passed")


def test_every_error_is_collected():
    with pytest.raises(ConfigValidationError) as excinfo:
        config_from_dict(raw_config(**{"grids.window": -1, "task.epsilon": 0.0, "seed": -3}))
    assert len(excinfo.value.errors) == 3


def test_measure_tasks_need_measures():
    with pytest.raises(ConfigValidationError) as excinfo:
        config_from_dict(raw_config(**{"task.kind": "variational"}))
    assert any("needs a [measures] section" in e for e in excinfo.value.errors)


def test_domain_errors_reported_once():
    """A map that does not fit its space fails the system build; dependent checks are skipped."""
    data = raw_config(**{"system.space": "interval", "system.period": [[{"kind": "affine-mod-1", "slope": 2}]]})
    with pytest.raises(ConfigValidationError) as excinfo:
        config_from_dict(data)
    assert len(excinfo.value.errors) == 1
    assert excinfo.value.errors[0].startswith("system:")


def test_bad_measures_rejected():
    data = raw_config(**{"task.kind": "measure-pressure", "measures": {"kind": "bernoulli-grid", "p_grid": [0.5, 1.5]}})
    with pytest.raises(ConfigValidationError):
        config_from_dict(data)
    data = raw_config(**{"task.kind": "measure-pressure", "measures": {"kind": "bernoulli", "probabilities": [0.2, 0.3, 0.5]}})
    with pytest.raises(ConfigValidationError):
        config_from_dict(data)


def test_load_raw_errors(tmp_path):
    with pytest.raises(ConfigValidationError):
        load_raw(tmp_path / "missing.toml")
    broken = tmp_path / "broken.toml"
    broken.write_text("[system\nspace = 1\n", encoding="utf-8")
    with pytest.raises(ConfigValidationError):
        load_raw(broken)


def test_apply_overrides_copies():
    data = raw_config()
    changed = apply_overrides(data, {"grids.window": 0, "output.directory": "elsewhere"})
    assert changed["grids"]["window"] == 0
    assert changed["output"] == {"directory": "elsewhere"}
    assert data["grids"]["window"] == 2
    assert "output" not in data


def test_hashes():
    first = config_from_dict(raw_config())
    again = config_from_dict(raw_config())
    reseeded = config_from_dict(raw_config(seed=7))
    regridded = config_from_dict(raw_config(**{"grids.window": 0}))
    assert config_hash(first) == config_hash(again)
    assert config_hash(first) != config_hash(reseeded)
    assert section_key(first, "pp", ("system",)) != section_key(reseeded, "pp", ("system",))
    assert section_key(first, "pp", ("system",)) == section_key(regridded, "pp", ("system",))
    assert section_key(first, "pp", ("system", "grids")) != section_key(regridded, "pp", ("system", "grids"))
    assert section_key(first, "pp", ("system",)) != section_key(first, "pp-prime", ("system",))
    print("✓ test_hashes passed")


def test_environment(monkeypatch):
    monkeypatch.setenv("PRESSURE_WORKERS", "3")
    assert workers_from_env() == 3
    monkeypatch.setenv("PRESSURE_WORKERS", "many")
    assert workers_from_env() == 1
    monkeypatch.setenv("PRESSURE_CACHE_DIR", "/tmp/somewhere")
    assert cache_dir_from_env() == "/tmp/somewhere"


# ===== TEST: RESULT CACHE =====

def test_cache_hit_after_miss(tmp_path):
    cache = ResultCache(str(tmp_path / "cache"))
    calls = []

    def compute():
        calls.append(1)
        return {"value": np.float64(1.5), "rows": np.arange(3), "top": math.inf}

    first = cache.get_or_compute("k" * 64, compute)
    second = cache.get_or_compute("k" * 64, compute)
    assert first == second == {"value": 1.5, "rows": [0, 1, 2], "top": math.inf}
    assert len(calls) == 1
    assert (cache.hits, cache.misses) == (1, 1)
    print("✓ test_cache_hit_after_miss passed")


def test_cache_recomputes_tampered_entry(tmp_path):
    cache = ResultCache(str(tmp_path))
    cache.store("abc", {"value": 1.0})
    path = tmp_path / "abc.json"
    entry = json.loads(path.read_text(encoding="utf-8"))
    entry["record"]["value"] = 2.0
    path.write_text(json.dumps(entry), encoding="utf-8")
    assert cache.lookup("abc") is None
    assert cache.get_or_compute("abc", lambda: {"value": 3.0}) == {"value": 3.0}
    assert cache.lookup("abc") == {"value": 3.0}


def test_unwritable_cache_disables_itself(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("not a directory", encoding="utf-8")
    cache = ResultCache(str(blocker))
    assert not cache.enabled
    assert cache.get_or_compute("x", lambda: {"value": 1}) == {"value": 1}
    assert cache.get_or_compute("x", lambda: {"value": 1}) == {"value": 1}
    assert (cache.hits, cache.misses) == (0, 2)


# ===== TEST: TABLES =====

def test_table_keeps_column_types(tmp_path):
    rows = [
        {"n": 2, "epsilon": 0.1, "counter": "separated", "exact": True},
        {"n": 3, "epsilon": 1 / 3, "counter": "spanning", "exact": False},
    ]
    path = write_table(tmp_path / "nested" / "counts.csv", rows)
    header = path.read_text(encoding="utf-8").splitlines()[0]
    assert header.startswith(SCHEMA_PREFIX)
    assert json.loads(header[len(SCHEMA_PREFIX):]) == {"n": "int64", "epsilon": "float64", "counter": "object", "exact": "bool"}
    frame = read_table(path)
    assert frame["n"].tolist() == [2, 3]
    assert frame["epsilon"].tolist() == [0.1, 1 / 3]
    assert frame["counter"].tolist() == ["separated", "spanning"]
    assert frame["exact"].tolist() == [True, False]


def test_table_with_punctuated_columns(tmp_path):
    """Sweep indexes carry measure names and dotted keys as column names."""
    rows = [
        {"measure-pressure:bernoulli(0.25,0.75)": 0.56, "grids.window": "2", "note: a,b": "x,y"},
        {"measure-pressure:bernoulli(0.25,0.75)": 0.57, "grids.window": "4", "note: a,b": "z"},
    ]
    frame = read_table(write_table(tmp_path / "sweep_index.csv", rows))
    assert list(frame.columns) == ["measure-pressure:bernoulli(0.25,0.75)", "grids.window", "note: a,b"]
    assert frame["measure-pressure:bernoulli(0.25,0.75)"].tolist() == [0.56, 0.57]
    assert frame["grids.window"].tolist() == ["2", "4"]
    assert frame["note: a,b"].tolist() == ["x,y", "z"]
    print("✓ test_table_with_punctuated_columns passed")


def test_table_without_header(tmp_path):
    path = tmp_path / "plain.csv"
    path.write_text("a,b\n1,2\n", encoding="utf-8")
    with pytest.raises(ValueError):
        read_table(path)
    path.write_text("# schema: n:int64\n1\n", encoding="utf-8")
    with pytest.raises(ValueError):
        read_table(path)


# ===== TEST: GUARDRAILS =====

def test_guardrails_skip_missing_inputs():
    passed, outcomes = check_guardrails(PROPERTY_GUARDRAILS, {})
    assert passed
    assert {o["status"] for o in outcomes} == {"skipped"}
    assert len(outcomes) == len(PROPERTY_GUARDRAILS)


def test_pressure_ordering_guardrail():
    props = {"pp": 0.69, "cp_lower": 0.692, "cp_upper": 0.7, "tolerance": 1e-3}
    passed, outcomes = check_guardrails(PROPERTY_GUARDRAILS, props)
    assert passed
    assert next(o for o in outcomes if o["name"] == "Pressure Ordering")["status"] == "pass"
    props["cp_upper"] = 0.5
    passed, outcomes = check_guardrails(PROPERTY_GUARDRAILS, props)
    assert not passed
    assert next(o for o in outcomes if o["name"] == "Pressure Ordering")["message"].startswith("✗")
    print("✓ test_pressure_ordering_guardrail passed")


def test_oracle_agreement_guardrail():
    props = {"oracle_gaps": [("pp", 0.01), ("pp-prime", 0.2)], "oracle_tolerance": 0.1}
    passed, outcomes = check_guardrails(PROPERTY_GUARDRAILS, props)
    assert not passed
    props["oracle_tolerance"] = 0.25
    assert check_guardrails(PROPERTY_GUARDRAILS, props)[0]


def test_enumeration_oracle_guardrail_counts_membership():
    props = {"oracle_max_error": 0.0, "oracle_membership_mismatches": 0}
    assert check_guardrails(PROPERTY_GUARDRAILS, props)[0]
    props["oracle_membership_mismatches"] = 1
    passed, outcomes = check_guardrails(PROPERTY_GUARDRAILS, props)
    assert not passed
    assert next(o for o in outcomes if o["name"] == "Enumeration Oracle")["status"] == "fail"


def test_guardrail_errors_fail():
    rail = Guardrail("Broken", "always raises", lambda p: p["missing"] > 0)
    passed, message = rail.check({})
    assert not passed
    assert "error evaluating property" in message


# ===== TEST: FORMATTER =====

def test_format_value():
    assert format_value(0.5) == "0.500000"
    assert format_value(-math.inf) == "-inf"
    assert format_value([0.25, 1]) == "[0.250000, 1]"
    assert format_value(True) == "True"


def test_summary_markdown():
    report = {
        "task": "pp-pressure", "status": "ok", "version": "0.3.0", "config_hash": "ab" * 32, "seed": 0,
        "lower_bound": True,
        "results": {
            "pp": {"value": 0.6931, "bracket": [0.69, 0.7], "direction": "upper-bound", "mode": "exact"},
            "sandwich": {"alpha": 0.6, "violations": 0},
        },
        "checks": [{"name": "Oracle Agreement", "status": "pass", "message": "✓ Oracle Agreement"}],
        "checks_passed": True,
        "tables": {"pp": "tables/pp.csv"},
        "errors": [],
    }
    text = assemble_markdown(report, wall_time_s=1.5, cache={"hits": 2, "misses": 1, "enabled": True})
    assert text.startswith("# Run Summary: pp-pressure")
    assert "| Wall time | 1.50 s |" in text
    assert "| Cache | 2 hit(s), 1 miss(es), enabled |" in text
    assert "| pp | 0.693100 | [0.690000, 0.700000] | upper-bound | exact |" in text
    assert "- **sandwich**: alpha: 0.600000, violations: 0" in text
    assert "## Property Checks (all passed)" in text
    assert "lower bounds" in text
    assert "## Errors" not in text
    print("✓ test_summary_markdown passed")


def test_formatter_falls_back_on_bad_report():
    text = Formatter().format({"task": "x", "checks": [{"name": "no message"}], "checks_passed": False})
    assert "Could not format report" in text
