import copy

import pytest
import yaml

from roma.errors import ScenarioError, ValidationError
from roma.harness.scenario import load_scenario, read_grid, scenario_from_dict

MINIMAL = {
    "schema_version": 1,
    "name": "mini",
    "tiers": ["edge"],
    "nodes": [{"id": "n1", "tier": "edge", "capacity": {"com": 2, "net": 10}}],
    "application": {
        "functions": [{"id": "F1", "profile": {"edge": {"delay": 5, "throughput": 20}}}],
        "critical_path": ["F1"],
        "requirements": {"max_delay": 10, "min_throughput": 1},
    },
    "couplings": {"p_max": 100, "models": [{"key": ["F1", "net", "F1", "com"], "alpha": 0, "beta": 0.1, "gamma": 0}]},
}


def write(tmp_path, doc, name="s.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(doc))
    return path


def test_minimal_scenario_loads(tmp_path):
    sc = load_scenario(write(tmp_path, MINIMAL))
    assert sc.name == "mini"
    assert list(sc.infra.node_ids) == ["n1"]
    assert sc.solver.eta == 0.05 and sc.solver.p_max == 100
    assert sc.static is None and sc.sweep is None


def test_bundled_scenarios_load(scenarios_dir):
    sub = load_scenario(scenarios_dir / "substitution.yaml")
    assert sub.sweep.levels[0] == 10 and sub.static.fixed[("F2", "com")] == 2
    fitted = load_scenario(scenarios_dir / "fitted.yaml")
    assert fitted.couplings.p_max == 95.0
    (rec,) = fitted.fits.values()
    assert rec.n_samples > 3 and rec.metrics.rmse < 1


def test_missing_grid_names_path(tmp_path):
    doc = copy.deepcopy(MINIMAL)
    doc["couplings"]["models"] = [{"grid": "nope/missing.csv", "key": "F1,net,F1,com"}]
    with pytest.raises(ScenarioError, match="missing.csv"):
        load_scenario(write(tmp_path, doc))


def test_eta_out_of_range(tmp_path):
    doc = copy.deepcopy(MINIMAL)
    doc["solver"] = {"eta": 1.5}
    with pytest.raises(ValidationError, match="eta out of range"):
        load_scenario(write(tmp_path, doc))


def test_violations_are_aggregated(tmp_path):
    doc = copy.deepcopy(MINIMAL)
    doc["solver"] = {"eta": -1}
    doc["nodes"][0]["capacity"]["com"] = -2
    doc["application"]["critical_path"] = ["Z"]
    with pytest.raises(ValidationError) as info:
        load_scenario(write(tmp_path, doc))
    text = "\n".join(info.value.violations)
    assert "eta out of range" in text and "negative capacity" in text and "Z" in text


def test_unsupported_schema_version():
    doc = dict(MINIMAL, schema_version=2)
    with pytest.raises(ScenarioError, match="schema_version"):
        scenario_from_dict(doc)


def test_yaml_syntax_error_has_line(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("schema_version: 1\nnodes: [\n")
    with pytest.raises(ScenarioError, match=r"bad\.yaml:\d+"):
        load_scenario(path)


def test_p_max_required_without_grids():
    doc = copy.deepcopy(MINIMAL)
    del doc["couplings"]["p_max"]
    with pytest.raises(ScenarioError, match="p_max"):
        scenario_from_dict(doc)


def test_coupling_to_unknown_function():
    doc = copy.deepcopy(MINIMAL)
    doc["couplings"]["models"][0]["key"] = ["F1", "net", "F7", "com"]
    with pytest.raises(ValidationError, match="unknown function F7"):
        scenario_from_dict(doc)


def test_sweep_levels_must_be_monotone():
    doc = copy.deepcopy(MINIMAL)
    doc["sweep"] = {"target": {"function": "F1", "resource": "net"}, "levels": [5, 2, 3]}
    with pytest.raises(ValidationError, match="monotone"):
        scenario_from_dict(doc)


def test_grid_reader_reports_bad_line(tmp_path):
    path = tmp_path / "g.csv"
    path.write_text("x_level,y_level,performance\n1,1,50\n1,x,60\n")
    with pytest.raises(ScenarioError, match=r"g\.csv:3"):
        read_grid(path)


def test_grid_reader_checks_header(tmp_path):
    path = tmp_path / "g.csv"
    path.write_text("x,y,p\n1,1,50\n")
    with pytest.raises(ScenarioError, match="header"):
        read_grid(path)


def test_grid_with_sidecar(scenarios_dir):
    grid, meta = read_grid(scenarios_dir / "grids" / "net_to_com.csv")
    assert meta["key"] == ["F1", "net", "F2", "com"]
    assert grid.max_performance() == 95.0
