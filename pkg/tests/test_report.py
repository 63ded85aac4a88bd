from dataclasses import replace

import pytest

from roma.errors import ScenarioError
from roma.harness.report import emit_report, fmt_num, load_report, render, sweep_columns
from roma.harness.scenario import load_scenario
from roma.harness.sweep import run_sweep
from roma.orchestrator import AllocationPlan, Placement, compare


@pytest.fixture
def two_row_sweep(scenarios_dir):
    sc = load_scenario(scenarios_dir / "substitution.yaml")
    sc = replace(sc, sweep=replace(sc.sweep, levels=(10.0, 2.0)))
    return run_sweep(sc)


def test_fmt_num():
    assert fmt_num(1 / 3) == "0.333333"
    assert fmt_num(-1e-9) == "0.000000"
    assert fmt_num(2) == "2.000000"
    assert fmt_num(None) == ""


def test_two_rows_three_lines(two_row_sweep, tmp_path):
    path = tmp_path / "out.csv"
    emit_report(two_row_sweep, path, "csv")
    data = path.read_bytes()
    lines = data.decode().split("\n")
    assert data.endswith(b"\n") and b"\r" not in data
    assert len(lines) == 4 and lines[-1] == ""
    assert lines[0].split(",") == sweep_columns(["com", "net"])
    assert lines[1].startswith("10.000000,ok,F1=cam;F2=edge1,0.343434,")


def test_reports_are_byte_identical(two_row_sweep, tmp_path):
    for fmt in ("csv", "json"):
        a, b = tmp_path / f"a.{fmt}", tmp_path / f"b.{fmt}"
        emit_report(two_row_sweep, a, fmt)
        emit_report(two_row_sweep, b, fmt)
        assert a.read_bytes() == b.read_bytes()


def test_json_round_trip(two_row_sweep, tmp_path):
    path = tmp_path / "out.json"
    emit_report(two_row_sweep, path, "json")
    doc = load_report(path)
    assert doc["kind"] == "sweep" and len(doc["rows"]) == 2
    assert doc["rows"][0]["roma"]["totals"]["com"] == round(34 / 99, 6)
    assert render(doc, "json") == path.read_text()


def test_savings_and_metrics_csv():
    pl = Placement({"F1": "n1"})
    a = AllocationPlan(pl, {("F1", "com"): 0.2, ("F1", "net"): 0.5}, 80.0, 0.0, 0.0, 0.0)
    b = AllocationPlan(pl, {("F1", "com"): 2.0, ("F1", "net"): 10.0}, 80.0, 0.0, 0.0, 0.0)
    text = render(compare(a, b), "csv")
    assert text.splitlines()[1].endswith("90.000000,95.000000,0.000000")
    assert render({"score": 0.8, "frames": 3}, "csv") == "score,frames\n0.800000,3.000000\n"


def test_unwritable_path_names_path(two_row_sweep, tmp_path):
    target = tmp_path / "missing" / "out.csv"
    with pytest.raises(ScenarioError, match="missing"):
        emit_report(two_row_sweep, target)


def test_unknown_format(two_row_sweep):
    with pytest.raises(ValueError):
        render(two_row_sweep, "xml")
