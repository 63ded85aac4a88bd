from dataclasses import replace
from fractions import Fraction

import pytest

from roma.harness.scenario import SweepSpec, load_scenario
from roma.harness.sweep import BOTH_INFEASIBLE, OK, run_sweep, static_placement
from roma.orchestrator import compare, solve_roma, static_allocate


@pytest.fixture
def substitution(scenarios_dir):
    return load_scenario(scenarios_dir / "substitution.yaml")


def hand_compute(level):
    """Cores on F2 at p = 100 when F1 may use at most ``level`` Mbps.

    The couplings need com >= 16 - 2 net and com >= 0.5 - 0.02 net. The
    cheapest point sits where the two meet, at net = 775/99; below that the
    bandwidth cap binds and the first coupling sets com.
    """
    knee = Fraction(775, 99)
    lv = Fraction(level).limit_denominator(1000)
    return float(2 * (8 - lv)) if lv < knee else float(Fraction(34, 99))


def test_three_levels_three_rows(scenarios_dir):
    sc = load_scenario(scenarios_dir / "fitted.yaml")
    result = run_sweep(sc)
    assert [r.level for r in result.rows] == [10, 6, 2]
    assert all(r.status == OK for r in result.rows)


def test_substitution_matches_hand_solves(substitution):
    result = run_sweep(substitution)
    for row in result.rows:
        assert row.status == OK
        assert row.roma.performance == pytest.approx(100.0, abs=1e-9)
        assert row.roma.total("com") == pytest.approx(hand_compute(row.level), abs=1e-9)
        assert row.static.performance == pytest.approx(min(100.0, 12.5 * (row.level + 1)), abs=1e-9)


def test_compute_nonincreasing_in_bandwidth(substitution):
    rows = sorted(run_sweep(substitution).rows, key=lambda r: r.level)
    com = [r.roma.total("com") for r in rows]
    assert all(b <= a + 1e-9 for a, b in zip(com, com[1:]))


def test_static_columns_constant(substitution):
    rows = run_sweep(substitution).rows
    first = rows[0].static
    for row in rows:
        assert dict(row.static.allocations) == dict(first.allocations)
        assert row.static.placement == first.placement


def test_single_level_equals_direct_composition(substitution):
    for level in (10.0, 3.0):
        sc = replace(substitution, sweep=replace(substitution.sweep, levels=(level,)))
        (row,) = run_sweep(sc).rows
        cfg = replace(sc.solver, allocation_cap={("F1", "net"): level})
        roma = solve_roma(sc.app, sc.infra, sc.couplings, cfg)
        fixed = dict(sc.static.fixed)
        static = static_allocate(sc.app, sc.infra, sc.couplings, fixed, static_placement(sc), cfg)
        assert row.roma == roma
        if level >= fixed[("F1", "net")]:
            assert row.static == static
            assert row.savings == compare(roma, static)
        assert row.savings.roma_totals == compare(roma, static).roma_totals


def test_parallel_sweep_matches_serial(substitution):
    assert run_sweep(substitution, max_workers=4) == run_sweep(substitution)


def test_floor_mode_flags_infeasible_levels(substitution):
    spec = SweepSpec("F1", "net", (2.0, 10.0, 30.0), mode="floor")
    result = run_sweep(replace(substitution, sweep=spec))
    assert [r.status for r in result.rows] == [OK, OK, BOTH_INFEASIBLE]
    assert result.rows[0].roma.allocations[("F1", "net")] >= 2.0 - 1e-9
    assert result.rows[1].static.allocations[("F1", "net")] == 10.0
    assert result.rows[2].roma is None and result.rows[2].savings is None


def test_no_sweep_declared(substitution):
    with pytest.raises(ValueError, match="no sweep"):
        run_sweep(replace(substitution, sweep=None))
