import pytest
from hypothesis import given, strategies as st

from builders import make_app, make_infra
from roma.appgraph import check_requirements, h_delay, h_throughput, validate_graph
from roma.errors import UnknownReferenceError

INFRA = make_infra(
    ("e1", "edge", {"com": 4, "net": 10}),
    ("c1", "cloud", {"com": 16, "net": 100}),
)


def two_fn_app(**kw):
    return make_app(
        {"A": {"edge": (10, 30), "cloud": (40, 50)}, "B": {"edge": (5, 12), "cloud": (50, 25)}},
        **kw,
    )


def test_delay_sums_critical_path():
    assert h_delay(two_fn_app(), {"A": "e1", "B": "e1"}, INFRA) == 15


def test_delay_single_function():
    app = make_app({"A": {"edge": (7, 1)}})
    assert h_delay(app, {"A": "e1"}, INFRA) == 7


def test_delay_across_tiers():
    assert h_delay(two_fn_app(), {"A": "e1", "B": "c1"}, INFRA) == 60


def test_throughput_is_min():
    assert h_throughput(two_fn_app(), {"A": "e1", "B": "e1"}, INFRA) == 12


def test_throughput_single_and_three():
    assert h_throughput(make_app({"A": {"edge": (1, 25)}}), {"A": "e1"}, INFRA) == 25
    app = make_app({"A": {"edge": (1, 30)}, "B": {"edge": (1, 12)}, "C": {"edge": (1, 18)}})
    assert h_throughput(app, {"A": "e1", "B": "e1", "C": "e1"}, INFRA) == 12


def test_check_requirements():
    placement = {"A": "e1", "B": "c1"}  # delay 60, throughput min(30, 25) = 25
    ok = check_requirements(two_fn_app(max_delay=100, min_throughput=10), placement, INFRA)
    assert ok.feasible and ok.delay == 60 and ok.throughput == 25
    assert not check_requirements(two_fn_app(max_delay=50), placement, INFRA).feasible
    edge = {"A": "e1", "B": "e1"}  # throughput 12
    assert not check_requirements(two_fn_app(min_throughput=15), edge, INFRA).feasible


def test_missing_placement_and_profile_errors():
    with pytest.raises(UnknownReferenceError, match="B"):
        h_delay(two_fn_app(), {"A": "e1"}, INFRA)
    app = make_app({"A": {"edge": (1, 1)}})
    with pytest.raises(UnknownReferenceError, match="A.*cloud"):
        h_throughput(app, {"A": "c1"}, INFRA)


def test_validate_graph_ok_and_cycle():
    assert validate_graph(two_fn_app(edges=[("A", "B")])).ok
    res = validate_graph(two_fn_app(edges=[("A", "B"), ("B", "A")]))
    assert "cycle detected" in res.violations


def test_validate_graph_unknown_critical_function():
    res = validate_graph(two_fn_app(critical=["A", "Z"]))
    assert any("unknown function Z" in v for v in res.violations)


def test_validate_graph_profile_checks():
    app = make_app({"A": {"edge": (-1, 0)}}, tiers={"A": "cloud"})
    msgs = validate_graph(app).violations
    assert any("negative delay" in m for m in msgs)
    assert any("non-positive throughput" in m for m in msgs)
    assert any("tier constraint 'cloud'" in m for m in msgs)


perf = st.tuples(st.floats(0, 100), st.floats(0.1, 100))


@given(st.lists(perf, min_size=2, max_size=6))
def test_adding_to_critical_path_is_monotone(profiles):
    fns = {f"F{i}": {"edge": p} for i, p in enumerate(profiles)}
    placement = {f: "e1" for f in fns}
    short = make_app(fns, critical=list(fns)[:-1])
    full = make_app(fns, critical=list(fns))
    assert h_delay(full, placement, INFRA) >= h_delay(short, placement, INFRA)
    assert h_throughput(full, placement, INFRA) <= h_throughput(short, placement, INFRA)


@given(st.lists(perf, min_size=1, max_size=6), st.randoms(use_true_random=False),
       st.floats(1, 300), st.floats(0.1, 100))
def test_feasibility_invariant_under_path_permutation(profiles, rnd, tau, omega):
    fns = {f"F{i}": {"edge": p} for i, p in enumerate(profiles)}
    placement = {f: "e1" for f in fns}
    order = list(fns)
    rnd.shuffle(order)
    a = make_app(fns, critical=list(fns), max_delay=tau, min_throughput=omega)
    b = make_app(fns, critical=order, max_delay=tau, min_throughput=omega)
    assert check_requirements(a, placement, INFRA).feasible == check_requirements(b, placement, INFRA).feasible
