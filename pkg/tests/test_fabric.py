from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from builders import make_infra
from roma.errors import UnknownReferenceError
from roma.fabric import ComputeNode, Infrastructure, remaining_capacity, validate_infrastructure


def test_minimal_infra_is_valid():
    infra = make_infra(("n1", "edge", {"com": 2, "net": 10}), tiers=("edge",))
    assert validate_infrastructure(infra).ok


def test_duplicate_node_id_reported():
    infra = make_infra(("n1", "edge", {"com": 2, "net": 1}), ("n1", "edge", {"com": 1, "net": 1}))
    res = validate_infrastructure(infra)
    assert not res.ok
    assert "duplicate node id n1" in res.violations


def test_negative_capacity_reported():
    infra = make_infra(("n1", "edge", {"com": -1, "net": 0}))
    res = validate_infrastructure(infra)
    assert any("negative capacity" in v for v in res.violations)


def test_missing_capacity_and_undeclared_tier():
    infra = make_infra(("n1", "fog", {"com": 1}), tiers=("edge",))
    msgs = validate_infrastructure(infra).violations
    assert any("tier 'fog' not declared" in m for m in msgs)
    assert any("missing capacity for net" in m for m in msgs)


def test_builtin_resource_types_required():
    infra = Infrastructure((ComputeNode("n1", "edge", {"com": 1}),), ("edge",), ("com",))
    assert any("'net'" in v for v in validate_infrastructure(infra).violations)


def test_remaining_capacity_arithmetic(edge_infra):
    rem = remaining_capacity(edge_infra, {("F1", "n1", "com"): 0.5, ("F2", "n1", "com"): 1.0})
    assert rem[("n1", "com")] == 0.5
    assert rem[("n1", "net")] == 10.0


def test_remaining_capacity_identity(edge_infra):
    assert remaining_capacity(edge_infra, {}) == {("n1", "com"): 2.0, ("n1", "net"): 10.0}


def test_remaining_capacity_oversubscription_is_negative(edge_infra):
    rem = remaining_capacity(edge_infra, {("F1", "n1", "com"): 2.0, ("F2", "n1", "com"): 1.0})
    assert rem[("n1", "com")] == -1.0


@pytest.mark.parametrize("key", [("F1", "nope", "com"), ("F1", "n1", "gpu")])
def test_remaining_capacity_unknown_reference(edge_infra, key):
    with pytest.raises(UnknownReferenceError, match="nope|gpu"):
        remaining_capacity(edge_infra, {key: 1.0})


amounts = st.fractions(min_value=0, max_value=10, max_denominator=16)


@given(st.lists(st.tuples(st.sampled_from(["F1", "F2", "F3"]), st.sampled_from(["com", "net"]), amounts,
                          amounts), max_size=6, unique_by=lambda t: (t[0], t[1])))
def test_remaining_capacity_is_linear_exact(parts):
    infra = make_infra(("n1", "edge", {"com": Fraction(7, 2), "net": Fraction(10)}))
    a1 = {(f, "n1", r): x for f, r, x, _ in parts}
    a2 = {(f, "n1", r): y for f, r, _, y in parts}
    both = {k: a1[k] + a2[k] for k in a1}
    r_both = remaining_capacity(infra, both)
    r1 = remaining_capacity(infra, a1)
    used2 = {k: infra.node(k[0]).cap(k[1]) - v for k, v in remaining_capacity(infra, a2).items()}
    assert r_both == {k: r1[k] - used2[k] for k in r1}
