"""Multi-tier infrastructure: nodes, tiers, resource types and capacity accounting.

Resource types are plain strings. ``COMPUTE`` is measured in (possibly
fractional) CPU cores, ``NETWORK`` in Mbps of ingress bandwidth at the node
hosting a function. Further kinds can be declared by name.
"""

from __future__ import annotations

import math
import numbers
from collections import Counter
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

from roma.errors import UnknownReferenceError, ValidationResult

COMPUTE = "com"
NETWORK = "net"
BUILTIN_RESOURCES = (COMPUTE, NETWORK)


@dataclass(frozen=True)
class ComputeNode:
    id: str
    tier: str
    capacity: Mapping[str, float]

    def __post_init__(self):
        object.__setattr__(self, "capacity", MappingProxyType(dict(self.capacity)))

    def cap(self, resource: str) -> float:
        return self.capacity.get(resource, 0.0)


@dataclass(frozen=True)
class Infrastructure:
    nodes: tuple[ComputeNode, ...]
    tiers: tuple[str, ...]
    resource_types: tuple[str, ...] = BUILTIN_RESOURCES
    _by_id: Mapping[str, ComputeNode] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "tiers", tuple(self.tiers))
        object.__setattr__(self, "resource_types", tuple(self.resource_types))
        # first occurrence wins; duplicates are reported by validate_infrastructure
        by_id: dict[str, ComputeNode] = {}
        for n in self.nodes:
            by_id.setdefault(n.id, n)
        object.__setattr__(self, "_by_id", MappingProxyType(by_id))

    def node(self, node_id: str) -> ComputeNode:
        try:
            return self._by_id[node_id]
        except KeyError:
            raise UnknownReferenceError(f"unknown node {node_id!r}") from None

    def nodes_in_tier(self, tier: str) -> list[ComputeNode]:
        return [n for n in self.nodes if n.tier == tier]

    @property
    def node_ids(self) -> list[str]:
        return [n.id for n in self.nodes]


def validate_infrastructure(infra: Infrastructure) -> ValidationResult:
    """Check every structural invariant and report all breaches found."""
    res = ValidationResult()
    v = res.violations

    for rt in BUILTIN_RESOURCES:
        if rt not in infra.resource_types:
            v.append(f"built-in resource type {rt!r} not declared")
    for rt, count in Counter(infra.resource_types).items():
        if count > 1:
            v.append(f"duplicate resource type {rt}")
    for tier, count in Counter(infra.tiers).items():
        if count > 1:
            v.append(f"duplicate tier {tier}")
    for nid, count in Counter(n.id for n in infra.nodes).items():
        if count > 1:
            v.append(f"duplicate node id {nid}")

    tiers = set(infra.tiers)
    for n in infra.nodes:
        if n.tier not in tiers:
            v.append(f"node {n.id}: tier {n.tier!r} not declared")
        for rt in infra.resource_types:
            if rt not in n.capacity:
                v.append(f"node {n.id}: missing capacity for {rt}")
        for rt, amount in n.capacity.items():
            if rt not in infra.resource_types:
                v.append(f"node {n.id}: capacity for undeclared resource type {rt}")
            if not isinstance(amount, numbers.Real) or math.isnan(amount):
                v.append(f"node {n.id}: capacity {rt} is not a number")
            elif amount < 0:
                v.append(f"node {n.id}: negative capacity {rt}={amount}")
    return res


def remaining_capacity(
    infra: Infrastructure,
    allocations: Mapping[tuple[str, str, str], float],
) -> dict[tuple[str, str], float]:
    """Capacity left on every (node, resource) after subtracting allocations.

    ``allocations`` is keyed by ``(function, node, resource)``. Results may be
    negative when a node is oversubscribed.
    """
    remaining = {
        (n.id, rt): n.cap(rt) for n in infra.nodes for rt in infra.resource_types
    }
    for (fn, node_id, rt), amount in allocations.items():
        infra.node(node_id)
        if rt not in infra.resource_types:
            raise UnknownReferenceError(f"unknown resource type {rt!r} (function {fn})")
        remaining[(node_id, rt)] -= amount
    return remaining
