"""Application model: functions, dependency edges, critical path, requirements."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping, NamedTuple, Optional

from roma.errors import UnknownReferenceError, ValidationResult
from roma.fabric import Infrastructure


class PerfProfile(NamedTuple):
    delay: float  # ms contributed to the end-to-end delay
    throughput: float  # units/s the function sustains


@dataclass(frozen=True)
class FunctionSpec:
    id: str
    perf_profile: Mapping[str, PerfProfile]
    tier_constraint: Optional[str] = None

    def __post_init__(self):
        prof = {t: PerfProfile(*p) for t, p in dict(self.perf_profile).items()}
        object.__setattr__(self, "perf_profile", MappingProxyType(prof))

    def profile_at(self, tier: str) -> PerfProfile:
        try:
            return self.perf_profile[tier]
        except KeyError:
            raise UnknownReferenceError(
                f"function {self.id} has no performance profile for tier {tier!r}"
            ) from None

    def allowed_tiers(self) -> list[str]:
        if self.tier_constraint is not None:
            return [self.tier_constraint]
        return list(self.perf_profile)


class Requirements(NamedTuple):
    max_delay: float  # ms
    min_throughput: float  # units/s


@dataclass(frozen=True)
class AppGraph:
    functions: tuple[FunctionSpec, ...]
    edges: tuple[tuple[str, str], ...]
    critical_path: tuple[str, ...]
    requirements: Requirements

    def __post_init__(self):
        object.__setattr__(self, "functions", tuple(self.functions))
        object.__setattr__(self, "edges", tuple(tuple(e) for e in self.edges))
        object.__setattr__(self, "critical_path", tuple(self.critical_path))
        object.__setattr__(self, "requirements", Requirements(*self.requirements))

    @property
    def function_ids(self) -> list[str]:
        return [f.id for f in self.functions]

    def function(self, fn_id: str) -> FunctionSpec:
        for f in self.functions:
            if f.id == fn_id:
                return f
        raise UnknownReferenceError(f"unknown function {fn_id!r}")


def _critical_profiles(app: AppGraph, placement: Mapping[str, str], infra: Infrastructure):
    out = []
    for fn_id in app.critical_path:
        if fn_id not in placement:
            raise UnknownReferenceError(f"function {fn_id} is not placed")
        tier = infra.node(placement[fn_id]).tier
        out.append(app.function(fn_id).profile_at(tier))
    return out


def h_delay(app: AppGraph, placement: Mapping[str, str], infra: Infrastructure) -> float:
    """End-to-end delay: sum of per-function delays along the critical path."""
    return math.fsum(p.delay for p in _critical_profiles(app, placement, infra))


def h_throughput(app: AppGraph, placement: Mapping[str, str], infra: Infrastructure) -> float:
    """End-to-end throughput: the slowest function on the critical path."""
    return min(p.throughput for p in _critical_profiles(app, placement, infra))


class RequirementCheck(NamedTuple):
    feasible: bool
    delay: float
    throughput: float


def check_requirements(
    app: AppGraph, placement: Mapping[str, str], infra: Infrastructure
) -> RequirementCheck:
    delay = h_delay(app, placement, infra)
    thr = h_throughput(app, placement, infra)
    req = app.requirements
    return RequirementCheck(delay <= req.max_delay and thr >= req.min_throughput, delay, thr)


def _has_cycle(nodes: list[str], edges) -> bool:
    # Kahn's algorithm; leftover nodes sit on a cycle
    indeg = {n: 0 for n in nodes}
    succ: dict[str, list[str]] = {n: [] for n in nodes}
    for a, b in edges:
        if a in succ and b in indeg:
            succ[a].append(b)
            indeg[b] += 1
    queue = [n for n in nodes if indeg[n] == 0]
    seen = 0
    while queue:
        n = queue.pop()
        seen += 1
        for m in succ[n]:
            indeg[m] -= 1
            if indeg[m] == 0:
                queue.append(m)
    return seen < len(nodes)


def validate_graph(app: AppGraph, tiers: Optional[list[str]] = None) -> ValidationResult:
    """Check all graph and function invariants.

    When ``tiers`` is given, tier names in profiles and constraints must be
    among them.
    """
    res = ValidationResult()
    v = res.violations
    ids = app.function_ids
    known = set(ids)

    if not ids:
        v.append("application has no functions")
    for fid, count in Counter(ids).items():
        if count > 1:
            v.append(f"duplicate function id {fid}")

    for f in app.functions:
        if not f.perf_profile:
            v.append(f"function {f.id}: empty performance profile")
        for tier, prof in f.perf_profile.items():
            if tiers is not None and tier not in tiers:
                v.append(f"function {f.id}: profile tier {tier!r} not declared")
            if not prof.delay >= 0:
                v.append(f"function {f.id}: negative delay at tier {tier}")
            if not prof.throughput > 0:
                v.append(f"function {f.id}: non-positive throughput at tier {tier}")
        if f.tier_constraint is not None and f.tier_constraint not in f.perf_profile:
            v.append(
                f"function {f.id}: tier constraint {f.tier_constraint!r} has no profile entry"
            )

    for a, b in app.edges:
        for end in (a, b):
            if end not in known:
                v.append(f"edge {a}->{b}: unknown function {end}")
    if _has_cycle(ids, app.edges):
        v.append("cycle detected")

    if not app.critical_path:
        v.append("critical path is empty")
    for fid in app.critical_path:
        if fid not in known:
            v.append(f"critical path references unknown function {fid}")
    if len(set(app.critical_path)) != len(app.critical_path):
        v.append("critical path repeats a function")

    req = app.requirements
    if not req.max_delay > 0:
        v.append("max delay must be positive")
    if not req.min_throughput > 0:
        v.append("min throughput must be positive")
    return res
