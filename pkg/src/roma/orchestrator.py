"""Joint placement and resource allocation.

The integer part (which node hosts each function) is solved by enumerating every
tier-feasible placement that meets the delay/throughput requirements. For each
placement the remaining problem is an LP over per-function allocations and the
application performance ``p``:

    minimise   eta * sum(y) - (1 - eta) * p
    subject to alpha*y[v,t] + beta*p + gamma <= y[v',t']   for each coupling
               y[v,t] <= capacity of the hosting node
               sum of y[.,t] over functions on a node <= node capacity
               floor <= y,  0 <= p <= p_max

The best plan over all placements wins; ties go to the earliest placement.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, NamedTuple, Optional

from roma.appgraph import AppGraph, check_requirements
from roma.coupling import CouplingSet
from roma.errors import (
    CapacityError,
    InfeasibleError,
    UnknownReferenceError,
    ValidationError,
)
from roma.fabric import Infrastructure
from roma.lp import INF, Constraint, LinearProgram, LpStatus, solve

DEFAULT_ETA = 0.05
CAPACITY_TOL = 1e-9
# objectives closer than this count as a tie (earliest placement kept)
TIE_TOL = 1e-9

AllocKey = tuple[str, str]  # (function id, resource type)


def _frozen(mapping) -> Mapping:
    return MappingProxyType(dict(mapping))


@dataclass(frozen=True)
class Placement:
    assignment: Mapping[str, str]

    def __post_init__(self):
        object.__setattr__(self, "assignment", _frozen(self.assignment))

    def __getitem__(self, fn_id: str) -> str:
        return self.assignment[fn_id]

    def functions_on(self, node_id: str) -> list[str]:
        return [f for f, n in self.assignment.items() if n == node_id]

    def __repr__(self) -> str:
        inner = ", ".join(f"{f}->{n}" for f, n in self.assignment.items())
        return f"Placement({inner})"


@dataclass(frozen=True)
class SolverConfig:
    p_max: float
    eta: float = DEFAULT_ETA
    allocation_floor: Mapping[AllocKey, float] = field(default_factory=dict)
    # per-function budget on top of node capacity; used to model a shrinking slice
    allocation_cap: Mapping[AllocKey, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "allocation_floor", _frozen(self.allocation_floor))
        object.__setattr__(self, "allocation_cap", _frozen(self.allocation_cap))
        problems = []
        if not 0.0 <= self.eta <= 1.0:
            problems.append(f"eta out of range: {self.eta}")
        if not (self.p_max > 0 and math.isfinite(self.p_max)):
            problems.append(f"p_max must be positive, got {self.p_max}")
        for key, amount in self.allocation_floor.items():
            if not amount >= 0:
                problems.append(f"negative allocation floor for {key}")
        for key, amount in self.allocation_cap.items():
            if not amount >= 0:
                problems.append(f"negative allocation cap for {key}")
        if problems:
            raise ValidationError(problems, context="solver config")

    @classmethod
    def for_couplings(cls, couplings: CouplingSet, **kwargs) -> "SolverConfig":
        return cls(p_max=couplings.p_max, **kwargs)


@dataclass(frozen=True)
class AllocationPlan:
    placement: Placement
    allocations: Mapping[AllocKey, float]
    performance: float
    objective_value: float
    feasible_delay: float
    feasible_throughput: float
    # False only for static plans whose allocations cannot satisfy the couplings
    couplings_satisfied: bool = True

    def __post_init__(self):
        object.__setattr__(self, "allocations", _frozen(self.allocations))

    def total(self, resource: str) -> float:
        return math.fsum(v for (_, rt), v in self.allocations.items() if rt == resource)

    def resources(self) -> list[str]:
        return list(dict.fromkeys(rt for _, rt in self.allocations))

    def node_allocations(self) -> dict[tuple[str, str, str], float]:
        """Allocations keyed ``(function, node, resource)``."""
        return {(f, self.placement[f], rt): v for (f, rt), v in self.allocations.items()}


@dataclass(frozen=True)
class SavingsReport:
    roma_totals: Mapping[str, float]
    static_totals: Mapping[str, float]
    saving_pct: Mapping[str, float]
    performance_delta: float

    @property
    def compute_saving_pct(self) -> float:
        return self.saving_pct.get("com", 0.0)

    @property
    def network_saving_pct(self) -> float:
        return self.saving_pct.get("net", 0.0)


def enumerate_placements(app: AppGraph, infra: Infrastructure) -> list[Placement]:
    """Every tier-feasible placement meeting the requirements, in lexicographic order.

    A function may only go to nodes whose tier appears in its performance
    profile (or matches its tier constraint, when set).
    """
    candidates = []
    for f in app.functions:
        allowed = f.allowed_tiers()
        nodes = [n.id for n in infra.nodes if n.tier in allowed]
        if not nodes:
            if f.tier_constraint is not None:
                raise InfeasibleError(
                    f"function {f.id}: no node in tier {f.tier_constraint!r}"
                )
            raise InfeasibleError(f"function {f.id}: no node in any profiled tier {allowed}")
        candidates.append(nodes)

    ids = app.function_ids
    out = []
    for combo in itertools.product(*candidates):
        assignment = dict(zip(ids, combo))
        if check_requirements(app, assignment, infra).feasible:
            out.append(Placement(assignment))
    return out


def variable_layout(app: AppGraph, infra: Infrastructure) -> dict[AllocKey, int]:
    """Column index of each allocation variable; ``p`` comes last."""
    keys = [(f, rt) for f in app.function_ids for rt in infra.resource_types]
    return {k: i for i, k in enumerate(keys)}


def build_allocation_lp(
    app: AppGraph,
    infra: Infrastructure,
    placement: Placement,
    couplings: CouplingSet,
    cfg: SolverConfig,
) -> LinearProgram:
    layout = variable_layout(app, infra)
    p_idx = len(layout)
    nvar = p_idx + 1
    names = [f"y[{f},{rt}]" for f, rt in layout] + ["p"]

    objective = [cfg.eta] * p_idx + [-(1.0 - cfg.eta)]
    constraints: list[Constraint] = []
    bounds: list[tuple[float, float]] = [(0.0, INF)] * nvar

    for (f, rt), j in layout.items():
        cap = infra.node(placement[f]).cap(rt)
        if (f, rt) in cfg.allocation_cap:
            cap = min(cap, cfg.allocation_cap[(f, rt)])
        floor = max(0.0, cfg.allocation_floor.get((f, rt), 0.0))
        if floor <= cap:
            bounds[j] = (floor, cap)
        else:
            # keep the bound box valid; the row makes the LP report infeasible
            bounds[j] = (0.0, cap)
            constraints.append(Constraint({j: 1.0}, ">=", floor, f"floor[{f},{rt}]"))
    bounds[p_idx] = (0.0, cfg.p_max)

    for key, model in couplings:
        for fn, rt in ((key.src_fn, key.src_res), (key.dst_fn, key.dst_res)):
            if (fn, rt) not in layout:
                raise UnknownReferenceError(
                    f"coupling {key} references unknown function/resource {fn}/{rt}"
                )
        src = layout[(key.src_fn, key.src_res)]
        dst = layout[(key.dst_fn, key.dst_res)]
        constraints.append(
            Constraint(
                {src: model.alpha, p_idx: model.beta, dst: -1.0},
                "<=",
                -model.gamma,
                f"couple[{key}]",
            )
        )

    for node in infra.nodes:
        hosted = placement.functions_on(node.id)
        if len(hosted) < 2:
            continue  # single tenant: already covered by the variable bound
        for rt in infra.resource_types:
            constraints.append(
                Constraint(
                    {layout[(f, rt)]: 1.0 for f in hosted},
                    "<=",
                    float(node.cap(rt)),
                    f"cap[{node.id},{rt}]",
                )
            )

    return LinearProgram(nvar, objective, constraints, bounds, names)


def solve_placement(
    app: AppGraph,
    infra: Infrastructure,
    placement: Placement,
    couplings: CouplingSet,
    cfg: SolverConfig,
) -> Optional[AllocationPlan]:
    """Optimal allocation for a fixed placement, or None when the LP is infeasible."""
    lp = build_allocation_lp(app, infra, placement, couplings, cfg)
    sol = solve(lp)
    if sol.status is LpStatus.INFEASIBLE:
        return None
    if sol.status is LpStatus.UNBOUNDED:
        # every variable is boxed, so this means a solver defect
        raise RuntimeError(f"allocation LP reported unbounded for {placement}")
    layout = variable_layout(app, infra)
    allocs = {k: sol.point[j] for k, j in layout.items()}
    req = check_requirements(app, placement.assignment, infra)
    return AllocationPlan(
        placement=placement,
        allocations=allocs,
        performance=sol.point[-1],
        objective_value=sol.objective_value,
        feasible_delay=req.delay,
        feasible_throughput=req.throughput,
    )


def solve_roma(
    app: AppGraph,
    infra: Infrastructure,
    couplings: CouplingSet,
    cfg: SolverConfig,
    placements: Optional[Iterable[Placement]] = None,
    max_workers: Optional[int] = None,
) -> AllocationPlan:
    """Best plan over all feasible placements.

    ``max_workers > 1`` solves placements on a thread pool; results are reduced
    in enumeration order, so the answer does not depend on scheduling.
    """
    if placements is None:
        placements = enumerate_placements(app, infra)
    placements = list(placements)
    if not placements:
        raise InfeasibleError("no placement satisfies the tier and delay/throughput constraints")

    def one(pl):
        return solve_placement(app, infra, pl, couplings, cfg)

    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            plans = list(pool.map(one, placements))
    else:
        plans = [one(pl) for pl in placements]

    best = None
    for plan in plans:
        if plan is None:
            continue
        if best is None or plan.objective_value < best.objective_value - TIE_TOL:
            best = plan
    if best is None:
        raise InfeasibleError(
            f"allocation LP infeasible for all {len(placements)} candidate placements"
        )
    return best


class PerformanceEstimate(NamedTuple):
    p: float
    feasible: bool


def predicted_performance(
    couplings: CouplingSet,
    allocations: Mapping[AllocKey, float],
    p_max: Optional[float] = None,
) -> PerformanceEstimate:
    """Highest ``p`` in ``[0, p_max]`` the couplings allow at fixed allocations.

    Couplings with ``beta > 0`` cap ``p`` from above, those with ``beta < 0``
    bound it from below and ``beta == 0`` ones are a plain check. If no ``p``
    satisfies them all, returns ``p = 0`` flagged infeasible. Missing
    allocations count as 0.
    """
    p_max = couplings.p_max if p_max is None else p_max
    lo, hi = 0.0, p_max
    ok = True
    for key, c in couplings:
        x = allocations.get((key.src_fn, key.src_res), 0.0)
        y = allocations.get((key.dst_fn, key.dst_res), 0.0)
        slack = y - c.alpha * x - c.gamma  # need beta * p <= slack
        if c.beta > 0:
            hi = min(hi, slack / c.beta)
        elif c.beta < 0:
            lo = max(lo, slack / c.beta)
        elif slack < -CAPACITY_TOL:
            ok = False
    if not ok or lo > hi + CAPACITY_TOL:
        return PerformanceEstimate(0.0, False)
    return PerformanceEstimate(max(hi, lo), True)


def static_allocate(
    app: AppGraph,
    infra: Infrastructure,
    couplings: CouplingSet,
    fixed: Mapping[AllocKey, float],
    placement: Placement,
    cfg: Optional[SolverConfig] = None,
) -> AllocationPlan:
    """Baseline plan with hand-picked allocations; unlisted pairs get 0.

    Raises CapacityError if the fixed amounts do not fit on their hosts.
    """
    cfg = cfg or SolverConfig.for_couplings(couplings)
    layout = variable_layout(app, infra)
    for key in fixed:
        if key not in layout:
            raise UnknownReferenceError(f"static allocation for unknown function/resource {key}")
    allocs = {k: float(fixed.get(k, 0.0)) for k in layout}

    problems = []
    used: dict[tuple[str, str], float] = {}
    for (f, rt), amount in allocs.items():
        if amount < 0:
            problems.append(f"negative static allocation {f}/{rt}")
        node = placement[f]
        cap = infra.node(node).cap(rt)
        if amount > cap + CAPACITY_TOL:
            problems.append(f"{f}/{rt}={amount:g} exceeds capacity {cap:g} of node {node}")
        used[(node, rt)] = used.get((node, rt), 0.0) + amount
    for (node, rt), total in used.items():
        cap = infra.node(node).cap(rt)
        if total > cap + CAPACITY_TOL and len(placement.functions_on(node)) > 1:
            problems.append(f"node {node}: total {rt}={total:g} exceeds capacity {cap:g}")
    if problems:
        raise CapacityError("; ".join(problems))

    est = predicted_performance(couplings, allocs, cfg.p_max)
    req = check_requirements(app, placement.assignment, infra)
    objective = cfg.eta * math.fsum(allocs.values()) - (1.0 - cfg.eta) * est.p
    return AllocationPlan(
        placement=placement,
        allocations=allocs,
        performance=est.p,
        objective_value=objective,
        feasible_delay=req.delay,
        feasible_throughput=req.throughput,
        couplings_satisfied=est.feasible,
    )


def compare(roma: AllocationPlan, static: AllocationPlan) -> SavingsReport:
    """Per-resource savings of ``roma`` relative to ``static``."""
    fns_a = {f for f, _ in roma.allocations}
    fns_b = {f for f, _ in static.allocations}
    if fns_a != fns_b:
        raise ValueError(
            f"plans cover different functions: {sorted(fns_a)} vs {sorted(fns_b)}"
        )
    resources = list(dict.fromkeys(roma.resources() + static.resources()))
    r_tot = {rt: roma.total(rt) for rt in resources}
    s_tot = {rt: static.total(rt) for rt in resources}
    saving = {
        rt: (100.0 * (s_tot[rt] - r_tot[rt]) / s_tot[rt] if s_tot[rt] != 0 else 0.0)
        for rt in resources
    }
    return SavingsReport(
        _frozen(r_tot),
        _frozen(s_tot),
        _frozen(saving),
        roma.performance - static.performance,
    )
