"""Independent re-check of a plan against the model's constraints.

Works from the plan's numbers and the scenario data only, never from LP
status, so it can vouch for both optimised and static plans.
"""

from __future__ import annotations

from typing import Optional

from roma.appgraph import AppGraph, h_delay, h_throughput
from roma.coupling import CouplingSet
from roma.fabric import Infrastructure
from roma.orchestrator import AllocationPlan, SolverConfig

AUDIT_TOL = 1e-7


def audit_plan(
    plan: AllocationPlan,
    app: AppGraph,
    infra: Infrastructure,
    couplings: CouplingSet,
    cfg: Optional[SolverConfig] = None,
    tol: float = AUDIT_TOL,
) -> list[str]:
    """Return every violated constraint; an empty list means the plan is valid."""
    p_max = cfg.p_max if cfg else couplings.p_max
    out: list[str] = []
    assign = plan.placement.assignment
    node_ids = set(infra.node_ids)

    # one node per function, respecting tier constraints
    for f in app.functions:
        node = assign.get(f.id)
        if node is None:
            out.append(f"placement: function {f.id} unplaced")
            continue
        if node not in node_ids:
            out.append(f"placement: function {f.id} on unknown node {node}")
            continue
        tier = infra.node(node).tier
        if f.tier_constraint is not None and tier != f.tier_constraint:
            out.append(f"placement: {f.id} on tier {tier}, needs {f.tier_constraint}")
    extra = set(assign) - set(app.function_ids)
    if extra:
        out.append(f"placement: unknown functions {sorted(extra)}")
    if out:
        return out

    y = dict(plan.allocations)
    for f in app.function_ids:
        for rt in infra.resource_types:
            if (f, rt) not in y:
                out.append(f"allocation: missing y[{f},{rt}]")
    if out:
        return out

    p = plan.performance
    for key, c in couplings:
        need = c.alpha * y[(key.src_fn, key.src_res)] + c.beta * p + c.gamma
        have = y[(key.dst_fn, key.dst_res)]
        if need > have + tol:
            out.append(f"coupling {key}: requires {need:.9g}, allocated {have:.9g}")

    load: dict[tuple[str, str], float] = {}
    for (f, rt), amount in y.items():
        node = assign[f]
        cap = infra.node(node).cap(rt)
        if amount < -tol:
            out.append(f"domain: y[{f},{rt}]={amount:.9g} negative")
        if amount > cap + tol:
            out.append(f"host capacity: y[{f},{rt}]={amount:.9g} > {cap:g} on {node}")
        load[(node, rt)] = load.get((node, rt), 0.0) + amount
        if cfg is not None:
            floor = cfg.allocation_floor.get((f, rt), 0.0)
            if amount < floor - tol:
                out.append(f"floor: y[{f},{rt}]={amount:.9g} < {floor:g}")
            limit = cfg.allocation_cap.get((f, rt))
            if limit is not None and amount > limit + tol:
                out.append(f"allocation cap: y[{f},{rt}]={amount:.9g} > {limit:g}")
    for (node, rt), total in load.items():
        cap = infra.node(node).cap(rt)
        if total > cap + tol:
            out.append(f"node capacity: {node}/{rt} load {total:.9g} > {cap:g}")

    req = app.requirements
    delay = h_delay(app, assign, infra)
    thr = h_throughput(app, assign, infra)
    if delay > req.max_delay + tol:
        out.append(f"delay: {delay:g} > {req.max_delay:g}")
    if thr < req.min_throughput - tol:
        out.append(f"throughput: {thr:g} < {req.min_throughput:g}")

    if p < -tol or p > p_max + tol:
        out.append(f"domain: performance {p:.9g} outside [0, {p_max:g}]")
    return out
