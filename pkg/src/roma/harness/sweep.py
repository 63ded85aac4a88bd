"""Sweep one function's resource budget and compare optimised vs static plans."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

from roma.errors import CapacityError, InfeasibleError
from roma.harness.scenario import Scenario, SweepSpec
from roma.orchestrator import (
    AllocationPlan,
    Placement,
    SavingsReport,
    compare,
    enumerate_placements,
    predicted_performance,
    solve_roma,
    static_allocate,
)

OK = "ok"
ROMA_INFEASIBLE = "roma_infeasible"
STATIC_INFEASIBLE = "static_infeasible"
BOTH_INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class SweepRow:
    level: float
    status: str
    roma: Optional[AllocationPlan]
    static: Optional[AllocationPlan]
    savings: Optional[SavingsReport]


@dataclass(frozen=True)
class SweepResult:
    scenario: str
    spec: SweepSpec
    resource_types: tuple[str, ...]
    rows: tuple[SweepRow, ...]


def static_placement(scenario: Scenario) -> Placement:
    """Declared static placement, else the first feasible one."""
    if scenario.static and scenario.static.placement is not None:
        return scenario.static.placement
    placements = enumerate_placements(scenario.app, scenario.infra)
    if not placements:
        raise InfeasibleError("no feasible placement for the static baseline")
    return placements[0]


def _level_inputs(scenario: Scenario, spec: SweepSpec, level: float):
    """Solver config, baseline reservation and the baseline's usable amounts."""
    cfg = scenario.solver
    fixed = dict(scenario.static.fixed) if scenario.static else {}
    key = spec.target
    if spec.mode == "capacity":
        cfg = replace(cfg, allocation_cap={**cfg.allocation_cap, key: level})
        fixed.setdefault(key, level)
        # the baseline keeps its reservation but can only use what is available
        effective = {**fixed, key: min(fixed[key], level)}
    else:
        cfg = replace(cfg, allocation_floor={**cfg.allocation_floor, key: level})
        fixed[key] = level
        effective = fixed
    return cfg, fixed, effective


def run_level(scenario: Scenario, spec: SweepSpec, level: float, placement: Placement) -> SweepRow:
    cfg, fixed, effective = _level_inputs(scenario, spec, level)
    try:
        roma = solve_roma(scenario.app, scenario.infra, scenario.couplings, cfg)
    except InfeasibleError:
        roma = None
    try:
        static = static_allocate(scenario.app, scenario.infra, scenario.couplings, fixed, placement, cfg)
    except CapacityError:
        static = None
    if static is not None and effective != fixed:
        est = predicted_performance(scenario.couplings, effective, cfg.p_max)
        static = replace(
            static,
            performance=est.p,
            objective_value=cfg.eta * math.fsum(static.allocations.values()) - (1 - cfg.eta) * est.p,
            couplings_satisfied=est.feasible,
        )
    if static is not None and not static.couplings_satisfied:
        static = None

    if roma and static:
        status = OK
    elif static:
        status = ROMA_INFEASIBLE
    elif roma:
        status = STATIC_INFEASIBLE
    else:
        status = BOTH_INFEASIBLE
    savings = compare(roma, static) if roma and static else None
    return SweepRow(level, status, roma, static, savings)


def run_sweep(scenario: Scenario, max_workers: Optional[int] = None) -> SweepResult:
    """One row per sweep level, in level order.

    In ``capacity`` mode each level caps the swept function's allocation. The
    baseline keeps its fixed reservation (the level itself when none is
    declared) and its performance is evaluated on the part of it that fits
    under the cap. In ``floor`` mode the level is a minimum for the optimiser
    and the exact amount for the baseline.
    """
    spec = scenario.sweep
    if spec is None:
        raise ValueError(f"scenario {scenario.name!r} declares no sweep")
    placement = static_placement(scenario)

    def one(level):
        return run_level(scenario, spec, level, placement)

    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            rows = list(pool.map(one, spec.levels))
    else:
        rows = [one(lv) for lv in spec.levels]
    return SweepResult(scenario.name, spec, tuple(scenario.infra.resource_types), tuple(rows))
