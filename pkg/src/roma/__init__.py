"""Joint network/compute resource orchestration for microservice applications."""

from roma.appgraph import AppGraph, FunctionSpec, PerfProfile
from roma.coupling import CouplingKey, CouplingSet, LinearCoupling, PerformanceGrid
from roma.errors import (
    CapacityError,
    DegenerateFitError,
    InfeasibleError,
    LpStructureError,
    RomaError,
    ScenarioError,
    UnknownReferenceError,
    ValidationError,
)
from roma.fabric import COMPUTE, NETWORK, ComputeNode, Infrastructure
from roma.lp import Constraint, LinearProgram, LpSolution, solve
from roma.orchestrator import (
    AllocationPlan,
    Placement,
    SavingsReport,
    SolverConfig,
    compare,
    solve_roma,
    static_allocate,
)

__version__ = "0.1.0"

__all__ = [
    "AllocationPlan",
    "AppGraph",
    "COMPUTE",
    "CapacityError",
    "ComputeNode",
    "Constraint",
    "CouplingKey",
    "CouplingSet",
    "DegenerateFitError",
    "FunctionSpec",
    "InfeasibleError",
    "Infrastructure",
    "LinearCoupling",
    "LinearProgram",
    "LpSolution",
    "LpStructureError",
    "NETWORK",
    "PerfProfile",
    "PerformanceGrid",
    "Placement",
    "RomaError",
    "SavingsReport",
    "ScenarioError",
    "SolverConfig",
    "UnknownReferenceError",
    "ValidationError",
    "compare",
    "solve",
    "solve_roma",
    "static_allocate",
]
