"""Scenario files.

A scenario is a YAML document (``schema_version: 1``) describing the
infrastructure, the application, coupling models (inline coefficients or
measured grids that are fitted at load time), solver settings, an optional
static baseline and an optional sweep. See ``docs/scenario-format.md``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional

import yaml

from roma.appgraph import AppGraph, FunctionSpec, PerfProfile, Requirements, validate_graph
from roma.coupling import (
    CouplingKey,
    CouplingSet,
    LinearCoupling,
    PerformanceGrid,
    RegressionMetrics,
    fit_grid,
)
from roma.errors import RomaError, ScenarioError, ValidationError
from roma.fabric import BUILTIN_RESOURCES, ComputeNode, Infrastructure, validate_infrastructure
from roma.orchestrator import DEFAULT_ETA, AllocKey, Placement, SolverConfig

SCHEMA_VERSION = 1
GRID_COLUMNS = ("x_level", "y_level", "performance")
SWEEP_MODES = ("capacity", "floor")


@dataclass(frozen=True)
class StaticSpec:
    fixed: Mapping[AllocKey, float]
    placement: Optional[Placement] = None


@dataclass(frozen=True)
class SweepSpec:
    function: str
    resource: str
    levels: tuple[float, ...]
    mode: str = "capacity"

    @property
    def target(self) -> AllocKey:
        return (self.function, self.resource)


@dataclass(frozen=True)
class FitRecord:
    """Provenance of a coupling fitted from a grid file."""

    grid_path: str
    n_samples: int
    metrics: RegressionMetrics


@dataclass(frozen=True)
class Scenario:
    name: str
    infra: Infrastructure
    app: AppGraph
    couplings: CouplingSet
    solver: SolverConfig
    static: Optional[StaticSpec] = None
    sweep: Optional[SweepSpec] = None
    fits: Mapping[CouplingKey, FitRecord] = field(default_factory=dict)


def grid_sidecar_path(grid_path: Path) -> Path:
    """``coupling.csv`` -> ``coupling.meta.yaml``."""
    return grid_path.with_suffix(".meta.yaml")


def read_grid(path: str | Path) -> tuple[PerformanceGrid, dict]:
    """Read a ``x_level,y_level,performance`` grid and its optional sidecar.

    The sidecar may declare ``key`` (four names), ``unit`` (percent|score) and
    free-form ``x_unit``/``y_unit``.
    """
    path = Path(path)
    meta: dict = {}
    side = grid_sidecar_path(path)
    if side.exists():
        meta = _read_yaml(side) or {}
        if not isinstance(meta, dict):
            raise ScenarioError(f"{side}: expected a mapping")
    try:
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or tuple(h.strip() for h in header) != GRID_COLUMNS:
                raise ScenarioError(f"{path}:1: header must be {','.join(GRID_COLUMNS)}")
            cells = []
            for lineno, row in enumerate(reader, start=2):
                if not row or all(not c.strip() for c in row):
                    continue
                if len(row) != 3:
                    raise ScenarioError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
                try:
                    cells.append(tuple(float(c) for c in row))
                except ValueError:
                    raise ScenarioError(f"{path}:{lineno}: non-numeric field in {row}") from None
    except OSError as exc:
        raise ScenarioError(f"cannot read grid file {path}: {exc.strerror or exc}") from exc
    if not cells:
        raise ScenarioError(f"{path}: empty grid")
    try:
        grid = PerformanceGrid.from_cells(cells, unit=meta.get("unit", "percent"))
    except ValidationError as exc:
        raise ValidationError(exc.violations, context=str(path)) from None
    return grid, meta


def _read_yaml(path: Path) -> Any:
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f":{mark.line + 1}:{mark.column + 1}" if mark else ""
        raise ScenarioError(f"{path}{where}: {getattr(exc, 'problem', exc)}") from None


class _Reader:
    """Typed field access that reports the field path on bad input."""

    def __init__(self, source: str):
        self.source = source

    def fail(self, where: str, msg: str):
        raise ScenarioError(f"{self.source}: {where}: {msg}")

    def mapping(self, data, where) -> dict:
        if not isinstance(data, dict):
            self.fail(where, "expected a mapping")
        return data

    def seq(self, data, where) -> list:
        if not isinstance(data, list):
            self.fail(where, "expected a list")
        return data

    def req(self, data: dict, key: str, where: str):
        if key not in data:
            self.fail(where, f"missing field {key!r}")
        return data[key]

    def num(self, value, where) -> float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(where, f"expected a number, got {value!r}")
        return float(value)

    def text(self, value, where) -> str:
        if not isinstance(value, str) or not value:
            self.fail(where, f"expected a non-empty string, got {value!r}")
        return value


def load_scenario(path: str | Path) -> Scenario:
    """Read, fit and validate a scenario file.

    Raises ScenarioError for unreadable or malformed input and ValidationError
    (listing every problem found) for well-formed input that breaks a model
    invariant.
    """
    path = Path(path)
    data = _read_yaml(path)
    return scenario_from_dict(data, base_dir=path.parent, source=str(path))


def scenario_from_dict(data: Any, base_dir: Path | str = ".", source: str = "<scenario>") -> Scenario:
    rd = _Reader(source)
    base_dir = Path(base_dir)
    doc = rd.mapping(data, "document")

    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        rd.fail("schema_version", f"unsupported value {version!r} (expected {SCHEMA_VERSION})")

    resource_types = tuple(
        rd.text(r, f"resource_types[{i}]")
        for i, r in enumerate(rd.seq(doc.get("resource_types", list(BUILTIN_RESOURCES)), "resource_types"))
    )
    tiers = tuple(rd.text(t, f"tiers[{i}]") for i, t in enumerate(rd.seq(rd.req(doc, "tiers", "document"), "tiers")))

    nodes = []
    for i, raw in enumerate(rd.seq(rd.req(doc, "nodes", "document"), "nodes")):
        where = f"nodes[{i}]"
        raw = rd.mapping(raw, where)
        cap = rd.mapping(rd.req(raw, "capacity", where), f"{where}.capacity")
        nodes.append(
            ComputeNode(
                id=rd.text(rd.req(raw, "id", where), f"{where}.id"),
                tier=rd.text(rd.req(raw, "tier", where), f"{where}.tier"),
                capacity={k: rd.num(v, f"{where}.capacity.{k}") for k, v in cap.items()},
            )
        )
    infra = Infrastructure(tuple(nodes), tiers, resource_types)

    app = _read_app(rd, rd.mapping(rd.req(doc, "application", "document"), "application"))

    violations: list[str] = []
    violations += ["infrastructure: " + v for v in validate_infrastructure(infra).violations]
    violations += ["application: " + v for v in validate_graph(app, list(tiers)).violations]

    couplings, fits = _read_couplings(rd, doc.get("couplings") or {}, base_dir, violations)
    known = {(f, rt) for f in app.function_ids for rt in resource_types}
    for key in couplings.models:
        for fn, rt in ((key.src_fn, key.src_res), (key.dst_fn, key.dst_res)):
            if fn not in app.function_ids:
                violations.append(f"coupling {key}: unknown function {fn}")
            elif rt not in resource_types:
                violations.append(f"coupling {key}: unknown resource type {rt}")

    solver_raw = rd.mapping(doc.get("solver") or {}, "solver")
    eta = rd.num(solver_raw.get("eta", DEFAULT_ETA), "solver.eta")
    if not 0.0 <= eta <= 1.0:
        violations.append(f"eta out of range: {eta} not in [0, 1]")
        eta = min(max(eta, 0.0), 1.0)
    floors = _read_amounts(rd, solver_raw.get("floors") or [], "solver.floors")
    for key, amt in floors.items():
        if key not in known:
            violations.append(f"solver.floors: unknown function/resource {key}")
        if amt < 0:
            violations.append(f"solver.floors: negative floor for {key}")
    solver = SolverConfig(p_max=couplings.p_max, eta=eta, allocation_floor={k: max(v, 0.0) for k, v in floors.items()})

    static = None
    if doc.get("static") is not None:
        s_raw = rd.mapping(doc["static"], "static")
        fixed = _read_amounts(rd, s_raw.get("fixed") or [], "static.fixed")
        for key, amt in fixed.items():
            if key not in known:
                violations.append(f"static.fixed: unknown function/resource {key}")
            if amt < 0:
                violations.append(f"static.fixed: negative amount for {key}")
        placement = None
        if s_raw.get("placement") is not None:
            pl = rd.mapping(s_raw["placement"], "static.placement")
            placement = Placement({rd.text(k, "static.placement"): rd.text(v, f"static.placement.{k}") for k, v in pl.items()})
            if set(placement.assignment) != set(app.function_ids):
                violations.append("static.placement must assign every function exactly once")
            for f, n in placement.assignment.items():
                if n not in infra.node_ids:
                    violations.append(f"static.placement: {f} on unknown node {n}")
        static = StaticSpec(fixed, placement)

    sweep = None
    if doc.get("sweep") is not None:
        w_raw = rd.mapping(doc["sweep"], "sweep")
        tgt = rd.mapping(rd.req(w_raw, "target", "sweep"), "sweep.target")
        levels = tuple(rd.num(v, f"sweep.levels[{i}]") for i, v in enumerate(rd.seq(rd.req(w_raw, "levels", "sweep"), "sweep.levels")))
        mode = w_raw.get("mode", "capacity")
        sweep = SweepSpec(
            rd.text(rd.req(tgt, "function", "sweep.target"), "sweep.target.function"),
            rd.text(rd.req(tgt, "resource", "sweep.target"), "sweep.target.resource"),
            levels,
            mode,
        )
        if mode not in SWEEP_MODES:
            violations.append(f"sweep.mode must be one of {SWEEP_MODES}, got {mode!r}")
        if sweep.target not in known:
            violations.append(f"sweep.target: unknown function/resource {sweep.target}")
        if not levels:
            violations.append("sweep.levels is empty")
        if any(not lv > 0 for lv in levels):
            violations.append("sweep levels must be positive")
        steps = [b - a for a, b in zip(levels, levels[1:])]
        if not (all(s > 0 for s in steps) or all(s < 0 for s in steps)):
            violations.append("sweep levels must be strictly monotone")

    if violations:
        raise ValidationError(violations, context=source)
    return Scenario(
        name=str(doc.get("name", Path(source).stem)),
        infra=infra,
        app=app,
        couplings=couplings,
        solver=solver,
        static=static,
        sweep=sweep,
        fits=fits,
    )


def _read_app(rd: _Reader, raw: dict) -> AppGraph:
    funcs = []
    for i, f in enumerate(rd.seq(rd.req(raw, "functions", "application"), "application.functions")):
        where = f"application.functions[{i}]"
        f = rd.mapping(f, where)
        prof_raw = rd.mapping(rd.req(f, "profile", where), f"{where}.profile")
        profile = {}
        for tier, entry in prof_raw.items():
            pw = f"{where}.profile.{tier}"
            entry = rd.mapping(entry, pw)
            profile[tier] = PerfProfile(
                rd.num(rd.req(entry, "delay", pw), f"{pw}.delay"),
                rd.num(rd.req(entry, "throughput", pw), f"{pw}.throughput"),
            )
        tier_c = f.get("tier")
        funcs.append(
            FunctionSpec(
                rd.text(rd.req(f, "id", where), f"{where}.id"),
                profile,
                None if tier_c is None else rd.text(tier_c, f"{where}.tier"),
            )
        )
    edges = []
    for i, e in enumerate(rd.seq(raw.get("edges") or [], "application.edges")):
        e = rd.seq(e, f"application.edges[{i}]")
        if len(e) != 2:
            rd.fail(f"application.edges[{i}]", "expected [src, dst]")
        edges.append((rd.text(e[0], f"application.edges[{i}]"), rd.text(e[1], f"application.edges[{i}]")))
    crit = [rd.text(c, "application.critical_path") for c in rd.seq(rd.req(raw, "critical_path", "application"), "application.critical_path")]
    req = rd.mapping(rd.req(raw, "requirements", "application"), "application.requirements")
    requirements = Requirements(
        rd.num(rd.req(req, "max_delay", "application.requirements"), "application.requirements.max_delay"),
        rd.num(rd.req(req, "min_throughput", "application.requirements"), "application.requirements.min_throughput"),
    )
    return AppGraph(tuple(funcs), tuple(edges), tuple(crit), requirements)


def _read_amounts(rd: _Reader, raw, where: str) -> dict[AllocKey, float]:
    out = {}
    for i, item in enumerate(rd.seq(raw, where)):
        w = f"{where}[{i}]"
        item = rd.mapping(item, w)
        key = (
            rd.text(rd.req(item, "function", w), f"{w}.function"),
            rd.text(rd.req(item, "resource", w), f"{w}.resource"),
        )
        if key in out:
            rd.fail(w, f"duplicate entry for {key}")
        out[key] = rd.num(rd.req(item, "amount", w), f"{w}.amount")
    return out


def _read_couplings(rd: _Reader, raw, base_dir: Path, violations: list[str]):
    raw = rd.mapping(raw, "couplings")
    models: dict[CouplingKey, LinearCoupling] = {}
    fits: dict[CouplingKey, FitRecord] = {}
    grid_max: list[float] = []

    for i, m in enumerate(rd.seq(raw.get("models") or [], "couplings.models")):
        where = f"couplings.models[{i}]"
        m = rd.mapping(m, where)
        grid = meta = None
        if "grid" in m:
            gpath = base_dir / rd.text(m["grid"], f"{where}.grid")
            if not gpath.exists():
                raise ScenarioError(f"{rd.source}: {where}.grid: grid file not found: {gpath}")
            try:
                grid, meta = read_grid(gpath)
            except ValidationError as exc:
                violations.extend(exc.violations)
                continue
        key_raw = m.get("key") if "key" in m else (meta or {}).get("key")
        if key_raw is None:
            rd.fail(where, "missing coupling key (inline 'key' or grid sidecar)")
        if isinstance(key_raw, str):
            key_raw = key_raw.split(",")
        key_raw = rd.seq(key_raw, f"{where}.key")
        if len(key_raw) != 4:
            rd.fail(f"{where}.key", "expected [src_fn, src_res, dst_fn, dst_res]")
        try:
            key = CouplingKey(*(rd.text(str(k).strip(), f"{where}.key") for k in key_raw))
        except ValidationError as exc:
            violations.extend(exc.violations)
            continue
        if key in models:
            violations.append(f"duplicate coupling {key}")
            continue

        if grid is not None:
            targets = m.get("p_targets")
            if targets is not None:
                targets = [rd.num(t, f"{where}.p_targets") for t in rd.seq(targets, f"{where}.p_targets")]
            try:
                model, samples, metrics = fit_grid(grid, targets)
            except (ValueError, RomaError) as exc:
                violations.append(f"{where}: fit failed: {exc}")
                continue
            models[key] = model
            fits[key] = FitRecord(str(m["grid"]), len(samples), metrics)
            grid_max.append(grid.max_performance())
        else:
            try:
                models[key] = LinearCoupling(
                    rd.num(rd.req(m, "alpha", where), f"{where}.alpha"),
                    rd.num(rd.req(m, "beta", where), f"{where}.beta"),
                    rd.num(rd.req(m, "gamma", where), f"{where}.gamma"),
                )
            except ValidationError as exc:
                violations.extend(exc.violations)

    if raw.get("p_max") is not None:
        p_max = rd.num(raw["p_max"], "couplings.p_max")
    elif grid_max:
        p_max = max(grid_max)
    else:
        rd.fail("couplings.p_max", "required when no coupling grid is given")
    if not (p_max > 0 and math.isfinite(p_max)):
        violations.append(f"couplings.p_max must be positive, got {p_max}")
        p_max = 1.0
    return CouplingSet(models, p_max), fits
