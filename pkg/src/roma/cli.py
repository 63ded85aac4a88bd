"""Command-line entry point.

Exit codes: 0 success, 1 validation failure, 2 infeasible problem, 3 I/O,
parse or usage error. Diagnostics go to stderr, results to stdout or --out.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

import yaml

from roma.audit import audit_plan
from roma.coupling import CouplingKey, fit_grid
from roma.errors import (
    CapacityError,
    InfeasibleError,
    ScenarioError,
    UnknownReferenceError,
    ValidationError,
)
from roma.harness.detection import DEFAULT_IOU_THRESHOLD, detection_score, read_detection_log
from roma.harness.report import (
    to_plain,
    emit_report,
    fmt_num,
    plan_to_dict,
    savings_to_dict,
)
from roma.harness.scenario import load_scenario, read_grid
from roma.harness.sweep import run_sweep, static_placement
from roma.lp import INF, Constraint, LinearProgram, LpStructureError, format_lp, solve
from roma.orchestrator import (
    build_allocation_lp,
    compare,
    solve_roma,
    static_allocate,
)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_INFEASIBLE = 2
EXIT_IO = 3

log = logging.getLogger("roma")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_IO, f"{self.prog}: error: {message}\n")


def _global_flags(parser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--verbose", "-v", action="store_true", default=default if suppress else False,
                        help="log progress and dump LPs to stderr")
    parser.add_argument("--seed", type=int, default=default,
                        help="reserved; every code path is deterministic")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="roma", description="Coupled network/compute resource orchestration.")
    _global_flags(p, suppress=False)
    sub = p.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")
    sub.required = True

    common = _Parser(add_help=False)
    _global_flags(common, suppress=True)

    def fmt_flag(sp, choices=("text", "json"), default="text"):
        sp.add_argument("--format", choices=choices, default=default)

    sp = sub.add_parser("validate", parents=[common], help="check a scenario file")
    sp.add_argument("scenario")
    fmt_flag(sp)

    sp = sub.add_parser("fit", parents=[common], help="fit a linear coupling to a grid file")
    sp.add_argument("grid")
    sp.add_argument("--key", help="src_fn,src_res,dst_fn,dst_res (default: from sidecar)")
    sp.add_argument("--p-targets", nargs="+", type=float, metavar="P")
    fmt_flag(sp)

    sp = sub.add_parser("solve", parents=[common], help="optimise a scenario")
    sp.add_argument("scenario")
    sp.add_argument("--eta", type=float)
    fmt_flag(sp)

    sp = sub.add_parser("sweep", parents=[common], help="run a scenario's sweep")
    sp.add_argument("scenario")
    sp.add_argument("--out", required=True)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")

    sp = sub.add_parser("score", parents=[common], help="weighted detection score")
    sp.add_argument("detections")
    sp.add_argument("--iou-threshold", type=float, default=DEFAULT_IOU_THRESHOLD)
    sp.add_argument("--weights", help="frame_id,weight file")
    fmt_flag(sp)

    sp = sub.add_parser("lp", parents=[common], help="solve a linear program file")
    sp.add_argument("lp_file")
    fmt_flag(sp)
    return p


def _json_out(doc) -> None:
    sys.stdout.write(json.dumps(to_plain(doc), indent=2) + "\n")


def cmd_validate(args) -> int:
    sc = load_scenario(args.scenario)
    if args.format == "json":
        _json_out({"ok": True, "scenario": sc.name, "violations": []})
    else:
        print("OK")
    return EXIT_OK


def cmd_fit(args) -> int:
    grid, meta = read_grid(args.grid)
    if args.key:
        key = CouplingKey.parse(args.key)
    elif "key" in meta:
        raw = meta["key"]
        key = CouplingKey.parse(raw if isinstance(raw, str) else ",".join(map(str, raw)))
    else:
        raise ValidationError(["no coupling key: pass --key or add one to the grid sidecar"])
    model, samples, metrics = fit_grid(grid, args.p_targets)
    doc = {
        "key": str(key),
        "alpha": model.alpha,
        "beta": model.beta,
        "gamma": model.gamma,
        "samples": len(samples),
        "mae": metrics.mae,
        "mse": metrics.mse,
        "rmse": metrics.rmse,
    }
    if args.format == "json":
        _json_out(doc)
    else:
        for k, v in doc.items():
            print(f"{k}: {fmt_num(v) if isinstance(v, float) else v}")
    return EXIT_OK


def cmd_solve(args) -> int:
    sc = load_scenario(args.scenario)
    cfg = sc.solver
    if args.eta is not None:
        if not 0.0 <= args.eta <= 1.0:
            raise ValidationError([f"eta out of range: {args.eta}"])
        cfg = replace(cfg, eta=args.eta)
    plan = solve_roma(sc.app, sc.infra, sc.couplings, cfg)
    if args.verbose:
        lp = build_allocation_lp(sc.app, sc.infra, plan.placement, sc.couplings, cfg)
        sys.stderr.write(format_lp(lp))
    issues = audit_plan(plan, sc.app, sc.infra, sc.couplings, cfg)
    for msg in issues:
        log.warning("audit: %s", msg)

    res = list(sc.infra.resource_types)
    static = savings = None
    if sc.static is not None:
        static = static_allocate(sc.app, sc.infra, sc.couplings, sc.static.fixed, static_placement(sc), cfg)
        savings = compare(plan, static)

    if args.format == "json":
        _json_out({
            "scenario": sc.name,
            "roma": plan_to_dict(plan, res),
            "static": plan_to_dict(static, res),
            "savings": savings_to_dict(savings),
        })
        return EXIT_OK

    out = [f"scenario: {sc.name}"]
    out += _plan_lines("roma", plan, res)
    if static is not None:
        out += _plan_lines("static", static, res)
        for rt in res:
            out.append(f"saving {rt} %: {fmt_num(savings.saving_pct.get(rt, 0.0))}")
        out.append(f"performance delta: {fmt_num(savings.performance_delta)}")
    print("\n".join(out))
    return EXIT_OK


def _plan_lines(label, plan, resources) -> list[str]:
    lines = [
        f"{label} placement: " + " ".join(f"{f}->{n}" for f, n in plan.placement.assignment.items()),
        f"{label} performance: {fmt_num(plan.performance)}",
        f"{label} objective: {fmt_num(plan.objective_value)}",
        f"{label} delay: {fmt_num(plan.feasible_delay)}",
        f"{label} throughput: {fmt_num(plan.feasible_throughput)}",
    ]
    for (f, rt), v in plan.allocations.items():
        lines.append(f"{label} y[{f},{rt}]: {fmt_num(v)}")
    for rt in resources:
        lines.append(f"{label} total {rt}: {fmt_num(plan.total(rt))}")
    return lines


def cmd_sweep(args) -> int:
    sc = load_scenario(args.scenario)
    if sc.sweep is None:
        raise ValidationError([f"scenario {sc.name} declares no sweep"])
    result = run_sweep(sc)
    emit_report(result, args.out, args.format)
    flagged = sum(1 for r in result.rows if r.status != "ok")
    log.info("wrote %d rows to %s (%d flagged infeasible)", len(result.rows), args.out, flagged)
    return EXIT_OK


def cmd_score(args) -> int:
    dlog = read_detection_log(args.detections, args.weights)
    score = detection_score(dlog, args.iou_threshold)
    if args.format == "json":
        _json_out({"frames": len(dlog.frames), "iou_threshold": args.iou_threshold, "score": score})
    else:
        print(f"score: {fmt_num(score)}")
    return EXIT_OK


def read_lp_file(path: str | Path) -> LinearProgram:
    """Load an LP from YAML/JSON.

    Keys: ``num_vars``, ``objective`` (list), ``constraints`` (list of
    ``{coeffs: {index: value}, relation, rhs}``), optional ``bounds`` (list of
    ``[lower, upper]`` with ``null`` for infinite) and ``names``.
    """
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except yaml.YAMLError as exc:
        raise ScenarioError(f"{path}: {exc}") from None
    try:
        cons = [
            Constraint({int(k): float(v) for k, v in c["coeffs"].items()}, c["relation"], float(c["rhs"]))
            for c in doc.get("constraints") or []
        ]
        bounds = None
        if doc.get("bounds") is not None:
            bounds = [
                (-INF if lo is None else float(lo), INF if hi is None else float(hi))
                for lo, hi in doc["bounds"]
            ]
        return LinearProgram(int(doc["num_vars"]), [float(c) for c in doc["objective"]], cons, bounds,
                             doc.get("names"))
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise ScenarioError(f"{path}: malformed LP file ({exc!r})") from None


def cmd_lp(args) -> int:
    lp = read_lp_file(args.lp_file)
    if args.verbose:
        sys.stderr.write(format_lp(lp))
    sol = solve(lp)
    if args.format == "json":
        _json_out({
            "status": sol.status.value,
            "point": list(sol.point) if sol.point else None,
            "objective": sol.objective_value,
        })
    else:
        print(f"status: {sol.status.value}")
        if sol.optimal:
            print(f"objective: {fmt_num(sol.objective_value)}")
            for j, v in enumerate(sol.point):
                print(f"{lp.name(j)}: {fmt_num(v)}")
    return EXIT_OK if sol.optimal else EXIT_INFEASIBLE


COMMANDS = {
    "validate": cmd_validate,
    "fit": cmd_fit,
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "score": cmd_score,
    "lp": cmd_lp,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
    log.handlers[:] = [handler]
    log.propagate = False
    log.setLevel(logging.INFO if args.verbose else logging.WARNING)
    try:
        return COMMANDS[args.command](args)
    except ValidationError as exc:
        for v in exc.violations:
            print(f"invalid: {v}", file=sys.stderr)
        return EXIT_INVALID
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ScenarioError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (CapacityError, LpStructureError, UnknownReferenceError, ValueError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
