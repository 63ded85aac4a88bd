"""CSV/JSON report emission with byte-stable formatting.

Numbers are written with 6 decimal places, columns in a fixed order, ``\\n``
line endings. JSON reports load back into plain data that re-emits to the same
bytes.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Any, Mapping, Optional

from roma.errors import ScenarioError
from roma.harness.sweep import SweepResult, SweepRow
from roma.orchestrator import AllocationPlan, SavingsReport

DECIMALS = 6
FORMATS = ("csv", "json")


def fmt_num(x: Optional[float]) -> str:
    if x is None:
        return ""
    if isinstance(x, float) and not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    s = f"{x:.{DECIMALS}f}"
    return "0.000000" if s == "-0.000000" else s


def _round(x: float) -> float:
    r = round(float(x), DECIMALS)
    return 0.0 if r == 0 else r


def to_plain(obj: Any) -> Any:
    """Recursively round floats; keep ints, strings, bools, None as is."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        return _round(obj) if math.isfinite(obj) else None
    if isinstance(obj, Mapping):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def plan_to_dict(plan: Optional[AllocationPlan], resources) -> Optional[dict]:
    if plan is None:
        return None
    return {
        "placement": dict(plan.placement.assignment),
        "allocations": [
            {"function": f, "resource": rt, "amount": v} for (f, rt), v in plan.allocations.items()
        ],
        "totals": {rt: plan.total(rt) for rt in resources},
        "performance": plan.performance,
        "objective": plan.objective_value,
        "delay": plan.feasible_delay,
        "throughput": plan.feasible_throughput,
    }


def savings_to_dict(rep: Optional[SavingsReport]) -> Optional[dict]:
    if rep is None:
        return None
    return {
        "roma_totals": dict(rep.roma_totals),
        "static_totals": dict(rep.static_totals),
        "saving_pct": dict(rep.saving_pct),
        "performance_delta": rep.performance_delta,
    }


def sweep_to_dict(result: SweepResult) -> dict:
    res = list(result.resource_types)
    return {
        "kind": "sweep",
        "scenario": result.scenario,
        "swept": {
            "function": result.spec.function,
            "resource": result.spec.resource,
            "mode": result.spec.mode,
        },
        "resource_types": res,
        "rows": [
            {
                "level": row.level,
                "status": row.status,
                "roma": plan_to_dict(row.roma, res),
                "static": plan_to_dict(row.static, res),
                "savings": savings_to_dict(row.savings),
            }
            for row in result.rows
        ],
    }


def sweep_columns(resources) -> list[str]:
    cols = ["level", "status", "roma_placement"]
    cols += [f"roma_{rt}" for rt in resources] + ["roma_performance", "roma_objective"]
    cols += [f"static_{rt}" for rt in resources] + ["static_performance", "static_objective"]
    cols += [f"saving_{rt}_pct" for rt in resources] + ["performance_delta"]
    return cols


def _sweep_row_cells(row: SweepRow, resources) -> list[str]:
    def plan_cells(plan):
        if plan is None:
            return [""] * (len(resources) + 2)
        return [fmt_num(plan.total(rt)) for rt in resources] + [
            fmt_num(plan.performance),
            fmt_num(plan.objective_value),
        ]

    placement = ""
    if row.roma is not None:
        placement = ";".join(f"{f}={n}" for f, n in row.roma.placement.assignment.items())
    cells = [fmt_num(row.level), row.status, placement]
    cells += plan_cells(row.roma) + plan_cells(row.static)
    if row.savings is None:
        cells += [""] * (len(resources) + 1)
    else:
        cells += [fmt_num(row.savings.saving_pct.get(rt, 0.0)) for rt in resources]
        cells.append(fmt_num(row.savings.performance_delta))
    return cells


def _csv_text(header: list[str], rows: list[list[str]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def render(obj: Any, fmt: str = "csv") -> str:
    """Serialise a sweep result, savings report or flat metrics mapping."""
    if fmt not in FORMATS:
        raise ValueError(f"unknown report format {fmt!r}")
    if fmt == "json":
        if isinstance(obj, SweepResult):
            doc = sweep_to_dict(obj)
        elif isinstance(obj, SavingsReport):
            doc = {"kind": "savings", **savings_to_dict(obj)}
        else:
            doc = obj
        return json.dumps(to_plain(doc), indent=2) + "\n"

    if isinstance(obj, SweepResult):
        res = list(obj.resource_types)
        return _csv_text(sweep_columns(res), [_sweep_row_cells(r, res) for r in obj.rows])
    if isinstance(obj, SavingsReport):
        res = list(obj.saving_pct)
        header = [f"roma_{rt}" for rt in res] + [f"static_{rt}" for rt in res]
        header += [f"saving_{rt}_pct" for rt in res] + ["performance_delta"]
        row = [fmt_num(obj.roma_totals[rt]) for rt in res]
        row += [fmt_num(obj.static_totals[rt]) for rt in res]
        row += [fmt_num(obj.saving_pct[rt]) for rt in res] + [fmt_num(obj.performance_delta)]
        return _csv_text(header, [row])
    if isinstance(obj, Mapping):
        header = list(obj)
        row = [fmt_num(v) if isinstance(v, (int, float)) and not isinstance(v, bool) else str(v) for v in obj.values()]
        return _csv_text(header, [row])
    raise TypeError(f"cannot render {type(obj).__name__} as csv")


def emit_report(obj: Any, path: str | Path, fmt: str = "csv") -> None:
    text = render(obj, fmt)
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise ScenarioError(f"cannot write report {path}: {exc.strerror or exc}") from exc


def load_report(path: str | Path) -> Any:
    """Load a JSON report back as plain data."""
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except OSError as exc:
        raise ScenarioError(f"cannot read report {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
