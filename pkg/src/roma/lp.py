"""Dense two-phase primal simplex for small linear programs.

Problems are minimisations with ``<=``, ``=`` and ``>=`` rows and per-variable
bounds (either side may be infinite). Bland's rule is used for both entering and
leaving choices, so the solver never cycles and is fully deterministic.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from roma.errors import LpStructureError

PIVOT_TOL = 1e-9
COST_TOL = 1e-9
FEAS_TOL = 1e-9
CHECK_TOL = 1e-7
MAX_PIVOTS = 100_000

INF = math.inf
RELATIONS = ("<=", "=", ">=")


@dataclass(frozen=True)
class Constraint:
    coeffs: Mapping[int, float]
    relation: str
    rhs: float
    name: str = ""

    def activity(self, x: Sequence[float]) -> float:
        return math.fsum(c * x[i] for i, c in self.coeffs.items())

    def violation(self, x: Sequence[float]) -> float:
        """How far ``x`` is from satisfying this row (0 when satisfied)."""
        lhs = self.activity(x)
        if self.relation == "<=":
            return max(0.0, lhs - self.rhs)
        if self.relation == ">=":
            return max(0.0, self.rhs - lhs)
        return abs(lhs - self.rhs)


@dataclass
class LinearProgram:
    num_vars: int
    objective: Sequence[float]
    constraints: list[Constraint] = field(default_factory=list)
    bounds: Optional[list[tuple[float, float]]] = None  # None -> all (0, inf)
    var_names: Optional[list[str]] = None

    def var_bounds(self) -> list[tuple[float, float]]:
        if self.bounds is None:
            return [(0.0, INF)] * self.num_vars
        return [(float(lo), float(hi)) for lo, hi in self.bounds]

    def name(self, j: int) -> str:
        return self.var_names[j] if self.var_names else f"x{j}"


class LpStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LpSolution:
    status: LpStatus
    point: Optional[tuple[float, ...]] = None
    objective_value: Optional[float] = None

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


def check_structure(lp: LinearProgram) -> None:
    n = lp.num_vars
    if not isinstance(n, int) or n < 0:
        raise LpStructureError(f"num_vars must be a non-negative integer, got {n!r}")
    if len(lp.objective) != n:
        raise LpStructureError(f"objective has {len(lp.objective)} entries, expected {n}")
    if any(not math.isfinite(c) for c in lp.objective):
        raise LpStructureError("objective has a non-finite coefficient")
    if lp.bounds is not None and len(lp.bounds) != n:
        raise LpStructureError(f"bounds has {len(lp.bounds)} entries, expected {n}")
    for j, (lo, hi) in enumerate(lp.var_bounds()):
        if math.isnan(lo) or math.isnan(hi) or lo == INF or hi == -INF:
            raise LpStructureError(f"variable {lp.name(j)}: invalid bound ({lo}, {hi})")
        if lo > hi:
            raise LpStructureError(f"variable {lp.name(j)}: lower bound {lo} > upper bound {hi}")
    if lp.var_names is not None and len(lp.var_names) != n:
        raise LpStructureError("var_names length does not match num_vars")
    for k, con in enumerate(lp.constraints):
        if con.relation not in RELATIONS:
            raise LpStructureError(f"constraint {k}: unknown relation {con.relation!r}")
        if not math.isfinite(con.rhs):
            raise LpStructureError(f"constraint {k}: non-finite rhs")
        for i, c in con.coeffs.items():
            if not isinstance(i, (int, np.integer)) or not 0 <= i < n:
                raise LpStructureError(f"constraint {k}: variable index {i!r} out of range")
            if not math.isfinite(c):
                raise LpStructureError(f"constraint {k}: non-finite coefficient on {lp.name(i)}")


class _Tableau:
    """Rows ``A z = b`` with ``b >= 0``, plus a reduced-cost row."""

    def __init__(self, a: np.ndarray, b: np.ndarray, basis: list[int]):
        self.t = np.hstack([a, b[:, None]])
        self.basis = basis
        self.obj = np.zeros(a.shape[1] + 1)

    def set_costs(self, cost: np.ndarray) -> None:
        # reduced costs: c - c_B B^-1 A; the last entry holds -objective
        self.obj = np.append(cost, 0.0).astype(float)
        for r, j in enumerate(self.basis):
            if self.obj[j] != 0.0:
                self.obj -= self.obj[j] * self.t[r]

    def pivot(self, r: int, j: int) -> None:
        t = self.t
        t[r] /= t[r, j]
        for i in range(t.shape[0]):
            if i != r and t[i, j] != 0.0:
                t[i] -= t[i, j] * t[r]
        if self.obj[j] != 0.0:
            self.obj -= self.obj[j] * t[r]
        self.basis[r] = j

    def run(self, allowed: np.ndarray) -> LpStatus:
        """Bland's rule: lowest-index improving column, lowest-index leaving variable."""
        for _ in range(MAX_PIVOTS):
            enter = -1
            for j in np.flatnonzero(allowed):
                if self.obj[j] < -COST_TOL:
                    enter = int(j)
                    break
            if enter < 0:
                return LpStatus.OPTIMAL
            col = self.t[:, enter]
            rows = np.flatnonzero(col > PIVOT_TOL)
            if rows.size == 0:
                return LpStatus.UNBOUNDED
            ratios = self.t[rows, -1] / col[rows]
            best = ratios.min()
            ties = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
            leave = min(ties, key=lambda r: self.basis[r])
            self.pivot(int(leave), enter)
        raise RuntimeError("simplex pivot limit exceeded")

    def values(self, ncols: int) -> np.ndarray:
        z = np.zeros(ncols)
        for r, j in enumerate(self.basis):
            if j < ncols:
                z[j] = self.t[r, -1]
        return z


def _to_standard_form(lp: LinearProgram):
    """Rewrite bounded variables as non-negative ones: ``x = offset + T z``."""
    n = lp.num_vars
    cols: list[tuple[int, float]] = []  # (original var, sign)
    offset = np.zeros(n)
    upper_rows: list[tuple[int, float]] = []  # (z column, bound on z)
    for j, (lo, hi) in enumerate(lp.var_bounds()):
        if lo > -INF:
            offset[j] = lo
            cols.append((j, 1.0))
            if hi < INF:
                upper_rows.append((len(cols) - 1, hi - lo))
        elif hi < INF:
            offset[j] = hi
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    transform = np.zeros((n, len(cols)))
    for k, (j, s) in enumerate(cols):
        transform[j, k] = s
    return offset, transform, upper_rows


def solve(lp: LinearProgram) -> LpSolution:
    """Minimise ``objective . x`` subject to the rows and bounds of ``lp``."""
    check_structure(lp)
    n = lp.num_vars
    c = np.asarray(lp.objective, dtype=float)
    offset, transform, upper_rows = _to_standard_form(lp)
    nz = transform.shape[1]

    rows_a, rows_b, rows_rel = [], [], []
    for con in lp.constraints:
        a = np.zeros(n)
        for i, v in con.coeffs.items():
            a[i] += v
        rows_a.append(a @ transform)
        rows_b.append(con.rhs - a @ offset)
        rows_rel.append(con.relation)
    for k, ub in upper_rows:
        a = np.zeros(nz)
        a[k] = 1.0
        rows_a.append(a)
        rows_b.append(ub)
        rows_rel.append("<=")

    m = len(rows_a)
    if m == 0:
        return _solve_unconstrained(c, offset, transform, lp)

    a_mat = np.array(rows_a, dtype=float).reshape(m, nz)
    b = np.array(rows_b, dtype=float)
    rel = list(rows_rel)
    for r in range(m):
        if b[r] < 0:
            a_mat[r] *= -1
            b[r] *= -1
            rel[r] = {"<=": ">=", ">=": "<=", "=": "="}[rel[r]]

    n_slack = sum(1 for x in rel if x != "=")
    n_art = sum(1 for x in rel if x != "<=")
    ncols = nz + n_slack + n_art
    full = np.zeros((m, ncols))
    full[:, :nz] = a_mat
    basis = [0] * m
    s_col, a_col = nz, nz + n_slack
    art_cols = []
    for r in range(m):
        if rel[r] == "<=":
            full[r, s_col] = 1.0
            basis[r] = s_col
            s_col += 1
        else:
            if rel[r] == ">=":
                full[r, s_col] = -1.0
                s_col += 1
            full[r, a_col] = 1.0
            basis[r] = a_col
            art_cols.append(a_col)
            a_col += 1

    tab = _Tableau(full, b, basis)
    real_cols = nz + n_slack

    if art_cols:
        phase1 = np.zeros(ncols)
        phase1[art_cols] = 1.0
        tab.set_costs(phase1)
        tab.run(np.ones(ncols, dtype=bool))
        if -tab.obj[-1] > FEAS_TOL * max(1.0, float(b.max())):
            return LpSolution(LpStatus.INFEASIBLE)
        _drive_out_artificials(tab, real_cols)

    cost = np.zeros(tab.t.shape[1] - 1)
    cost[:nz] = c @ transform
    tab.set_costs(cost)
    allowed = np.zeros(tab.t.shape[1] - 1, dtype=bool)
    allowed[:real_cols] = True
    status = tab.run(allowed)
    if status is LpStatus.UNBOUNDED:
        return LpSolution(LpStatus.UNBOUNDED)

    z = np.maximum(tab.values(nz), 0.0)
    return _finish(lp, offset + transform @ z)


def _drive_out_artificials(tab: _Tableau, real_cols: int) -> None:
    """Pivot zero-valued artificials out of the basis; drop redundant rows."""
    r = 0
    while r < len(tab.basis):
        if tab.basis[r] >= real_cols:
            cands = np.flatnonzero(np.abs(tab.t[r, :real_cols]) > PIVOT_TOL)
            if cands.size:
                tab.pivot(r, int(cands[0]))
            else:
                tab.t = np.delete(tab.t, r, axis=0)
                del tab.basis[r]
                continue
        r += 1
    # artificial columns are never re-entered; remove them
    keep = list(range(real_cols)) + [tab.t.shape[1] - 1]
    tab.t = tab.t[:, keep]
    tab.obj = tab.obj[keep]


def _solve_unconstrained(c, offset, transform, lp) -> LpSolution:
    # no rows: each standard-form column is an independent ray from the origin
    cz = c @ transform
    if np.any(cz < -COST_TOL):
        return LpSolution(LpStatus.UNBOUNDED)
    return _finish(lp, offset.copy())


def _finish(lp: LinearProgram, x: np.ndarray) -> LpSolution:
    for j, (lo, hi) in enumerate(lp.var_bounds()):
        x[j] = min(max(x[j], lo), hi)
    point = tuple(float(v) for v in x)
    value = math.fsum(ci * xi for ci, xi in zip(lp.objective, point))
    return LpSolution(LpStatus.OPTIMAL, point, value)


def max_violation(lp: LinearProgram, x: Sequence[float]) -> float:
    """Largest row or bound violation of ``x`` (0 when feasible)."""
    worst = 0.0
    for con in lp.constraints:
        worst = max(worst, con.violation(x))
    for xi, (lo, hi) in zip(x, lp.var_bounds()):
        worst = max(worst, lo - xi, xi - hi)
    return worst


def _fmt(v: float) -> str:
    return "inf" if v == INF else "-inf" if v == -INF else f"{v:g}"


def format_lp(lp: LinearProgram) -> str:
    """Human-readable dump, one constraint per line."""
    lines = ["minimize " + _linear(lp, dict(enumerate(lp.objective))), "subject to"]
    for k, con in enumerate(lp.constraints):
        label = con.name or f"c{k}"
        lines.append(f"  {label}: {_linear(lp, con.coeffs)} {con.relation} {con.rhs:g}")
    lines.append("bounds")
    for j, (lo, hi) in enumerate(lp.var_bounds()):
        lines.append(f"  {_fmt(lo)} <= {lp.name(j)} <= {_fmt(hi)}")
    return "\n".join(lines) + "\n"


def _linear(lp: LinearProgram, coeffs: Mapping[int, float]) -> str:
    terms = [f"{c:+g} {lp.name(i)}" for i, c in sorted(coeffs.items()) if c != 0]
    return " ".join(terms) if terms else "0"
