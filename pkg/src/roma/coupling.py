"""Resource coupling models.

A coupling ``(v, t) -> (v', t')`` gives the least amount of resource ``t'`` that
function ``v'`` needs to reach performance ``p`` when function ``v`` holds ``x``
units of resource ``t``. Only affine models ``alpha*x + beta*p + gamma`` are
supported; they keep the per-placement allocation problem linear.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from roma.errors import DegenerateFitError, ValidationError


@dataclass(frozen=True, order=True)
class CouplingKey:
    src_fn: str
    src_res: str
    dst_fn: str
    dst_res: str

    def __post_init__(self):
        if (self.src_fn, self.src_res) == (self.dst_fn, self.dst_res):
            raise ValidationError(
                [f"coupling {self} maps a resource onto itself"], context="coupling key"
            )

    @classmethod
    def parse(cls, text: str) -> "CouplingKey":
        """Parse ``"v,t,v',t'"``."""
        parts = [s.strip() for s in text.split(",")]
        if len(parts) != 4 or not all(parts):
            raise ValueError(f"coupling key must be 'src_fn,src_res,dst_fn,dst_res', got {text!r}")
        return cls(*parts)

    def __str__(self) -> str:
        return f"{self.src_fn},{self.src_res},{self.dst_fn},{self.dst_res}"


@dataclass(frozen=True)
class LinearCoupling:
    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError([f"{name} is not finite"], context="linear coupling")

    def raw(self, x: float, p: float) -> float:
        return self.alpha * x + self.beta * p + self.gamma


def eval_coupling(c: LinearCoupling, x: float, p: float) -> float:
    """Required destination level, clamped at zero."""
    return max(0.0, c.raw(x, p))


@dataclass(frozen=True)
class PerformanceGrid:
    """Performance measured on a (source level x destination level) lattice.

    ``perf[i][j]`` is the performance at ``x_axis[i]``, ``y_axis[j]``.
    """

    x_axis: tuple[float, ...]
    y_axis: tuple[float, ...]
    perf: np.ndarray
    unit: str = "percent"

    def __post_init__(self):
        object.__setattr__(self, "x_axis", tuple(float(x) for x in self.x_axis))
        object.__setattr__(self, "y_axis", tuple(float(y) for y in self.y_axis))
        arr = np.array(self.perf, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "perf", arr)

        problems = []
        for name, axis in (("x", self.x_axis), ("y", self.y_axis)):
            if any(a <= 0 for a in axis):
                problems.append(f"{name} levels must be positive")
            if any(b <= a for a, b in zip(axis, axis[1:])):
                problems.append(f"{name} axis must be strictly increasing")
        if arr.shape != (len(self.x_axis), len(self.y_axis)):
            problems.append(
                f"performance matrix shape {arr.shape} does not match axes "
                f"({len(self.x_axis)}, {len(self.y_axis)})"
            )
        elif np.isnan(arr).any():
            problems.append("performance matrix has missing cells")
        if self.unit not in ("percent", "score"):
            problems.append(f"unknown performance unit {self.unit!r}")
        if problems:
            raise ValidationError(problems, context="performance grid")

    @classmethod
    def from_cells(cls, cells: Iterable[tuple[float, float, float]], unit: str = "percent"):
        """Build from ``(x_level, y_level, performance)`` rows in any order."""
        cells = list(cells)
        xs = sorted({float(c[0]) for c in cells})
        ys = sorted({float(c[1]) for c in cells})
        xi = {x: i for i, x in enumerate(xs)}
        yi = {y: j for j, y in enumerate(ys)}
        perf = np.full((len(xs), len(ys)), np.nan)
        for x, y, p in cells:
            i, j = xi[float(x)], yi[float(y)]
            if not np.isnan(perf[i, j]):
                raise ValidationError([f"duplicate grid cell ({x}, {y})"], context="performance grid")
            perf[i, j] = p
        return cls(tuple(xs), tuple(ys), perf, unit)

    @property
    def is_empty(self) -> bool:
        return self.perf.size == 0

    def max_performance(self) -> float:
        return float(self.perf.max())


class CouplingSample(NamedTuple):
    x: float
    p: float
    y_min: float


@dataclass(frozen=True)
class CouplingSet:
    models: Mapping[CouplingKey, LinearCoupling]
    p_max: float

    def __post_init__(self):
        object.__setattr__(self, "models", MappingProxyType(dict(self.models)))
        if not (self.p_max > 0 and math.isfinite(self.p_max)):
            raise ValidationError(["p_max must be positive"], context="coupling set")

    def __iter__(self):
        return iter(self.models.items())

    def __len__(self) -> int:
        return len(self.models)


def default_p_targets(grid: PerformanceGrid) -> list[float]:
    """Deciles (10%..90%) of the observed performance values.

    Each decile snaps down to an observed value so that targets are reachable
    exactly rather than by a rounding margin.
    """
    qs = np.quantile(grid.perf.ravel(), np.linspace(0.1, 0.9, 9), method="lower")
    return sorted({float(q) for q in qs})


def derive_min_resource_samples(
    grid: PerformanceGrid, p_targets: Sequence[float]
) -> list[CouplingSample]:
    """For each source level and target, the smallest destination level reaching it.

    Output is ordered by x, then by target in the given order. Pairs where no
    destination level reaches the target are dropped.
    """
    if grid.is_empty:
        raise ValueError("empty performance grid")
    if not p_targets:
        raise ValueError("no performance targets given")
    lo, hi = float(grid.perf.min()), float(grid.perf.max())
    for p in p_targets:
        if not lo <= p <= hi:
            raise ValueError(f"performance target {p} outside observed range [{lo}, {hi}]")

    out = []
    for i, x in enumerate(grid.x_axis):
        row = grid.perf[i]
        for p in p_targets:
            hits = np.flatnonzero(row >= p)
            if hits.size:
                out.append(CouplingSample(x, float(p), grid.y_axis[hits[0]]))
    return out


def _solve3(a: list[list[float]], b: list[float]) -> list[float]:
    """Gaussian elimination with partial pivoting for a small dense system."""
    n = len(b)
    m = [row[:] + [rhs] for row, rhs in zip(a, b)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(m[r][col]))
        if m[piv][col] == 0.0:
            raise DegenerateFitError()
        m[col], m[piv] = m[piv], m[col]
        for r in range(col + 1, n):
            f = m[r][col] / m[col][col]
            for k in range(col, n + 1):
                m[r][k] -= f * m[col][k]
    sol = [0.0] * n
    for r in range(n - 1, -1, -1):
        acc = m[r][n] - sum(m[r][k] * sol[k] for k in range(r + 1, n))
        sol[r] = acc / m[r][r]
    return sol


def fit_linear(samples: Sequence[CouplingSample]) -> LinearCoupling:
    """Least-squares fit of ``y_min ~ alpha*x + beta*p + gamma`` via the normal equations."""
    if len(samples) < 3:
        raise DegenerateFitError("degenerate fit data: need at least 3 samples")
    data = np.array([(s.x, s.p, s.y_min) for s in samples], dtype=float)
    design = np.column_stack([data[:, 0], data[:, 1], np.ones(len(data))])
    if np.linalg.matrix_rank(design) < 3:
        raise DegenerateFitError()

    # sorted rows + fsum make the accumulated sums independent of input order
    data = data[np.lexsort((data[:, 2], data[:, 1], data[:, 0]))]
    cols = [data[:, 0], data[:, 1], np.ones(len(data))]
    ys = data[:, 2]
    gram = [[math.fsum(a * b) for b in cols] for a in cols]
    rhs = [math.fsum(a * ys) for a in cols]
    alpha, beta, gamma = _solve3(gram, rhs)
    return LinearCoupling(alpha, beta, gamma)


class RegressionMetrics(NamedTuple):
    mae: float
    mse: float
    rmse: float


def regression_metrics(c: LinearCoupling, samples: Sequence[CouplingSample]) -> RegressionMetrics:
    """MAE, MSE and RMSE of the unclamped model over ``samples``."""
    if not samples:
        raise ValueError("no samples")
    resid = [s.y_min - c.raw(s.x, s.p) for s in samples]
    n = len(resid)
    mae = math.fsum(abs(r) for r in resid) / n
    mse = math.fsum(r * r for r in resid) / n
    return RegressionMetrics(mae, mse, math.sqrt(mse))


def fit_grid(
    grid: PerformanceGrid, p_targets: Sequence[float] | None = None
) -> tuple[LinearCoupling, list[CouplingSample], RegressionMetrics]:
    """Derive samples from a grid, fit them and score the fit."""
    targets = list(p_targets) if p_targets else default_p_targets(grid)
    samples = derive_min_resource_samples(grid, targets)
    model = fit_linear(samples)
    return model, samples, regression_metrics(model, samples)
