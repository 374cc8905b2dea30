"""Exact discrete optimal transport with squared Euclidean cost.

The solver is a primal network simplex specialized to dense transportation
problems (see ``_ot_native.pyx``). A compiled extension provides the hot
kernel; a pure-Python twin with the identical pivot sequence is selected at
import time when the extension is missing, or when the environment variable
``MEASURE_PCA_FORCE_FALLBACK`` is set to a nonzero value.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .measures import DiscreteMeasure

if os.environ.get("MEASURE_PCA_FORCE_FALLBACK", "0") not in ("0", ""):
    from . import _ot_fallback as _backend

    BACKEND = "fallback"
else:
    try:
        from . import _ot_native as _backend

        BACKEND = "native"
    except ImportError:  # pragma: no cover - exercised only without the extension
        from . import _ot_fallback as _backend

        BACKEND = "fallback"

MARGINAL_TOL = 1e-9


@dataclass(frozen=True)
class QuantileGrid:
    """Strictly increasing quantile levels in (0, 1)."""

    levels: np.ndarray

    def __post_init__(self) -> None:
        levels = np.ascontiguousarray(self.levels, dtype=np.float64).reshape(-1)
        if levels.size < 1:
            raise ValueError("quantile grid must contain at least one level")
        if levels[0] <= 0.0 or levels[-1] >= 1.0 or np.any(np.diff(levels) <= 0.0):
            raise ValueError("levels must be strictly increasing inside (0, 1)")
        levels.setflags(write=False)
        object.__setattr__(self, "levels", levels)

    @property
    def T(self) -> int:
        return self.levels.size


@dataclass(frozen=True)
class TransportPlan:
    """Sparse coupling between a source of ``rows`` and a target of ``cols`` atoms."""

    rows: int
    cols: int
    i_idx: np.ndarray
    j_idx: np.ndarray
    mass: np.ndarray

    def __post_init__(self) -> None:
        i_idx = np.ascontiguousarray(self.i_idx, dtype=np.int64)
        j_idx = np.ascontiguousarray(self.j_idx, dtype=np.int64)
        mass = np.ascontiguousarray(self.mass, dtype=np.float64)
        if not (i_idx.shape == j_idx.shape == mass.shape):
            raise ValueError("plan index and mass arrays must share a shape")
        if np.any(mass < 0.0):
            raise ValueError("plan masses must be nonnegative")
        if mass.size > self.rows + self.cols - 1:
            raise ValueError("plan is not a basic solution (too many entries)")
        for arr in (i_idx, j_idx, mass):
            arr.setflags(write=False)
        object.__setattr__(self, "i_idx", i_idx)
        object.__setattr__(self, "j_idx", j_idx)
        object.__setattr__(self, "mass", mass)

    def row_sums(self) -> np.ndarray:
        out = np.zeros(self.rows)
        np.add.at(out, self.i_idx, self.mass)
        return out

    def col_sums(self) -> np.ndarray:
        out = np.zeros(self.cols)
        np.add.at(out, self.j_idx, self.mass)
        return out

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.rows, self.cols))
        out[self.i_idx, self.j_idx] = self.mass
        return out


def quantile_ranks(levels: np.ndarray, m: int) -> np.ndarray:
    """1-based order-statistic ranks ceil(t*m) for each level.

    A 1e-9 slack keeps ceil from jumping a level when t*m is an integer up
    to float rounding (e.g. 0.05 * 20).
    """
    ranks = np.ceil(np.asarray(levels) * m - 1e-9).astype(np.int64)
    return np.clip(ranks, 1, m)


def empirical_quantiles(samples_1d: np.ndarray, grid: QuantileGrid) -> np.ndarray:
    """Left-continuous empirical quantiles x_(ceil(t*m)) at the grid levels."""
    samples = np.asarray(samples_1d, dtype=np.float64).reshape(-1)
    if samples.size == 0:
        raise ValueError("cannot take quantiles of an empty sample")
    ordered = np.sort(samples)
    return ordered[quantile_ranks(grid.levels, samples.size) - 1]


def _require_uniform_pair(a: DiscreteMeasure, b: DiscreteMeasure) -> None:
    if a.dim != 1 or b.dim != 1:
        raise ValueError("1D transport requires measures in R^1")
    if a.num_points != b.num_points:
        raise ValueError("closed-form 1D transport requires equal support sizes")
    if not (a.is_uniform() and b.is_uniform()):
        raise ValueError("closed-form 1D transport requires uniform weights")


def w2_squared_1d(a: DiscreteMeasure, b: DiscreteMeasure) -> float:
    """Squared 2-Wasserstein distance on the line via the monotone coupling."""
    _require_uniform_pair(a, b)
    xs = np.sort(a.points[:, 0])
    ys = np.sort(b.points[:, 0])
    return float(np.mean((xs - ys) ** 2))


def squared_distance_matrix(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances between rows of x and y."""
    x2 = np.sum(x * x, axis=1)[:, None]
    y2 = np.sum(y * y, axis=1)[None, :]
    d2 = x2 + y2 - 2.0 * (x @ y.T)
    np.maximum(d2, 0.0, out=d2)
    return d2


def solve_discrete_ot(source: DiscreteMeasure, target: DiscreteMeasure) -> TransportPlan:
    """Exact optimal transport plan between two discrete measures.

    Cost is squared Euclidean distance; the returned plan is a basic optimal
    solution satisfying both marginals within ``MARGINAL_TOL``.
    """
    if source.dim != target.dim:
        raise ValueError(
            f"dimension mismatch: source in R^{source.dim}, target in R^{target.dim}"
        )
    cost = squared_distance_matrix(source.points, target.points)
    ii, jj, mass, _ = _backend.solve_dense(cost, source.weights, target.weights)
    plan = TransportPlan(source.num_points, target.num_points, ii, jj, mass)
    _validate_marginals(plan, source, target)
    return plan


def _validate_marginals(plan: TransportPlan, source: DiscreteMeasure, target: DiscreteMeasure) -> None:
    if np.max(np.abs(plan.row_sums() - source.weights)) > MARGINAL_TOL:
        raise RuntimeError("transport plan violates the source marginal")
    if np.max(np.abs(plan.col_sums() - target.weights)) > MARGINAL_TOL:
        raise RuntimeError("transport plan violates the target marginal")


def _check_shapes(plan: TransportPlan, source: DiscreteMeasure, target: DiscreteMeasure) -> None:
    if plan.rows != source.num_points or plan.cols != target.num_points:
        raise ValueError("plan shape does not match the measure pair")
    if source.dim != target.dim:
        raise ValueError("dimension mismatch between source and target")


def transport_cost(plan: TransportPlan, source: DiscreteMeasure, target: DiscreteMeasure) -> float:
    """Sum of mass * squared distance over the plan entries."""
    _check_shapes(plan, source, target)
    diff = source.points[plan.i_idx] - target.points[plan.j_idx]
    return float(np.sum(plan.mass * np.sum(diff * diff, axis=1)))


def barycentric_map(plan: TransportPlan, source: DiscreteMeasure, target: DiscreteMeasure) -> np.ndarray:
    """Conditional mean of the plan given each source atom (one row per atom).

    Row k is sum_j mass_kj * y_j / weight_k, a convex combination of target
    points; a zero-weight source atom has no conditional mean and is an error.
    """
    _check_shapes(plan, source, target)
    if np.any(source.weights <= 0.0):
        raise ValueError("barycentric map undefined for zero-weight source atoms")
    out = np.zeros((plan.rows, target.dim))
    np.add.at(out, plan.i_idx, plan.mass[:, None] * target.points[plan.j_idx])
    return out / source.weights[:, None]
