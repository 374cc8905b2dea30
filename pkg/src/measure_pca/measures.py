"""Random-measure models, sampling, subsampling and point-cloud ingestion.

A :class:`DiscreteMeasure` is the universal representation of data in this
package: a weighted point cloud in R^d whose weights sum to one. The sampling
model mirrors a two-level hierarchy: a :class:`RandomMeasureModel` draws
isotropic Gaussian laws N(b, sigma^2 I_d) with b ~ N(0, tau_b^2 I_d) and
sigma ~ N(1, tau_sigma^2), and each law is observed through m i.i.d. samples.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .rng import RngStream

_WEIGHT_TOL = 1e-12
_MAX_SIGMA_REDRAWS = 10**6


class PointCloudFormatError(ValueError):
    """Raised when a point-cloud CSV file cannot be parsed."""


@dataclass(frozen=True)
class DiscreteMeasure:
    """Weighted point cloud in R^d; weights are nonnegative and sum to one."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        points = np.ascontiguousarray(self.points, dtype=np.float64)
        if points.ndim != 2 or points.shape[0] < 1:
            raise ValueError("points must be a nonempty m x d matrix")
        weights = np.ascontiguousarray(self.weights, dtype=np.float64)
        if weights.shape != (points.shape[0],):
            raise ValueError("weights must have one entry per point")
        if not np.all(np.isfinite(points)):
            raise ValueError("points contain non-finite coordinates")
        if np.any(weights < 0.0):
            raise ValueError("weights must be nonnegative")
        if abs(float(weights.sum()) - 1.0) > _WEIGHT_TOL:
            raise ValueError("weights must sum to 1 within 1e-12")
        points.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)

    @property
    def num_points(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def is_uniform(self) -> bool:
        w = 1.0 / self.num_points
        return bool(np.all(np.abs(self.weights - w) <= _WEIGHT_TOL))


def uniform_measure(points: np.ndarray) -> DiscreteMeasure:
    """Uniform-weight measure over the rows of ``points``."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    m = points.shape[0]
    return DiscreteMeasure(points, np.full(m, 1.0 / m))


@dataclass(frozen=True)
class GaussianLaw:
    """Isotropic Gaussian N(b, sigma^2 I_d)."""

    b: np.ndarray
    sigma: float

    def __post_init__(self) -> None:
        b = np.ascontiguousarray(self.b, dtype=np.float64).reshape(-1)
        if b.size < 1 or not np.all(np.isfinite(b)):
            raise ValueError("mean must be a finite vector")
        if not self.sigma > 0.0:
            raise ValueError("sigma must be positive")
        b.setflags(write=False)
        object.__setattr__(self, "b", b)

    @property
    def dim(self) -> int:
        return self.b.size


@dataclass(frozen=True)
class RandomMeasureModel:
    """Law of a random Gaussian measure: b ~ N(0, tau_b^2 I_d), sigma ~ N(1, tau_sigma^2)."""

    d: int
    tau_b: float
    tau_sigma: float
    sigma_floor: float = 1e-3

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ValueError("dimension must be >= 1")
        if self.tau_b < 0 or self.tau_sigma < 0:
            raise ValueError("tau_b and tau_sigma must be nonnegative")
        if not self.sigma_floor > 0:
            raise ValueError("sigma_floor must be positive")


def draw_random_gaussian(model: RandomMeasureModel, rng: RngStream) -> GaussianLaw:
    """Draw one Gaussian law from the model.

    The scale draw sigma ~ N(1, tau_sigma^2) is redrawn until it is at least
    ``model.sigma_floor`` so the law stays valid.
    """
    b = model.tau_b * rng.child("b").standard_normal(model.d)
    sigma_stream = rng.child("sigma")
    for attempt in range(_MAX_SIGMA_REDRAWS):
        sigma = 1.0 + model.tau_sigma * float(sigma_stream.child("try", attempt).standard_normal(1)[0])
        if sigma >= model.sigma_floor:
            return GaussianLaw(b, sigma)
    raise RuntimeError("sigma redraw limit exceeded; check tau_sigma and sigma_floor")


def sample_gaussian(law: GaussianLaw, m: int, rng: RngStream) -> DiscreteMeasure:
    """m i.i.d. samples from the law, as a uniform-weight measure."""
    if m < 1:
        raise ValueError("sample size m must be >= 1")
    z = rng.standard_normal((m, law.dim))
    return uniform_measure(law.b + law.sigma * z)


def subsample(mu: DiscreteMeasure, m: int, rng: RngStream) -> DiscreteMeasure:
    """Uniform subsample of ``m`` points without replacement.

    The protocol applies to point clouds, so ``mu`` must have uniform weights.
    """
    if not mu.is_uniform():
        raise ValueError("subsample requires a uniform-weight measure")
    if not 1 <= m <= mu.num_points:
        raise ValueError(f"subsample size {m} not in [1, {mu.num_points}]")
    idx = rng.choice_without_replacement(mu.num_points, m)
    return uniform_measure(mu.points[idx])


def _parse_row(fields: list[str], lineno: int, path: Path) -> list[float]:
    try:
        return [float(f) for f in fields]
    except ValueError:
        raise PointCloudFormatError(f"{path}: non-numeric field at line {lineno}") from None


def ingest_point_cloud(path: str | Path) -> DiscreteMeasure:
    """Read a CSV point cloud (one point per row) as a uniform measure.

    Format: UTF-8, comma-separated, optional single header row (detected when
    the first row contains any non-numeric token), dimension inferred from the
    column count. Ragged rows, non-numeric data fields and empty files raise
    :class:`PointCloudFormatError` naming the offending line.
    """
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        lines = [(i + 1, line.rstrip("\n").rstrip("\r")) for i, line in enumerate(fh)]
    lines = [(no, line) for no, line in lines if line.strip()]
    if not lines:
        raise PointCloudFormatError(f"{path}: empty file")

    first_no, first = lines[0]
    first_fields = first.split(",")
    try:
        [float(f) for f in first_fields]
        header = False
    except ValueError:
        header = True
    data_lines = lines[1:] if header else lines
    if not data_lines:
        # A lone non-numeric row is a bad data row, not a header.
        raise PointCloudFormatError(f"{path}: non-numeric field at line {first_no}")

    ncols = len(data_lines[0][1].split(","))
    rows = []
    for lineno, line in data_lines:
        fields = line.split(",")
        if len(fields) != ncols:
            raise PointCloudFormatError(
                f"{path}: ragged row at line {lineno} ({len(fields)} fields, expected {ncols})"
            )
        rows.append(_parse_row(fields, lineno, path))
    return uniform_measure(np.array(rows, dtype=np.float64))
