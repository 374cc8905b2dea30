"""Finite-dimensional embeddings of discrete measures.

Three embeddings map a :class:`DiscreteMeasure` to a weighted coordinate
vector: the kernel mean embedding evaluated on a reference point set, the
linearized-OT embedding (barycentric transport map from a discretized
reference, minus identity), and the sliced-Wasserstein embedding (empirical
quantiles of random 1D projections). The quadrature weights attached to each
vector realize the corresponding L^2 norm, so downstream covariance/PCA code
can work in whitened coordinates.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .measures import DiscreteMeasure
from .ot_core import QuantileGrid, barycentric_map, quantile_ranks, solve_discrete_ot, squared_distance_matrix
from .rng import RngStream

KME = "kme"
LOT = "lot"
SW = "sw"
KINDS = (KME, LOT, SW)

_UNIT_TOL = 1e-12


def make_sphere_directions(p: int, d: int, rng: RngStream) -> np.ndarray:
    """p i.i.d. uniform directions on S^{d-1} (normalized standard Gaussians)."""
    if p < 1 or d < 1:
        raise ValueError("p and d must be >= 1")
    z = rng.standard_normal((p, d))
    norms = np.linalg.norm(z, axis=1, keepdims=True)
    if np.any(norms == 0.0):  # probability zero; regenerate deterministically
        z[norms[:, 0] == 0.0] = 1.0
        norms = np.linalg.norm(z, axis=1, keepdims=True)
    return z / norms


def make_quantile_grid(T: int) -> QuantileGrid:
    """Midpoint levels (2l - 1) / (2T), avoiding the endpoints 0 and 1."""
    if T < 1:
        raise ValueError("T must be >= 1")
    return QuantileGrid(np.arange(1, 2 * T, 2) / (2.0 * T))


@dataclass(frozen=True)
class EmbeddingConfig:
    """Discretization of one embedding; all vectors embedded under the same
    config live in the same weighted coordinate space (same ``space_tag``)."""

    kind: str
    reference: DiscreteMeasure | None = None
    kernel: str = "rbf"
    bandwidth: float = 1.0
    directions: np.ndarray | None = None
    grid: QuantileGrid | None = None
    space_tag: str = field(init=False)
    _weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown embedding kind {self.kind!r}")
        if self.kind in (KME, LOT):
            if self.reference is None or self.reference.num_points < 1:
                raise ValueError(f"{self.kind} requires a nonempty reference measure")
            if not self.reference.is_uniform():
                raise ValueError(f"{self.kind} requires a uniform-weight reference")
        if self.kind == KME:
            if self.kernel not in ("rbf", "linear"):
                raise ValueError(f"unknown kernel {self.kernel!r}")
            if self.kernel == "rbf" and not self.bandwidth > 0.0:
                raise ValueError("rbf bandwidth must be positive")
        if self.kind == SW:
            if self.directions is None or self.grid is None:
                raise ValueError("sw requires directions and a quantile grid")
            dirs = np.ascontiguousarray(self.directions, dtype=np.float64)
            if dirs.ndim != 2 or dirs.shape[0] < 1:
                raise ValueError("directions must be a p x d matrix")
            norms = np.linalg.norm(dirs, axis=1)
            if np.any(np.abs(norms - 1.0) > _UNIT_TOL):
                raise ValueError("directions must have unit norm within 1e-12")
            dirs.setflags(write=False)
            object.__setattr__(self, "directions", dirs)
        object.__setattr__(self, "space_tag", self._compute_tag())
        if self.kind == SW:
            w = np.full(self.dim_embedded, 1.0 / self.dim_embedded)
        else:
            w = np.full(self.dim_embedded, 1.0 / self.reference.num_points)
        w.setflags(write=False)
        object.__setattr__(self, "_weights", w)

    def _compute_tag(self) -> str:
        h = hashlib.sha256()
        h.update(self.kind.encode())
        if self.kind == KME:
            h.update(self.kernel.encode())
            if self.kernel == "rbf":
                h.update(np.float64(self.bandwidth).tobytes())
        if self.reference is not None:
            h.update(self.reference.points.tobytes())
        if self.directions is not None:
            h.update(np.ascontiguousarray(self.directions).tobytes())
        if self.grid is not None:
            h.update(self.grid.levels.tobytes())
        return h.hexdigest()[:16]

    @property
    def dim_embedded(self) -> int:
        if self.kind == KME:
            return self.reference.num_points
        if self.kind == LOT:
            return self.reference.num_points * self.reference.dim
        return self.grid.T * self.directions.shape[0]

    def quad_weights(self) -> np.ndarray:
        """Quadrature weights defining the inner product <u,v> = sum u v w.

        All vectors embedded under this config share this exact array.
        """
        return self._weights


@dataclass(frozen=True)
class EmbeddedVector:
    """Coordinates of an embedded measure plus the space's quadrature weights."""

    coords: np.ndarray
    quad_weights: np.ndarray
    space_tag: str

    def __post_init__(self) -> None:
        coords = np.ascontiguousarray(self.coords, dtype=np.float64).reshape(-1)
        if coords.shape != self.quad_weights.shape:
            raise ValueError("coords and quad_weights must have equal length")
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)

    @property
    def dim(self) -> int:
        return self.coords.size


def _vector(cfg: EmbeddingConfig, coords: np.ndarray) -> EmbeddedVector:
    return EmbeddedVector(coords, cfg.quad_weights(), cfg.space_tag)


def embed_kme(mu: DiscreteMeasure, cfg: EmbeddingConfig) -> EmbeddedVector:
    """Kernel mean function of mu evaluated at the reference points."""
    if cfg.kind != KME:
        raise ValueError("config is not a kme config")
    ref = cfg.reference
    if mu.dim != ref.dim:
        raise ValueError("measure and reference dimensions differ")
    if cfg.kernel == "linear":
        gram = mu.points @ ref.points.T
    else:
        d2 = squared_distance_matrix(mu.points, ref.points)
        gram = np.exp(-d2 / (2.0 * cfg.bandwidth**2))
    return _vector(cfg, mu.weights @ gram)


def embed_lot(mu: DiscreteMeasure, cfg: EmbeddingConfig) -> EmbeddedVector:
    """Barycentric transport map from the reference to mu, minus identity.

    Block r of the output is T(x_r) - x_r in R^d; blocks are laid out
    point-major so the uniform scalar weights 1/m0 realize the L^2(rho; R^d)
    norm of the map.
    """
    if cfg.kind != LOT:
        raise ValueError("config is not a lot config")
    ref = cfg.reference
    if mu.dim != ref.dim:
        raise ValueError("measure and reference dimensions differ")
    plan = solve_discrete_ot(ref, mu)
    tmap = barycentric_map(plan, ref, mu)
    return _vector(cfg, (tmap - ref.points).reshape(-1))


def embed_sw(mu: DiscreteMeasure, cfg: EmbeddingConfig) -> EmbeddedVector:
    """Empirical quantiles of each projected sample, direction-major."""
    if cfg.kind != SW:
        raise ValueError("config is not a sw config")
    if not mu.is_uniform():
        raise ValueError("sliced quantile embedding requires uniform weights")
    dirs = cfg.directions
    if mu.dim != dirs.shape[1]:
        raise ValueError("measure and direction dimensions differ")
    proj = np.sort(mu.points @ dirs.T, axis=0)
    ranks = quantile_ranks(cfg.grid.levels, mu.num_points)
    return _vector(cfg, proj[ranks - 1, :].T.reshape(-1))


def embed(mu: DiscreteMeasure, cfg: EmbeddingConfig) -> EmbeddedVector:
    """Dispatch on the config kind."""
    if cfg.kind == KME:
        return embed_kme(mu, cfg)
    if cfg.kind == LOT:
        return embed_lot(mu, cfg)
    return embed_sw(mu, cfg)


def embedding_distance(u: EmbeddedVector, v: EmbeddedVector) -> float:
    """Weighted L^2 distance sqrt(sum (u_r - v_r)^2 w_r)."""
    if u.space_tag != v.space_tag:
        raise ValueError("embedded vectors live in different spaces")
    diff = u.coords - v.coords
    return float(np.sqrt(np.sum(diff * diff * u.quad_weights)))
