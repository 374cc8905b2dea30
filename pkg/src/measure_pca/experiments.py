"""Convergence-rate sweeps, rate-slope estimation, Procrustes disparity and
the subsampling-stability protocol.

A sweep draws n random Gaussian laws per trial, observes each through m
samples, embeds the empirical measures, and compares the centered empirical
covariance against the discretized closed-form population covariance (HS
error) together with the PCA excess risk at rank q. One discretization
(reference points, directions, quantile grid) is drawn per trial and shared
by all measures and by the population operator, so the operators being
compared live in the same space.

Trials are independent units of work; each derives its own random streams
from (seed, trial index), so results do not depend on the worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .embeddings import (
    KINDS,
    KME,
    LOT,
    SW,
    EmbeddingConfig,
    embed,
    embedding_distance,
    make_quantile_grid,
    make_sphere_directions,
)
from .hilbert import (
    empirical_covariance,
    excess_risk,
    hs_distance,
    pca_scores,
    spectral_decompose,
    top_q_projector,
)
from .measures import RandomMeasureModel, draw_random_gaussian, sample_gaussian, subsample, uniform_measure
from .oracles import GaussianModelParams, analytic_covariance, analytic_embed
from .rng import RngStream


def worker_count() -> int:
    """Worker cap from MEASURE_PCA_THREADS, defaulting to the CPU count."""
    env = os.environ.get("MEASURE_PCA_THREADS", "")
    if env.strip():
        try:
            n = int(env)
        except ValueError:
            raise ValueError("MEASURE_PCA_THREADS must be an integer") from None
        return max(1, n)
    return max(1, os.cpu_count() or 1)


def _pool_map(fn, args_list):
    """Map preserving order, in processes when more than one worker is allowed."""
    workers = worker_count()
    if workers <= 1 or len(args_list) <= 1:
        return [fn(a) for a in args_list]
    with ProcessPoolExecutor(max_workers=min(workers, len(args_list))) as pool:
        return list(pool.map(fn, args_list))


# ---------------------------------------------------------------------------
# sweeps (dense / sparse regimes)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepConfig:
    regime: str  # 'dense' (n varies, m fixed) or 'sparse' (m varies, n fixed)
    model: RandomMeasureModel
    kinds: tuple
    swept: tuple
    fixed: int
    m0: int
    T: int
    p: int
    q: int = 1
    trials: int = 10
    seed: int = 0

    def __post_init__(self) -> None:
        if self.regime not in ("dense", "sparse"):
            raise ValueError("regime must be 'dense' or 'sparse'")
        if any(k not in KINDS for k in self.kinds) or not self.kinds:
            raise ValueError(f"embedding kinds must be a nonempty subset of {KINDS}")
        swept = tuple(int(v) for v in self.swept)
        if len(swept) < 1 or any(v < 1 for v in swept) or any(
            b <= a for a, b in zip(swept, swept[1:])
        ):
            raise ValueError("swept values must be strictly increasing positive integers")
        if self.trials < 1 or self.q < 1:
            raise ValueError("trials and q must be >= 1")
        object.__setattr__(self, "swept", swept)
        object.__setattr__(self, "kinds", tuple(self.kinds))


def dense_desk_config(seed: int = 0) -> SweepConfig:
    """Desk-scale dense regime: n varies, m = 500."""
    return SweepConfig(
        regime="dense",
        model=RandomMeasureModel(d=2, tau_b=1.0, tau_sigma=0.2),
        kinds=(KME, LOT, SW),
        swept=(25, 50, 100, 200, 400),
        fixed=500,
        m0=200,
        T=10,
        p=10,
        q=1,
        trials=10,
        seed=seed,
    )


def sparse_desk_config(seed: int = 0) -> SweepConfig:
    """Desk-scale sparse regime: m varies, n = 200.

    The law-level variances are smaller than in the dense preset so the
    within-measure sampling error actually dominates the n = 200 floor over
    the whole m grid, which is what defines the sparse regime.
    """
    return SweepConfig(
        regime="sparse",
        model=RandomMeasureModel(d=2, tau_b=0.3, tau_sigma=0.06),
        kinds=(KME, LOT, SW),
        swept=(10, 25, 50, 100, 250, 500),
        fixed=200,
        m0=100,
        T=10,
        p=10,
        q=1,
        trials=10,
        seed=seed,
    )


@dataclass(frozen=True)
class SweepResult:
    """Raw per-trial metrics plus the config needed to reproduce them."""

    config: SweepConfig
    # rows: (kind, swept_value, trial, hs_error, excess_risk)
    rows: tuple

    def summary(self):
        """Mean/std over trials per (kind, swept value), in config order."""
        out = []
        for kind in self.config.kinds:
            for v in self.config.swept:
                hs = [r[3] for r in self.rows if r[0] == kind and r[1] == v]
                er = [r[4] for r in self.rows if r[0] == kind and r[1] == v]
                out.append(
                    (
                        kind,
                        v,
                        float(np.mean(hs)),
                        float(np.std(hs)),
                        float(np.mean(er)),
                        float(np.std(er)),
                        len(hs),
                    )
                )
        return out

    def mean_curve(self, kind: str, metric: str = "hs_error"):
        idx = 3 if metric == "hs_error" else 4
        xs, ys = [], []
        for v in self.config.swept:
            vals = [r[idx] for r in self.rows if r[0] == kind and r[1] == v]
            xs.append(v)
            ys.append(float(np.mean(vals)))
        return np.array(xs, dtype=float), np.array(ys)


def _trial_discretization(cfg: SweepConfig, trial: int):
    root = RngStream(cfg.seed).child("trial", trial)
    d = cfg.model.d
    ref = uniform_measure(root.child("reference").standard_normal((cfg.m0, d)))
    dirs = make_sphere_directions(cfg.p, d, root.child("directions"))
    grid = make_quantile_grid(cfg.T)
    configs = {}
    for kind in cfg.kinds:
        if kind == KME:
            configs[kind] = EmbeddingConfig(KME, reference=ref, kernel="linear")
        elif kind == LOT:
            configs[kind] = EmbeddingConfig(LOT, reference=ref)
        else:
            configs[kind] = EmbeddingConfig(SW, directions=dirs, grid=grid)
    return root, configs


def _sweep_trial(args) -> list:
    cfg, trial = args
    root, configs = _trial_discretization(cfg, trial)
    params = GaussianModelParams.from_model(cfg.model)
    pop = {kind: analytic_covariance(params, c) for kind, c in configs.items()}
    rows = []
    for v in cfg.swept:
        n, m = (v, cfg.fixed) if cfg.regime == "dense" else (cfg.fixed, v)
        samples = []
        for i in range(n):
            law = draw_random_gaussian(cfg.model, root.child("law", v, i))
            samples.append(sample_gaussian(law, m, root.child("points", v, i)))
        for kind in cfg.kinds:
            vecs = [embed(mu, configs[kind]) for mu in samples]
            sigma_hat = empirical_covariance(vecs, center=True)
            hs_err = hs_distance(sigma_hat, pop[kind])
            p_hat = top_q_projector(spectral_decompose(sigma_hat), cfg.q)
            er = excess_risk(pop[kind], p_hat, cfg.q)
            rows.append((kind, v, trial, hs_err, er))
    return rows


def run_sweep(cfg: SweepConfig) -> SweepResult:
    """Run all trials of a sweep; bit-identical for identical configs."""
    results = _pool_map(_sweep_trial, [(cfg, t) for t in range(cfg.trials)])
    rows = [row for trial_rows in results for row in trial_rows]
    return SweepResult(cfg, tuple(rows))


# ---------------------------------------------------------------------------
# slope estimation and scaling helpers
# ---------------------------------------------------------------------------

def estimate_rate_slope(xs, ys) -> float:
    """Least-squares slope of log y against log x."""
    xs = np.asarray(xs, dtype=np.float64).reshape(-1)
    ys = np.asarray(ys, dtype=np.float64).reshape(-1)
    if xs.size != ys.size or xs.size < 3:
        raise ValueError("need at least 3 (x, y) pairs")
    if np.any(xs <= 0.0) or np.any(ys <= 0.0):
        raise ValueError("slope estimation requires positive values")
    lx, ly = np.log(xs), np.log(ys)
    lx = lx - lx.mean()
    return float(np.sum(lx * (ly - ly.mean())) / np.sum(lx * lx))


def minmax_scale(ys) -> np.ndarray:
    """(y - min) / (max - min); undefined for constant input."""
    ys = np.asarray(ys, dtype=np.float64).reshape(-1)
    if ys.size < 2:
        raise ValueError("need at least 2 values")
    lo, hi = float(ys.min()), float(ys.max())
    if hi == lo:
        raise ValueError("min-max scaling is undefined for constant values")
    return (ys - lo) / (hi - lo)


# ---------------------------------------------------------------------------
# Procrustes disparity and the subsampling-stability protocol
# ---------------------------------------------------------------------------

def procrustes_disparity(y1: np.ndarray, y2: np.ndarray) -> float:
    """Dissimilarity after optimal translation, rotation/reflection and scaling.

    Both configurations are standardized (column-centered, unit Frobenius
    norm); the disparity is 1 - (sum of singular values of Y1^T Y2)^2, in [0, 1].
    """
    y1 = np.asarray(y1, dtype=np.float64)
    y2 = np.asarray(y2, dtype=np.float64)
    if y1.shape != y2.shape:
        raise ValueError("configurations must have equal shapes")
    if y1.ndim != 2 or y1.shape[0] < 2:
        raise ValueError("need at least two rows")
    z1 = y1 - y1.mean(axis=0)
    z2 = y2 - y2.mean(axis=0)
    n1 = np.linalg.norm(z1)
    n2 = np.linalg.norm(z2)
    if n1 == 0.0 or n2 == 0.0:
        raise ValueError("constant configuration has no Procrustes alignment")
    z1 /= n1
    z2 /= n2
    sv = np.linalg.svd(z1.T @ z2, compute_uv=False)
    return float(min(max(1.0 - float(sv.sum()) ** 2, 0.0), 1.0))


def _pairwise_disparity(y1: np.ndarray, y2: np.ndarray) -> float:
    """Disparity for the stability protocol, defining the degenerate case.

    Identical measures subsample to identical embeddings, so both score
    matrices can be exactly constant; such pairs are identical configurations
    and their disparity is zero, while the bare operation treats constant
    input as an error.
    """
    n1 = float(np.linalg.norm(y1 - y1.mean(axis=0)))
    n2 = float(np.linalg.norm(y2 - y2.mean(axis=0)))
    if n1 == 0.0 and n2 == 0.0:
        return 0.0
    return procrustes_disparity(y1, y2)


@dataclass(frozen=True)
class StabilityResult:
    """Mean/std of pairwise disparities per subsample size, plus the scores.

    The stored means are exactly 2/(N(N-1)) times the sum of the stored
    pairwise disparities.
    """

    # rows: (m, mean_disparity, std_disparity, N)
    rows: tuple
    # pairwise[m] -> tuple of the N(N-1)/2 disparities d_kl, k < l
    pairwise: dict
    # scores[(m, k)] -> n x q score matrix of subsample iteration k at size m
    scores: dict
    seed: int


def run_stability(
    measures,
    m_list,
    N: int,
    cfg: EmbeddingConfig,
    q: int = 2,
    seed: int = 0,
) -> StabilityResult:
    """Subsample each measure N times per size m, embed, run PCA, and compare
    the 2D representations of all subsample iterations pairwise."""
    if N < 2:
        raise ValueError("need at least N=2 subsample iterations")
    m_list = [int(m) for m in m_list]
    if any(m < 1 for m in m_list):
        raise ValueError("subsample sizes must be positive")
    smallest = min(mu.num_points for mu in measures)
    if max(m_list) > smallest:
        raise ValueError("subsample size exceeds the smallest measure support")
    root = RngStream(seed)
    rows = []
    pairwise = {}
    scores = {}
    for m in m_list:
        reps = []
        for k in range(N):
            vecs = []
            for i, mu in enumerate(measures):
                sub = subsample(mu, m, root.child("subsample", m, k, i))
                vecs.append(embed(sub, cfg))
            cov = empirical_covariance(vecs, center=True)
            proj = top_q_projector(spectral_decompose(cov), q)
            y = pca_scores(vecs, proj, center=True)
            reps.append(y)
            scores[(m, k)] = y
        pair = tuple(
            _pairwise_disparity(reps[a], reps[b])
            for a in range(N)
            for b in range(a + 1, N)
        )
        pairwise[m] = pair
        mean_d = 2.0 / (N * (N - 1)) * float(sum(pair))
        rows.append((m, mean_d, float(np.std(pair)), N))
    return StabilityResult(tuple(rows), pairwise, scores, seed)


def make_cluster_measures(
    n_measures: int = 20,
    points_per_measure: int = 10_000,
    d: int = 2,
    n_clusters: int = 4,
    center_scale: float = 3.0,
    mean_jitter: float = 0.4,
    sigma_jitter: float = 0.1,
    seed: int = 0,
):
    """Synthetic clustered Gaussian measures for the stability protocol.

    Measures are assigned round-robin to clusters; cluster centers sit on a
    circle for d = 2 and on random unit directions otherwise.
    """
    if n_measures < n_clusters:
        raise ValueError("need at least one measure per cluster")
    root = RngStream(seed).child("clusters")
    if d == 2:
        angles = 2.0 * np.pi * np.arange(n_clusters) / n_clusters + np.pi / 4.0
        centers = center_scale * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    else:
        z = root.child("centers").standard_normal((n_clusters, d))
        centers = center_scale * z / np.linalg.norm(z, axis=1, keepdims=True)
    measures = []
    for i in range(n_measures):
        g = i % n_clusters
        delta = mean_jitter * root.child("mean", i).standard_normal(d)
        sig = max(0.2, 1.0 + sigma_jitter * float(root.child("sigma", i).standard_normal(1)[0]))
        pts = centers[g] + delta + sig * root.child("points", i).standard_normal((points_per_measure, d))
        measures.append(uniform_measure(pts))
    return measures


# ---------------------------------------------------------------------------
# sampling-error decay (r_m) harness
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RmDecayConfig:
    model: RandomMeasureModel
    kinds: tuple
    m_list: tuple
    trials: int = 16
    m0: int = 500
    T: int = 20
    p: int = 20
    lot_reference: str = "match"  # 'match': m0 = m per size; 'fixed': m0 as given
    seed: int = 0

    def __post_init__(self) -> None:
        if any(k not in KINDS for k in self.kinds) or not self.kinds:
            raise ValueError(f"embedding kinds must be a nonempty subset of {KINDS}")
        if self.lot_reference not in ("match", "fixed"):
            raise ValueError("lot_reference must be 'match' or 'fixed'")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        object.__setattr__(self, "kinds", tuple(self.kinds))
        object.__setattr__(self, "m_list", tuple(int(m) for m in self.m_list))


def _rm_cell(args) -> float:
    """Mean squared oracle-vs-empirical embedding distance for one (kind, m).

    Laws are drawn from streams indexed by (kind, trial) only, so every m on
    the grid observes the same laws: the law-level variance then cancels in
    the slope estimate (common random numbers).
    """
    cfg, kind, m = args
    d = cfg.model.d
    kind_root = RngStream(cfg.seed).child("rm", kind)
    root = kind_root.child("size", m)
    if kind == KME:
        ref = uniform_measure(kind_root.child("reference").standard_normal((cfg.m0, d)))
        emb_cfg = EmbeddingConfig(KME, reference=ref, kernel="linear")
    elif kind == LOT:
        m0 = m if cfg.lot_reference == "match" else cfg.m0
        ref_stream = root.child("reference") if cfg.lot_reference == "match" else kind_root.child("reference")
        ref = uniform_measure(ref_stream.standard_normal((m0, d)))
        emb_cfg = EmbeddingConfig(LOT, reference=ref)
    else:
        dirs = make_sphere_directions(cfg.p, d, kind_root.child("directions"))
        emb_cfg = EmbeddingConfig(SW, directions=dirs, grid=make_quantile_grid(cfg.T))
    total = 0.0
    for t in range(cfg.trials):
        law = draw_random_gaussian(cfg.model, kind_root.child("law", t))
        mu_hat = sample_gaussian(law, m, root.child("sample", t))
        total += embedding_distance(analytic_embed(law, emb_cfg), embed(mu_hat, emb_cfg)) ** 2
    return total / cfg.trials


def run_rm_decay(cfg: RmDecayConfig):
    """Estimate E||Phi(mu) - Phi(mu_hat_m)||^2 on a grid of m values.

    Returns (rows, slopes): rows are (kind, m, mc_estimate, trials) and
    slopes maps each kind to the fitted log-log slope.
    """
    tasks = [(cfg, kind, m) for kind in cfg.kinds for m in cfg.m_list]
    values = _pool_map(_rm_cell, tasks)
    rows = [
        (kind, m, val, cfg.trials)
        for (_, kind, m), val in zip(tasks, values)
    ]
    slopes = {}
    for kind in cfg.kinds:
        ys = [r[2] for r in rows if r[0] == kind]
        slopes[kind] = estimate_rate_slope(np.array(cfg.m_list, dtype=float), np.array(ys))
    return rows, slopes
