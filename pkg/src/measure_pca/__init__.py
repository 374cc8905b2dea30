"""PCA of empirical probability measures via Hilbert-space embeddings.

Implements kernel mean, linearized optimal transport and sliced Wasserstein
embeddings of discrete measures, covariance/PCA machinery in the embedded
space, closed-form Gaussian oracles, and the convergence-rate and
subsampling-stability experiment harness with a CLI front end.
"""

from .measures import (
    DiscreteMeasure,
    GaussianLaw,
    PointCloudFormatError,
    RandomMeasureModel,
    draw_random_gaussian,
    ingest_point_cloud,
    sample_gaussian,
    subsample,
    uniform_measure,
)
from .ot_core import (
    BACKEND,
    QuantileGrid,
    TransportPlan,
    barycentric_map,
    empirical_quantiles,
    solve_discrete_ot,
    transport_cost,
    w2_squared_1d,
)
from .embeddings import (
    EmbeddedVector,
    EmbeddingConfig,
    embed,
    embed_kme,
    embed_lot,
    embed_sw,
    embedding_distance,
    make_quantile_grid,
    make_sphere_directions,
)
from .hilbert import (
    CovOperator,
    Projector,
    SpectralDecomp,
    empirical_covariance,
    excess_risk,
    hs_distance,
    hs_inner,
    hs_norm,
    pca_scores,
    reconstruction_risk,
    risk_bound_first_term,
    spectral_decompose,
    top_q_projector,
    whiten,
)
from .oracles import (
    GaussianModelParams,
    analytic_covariance,
    analytic_embed,
    normal_quantile,
    sampling_error_mc,
)
from .experiments import (
    RmDecayConfig,
    StabilityResult,
    SweepConfig,
    SweepResult,
    dense_desk_config,
    estimate_rate_slope,
    make_cluster_measures,
    minmax_scale,
    procrustes_disparity,
    run_rm_decay,
    run_stability,
    run_sweep,
    sparse_desk_config,
)
from .rng import RngStream, derive_stream_id

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CovOperator",
    "DiscreteMeasure",
    "EmbeddedVector",
    "EmbeddingConfig",
    "GaussianLaw",
    "GaussianModelParams",
    "PointCloudFormatError",
    "Projector",
    "QuantileGrid",
    "RandomMeasureModel",
    "RmDecayConfig",
    "RngStream",
    "SpectralDecomp",
    "StabilityResult",
    "SweepConfig",
    "SweepResult",
    "TransportPlan",
    "analytic_covariance",
    "analytic_embed",
    "barycentric_map",
    "dense_desk_config",
    "derive_stream_id",
    "draw_random_gaussian",
    "embed",
    "embed_kme",
    "embed_lot",
    "embed_sw",
    "embedding_distance",
    "empirical_covariance",
    "empirical_quantiles",
    "estimate_rate_slope",
    "excess_risk",
    "hs_distance",
    "hs_inner",
    "hs_norm",
    "ingest_point_cloud",
    "make_cluster_measures",
    "make_quantile_grid",
    "make_sphere_directions",
    "minmax_scale",
    "normal_quantile",
    "pca_scores",
    "procrustes_disparity",
    "reconstruction_risk",
    "risk_bound_first_term",
    "run_rm_decay",
    "run_stability",
    "run_sweep",
    "sample_gaussian",
    "sampling_error_mc",
    "solve_discrete_ot",
    "sparse_desk_config",
    "spectral_decompose",
    "subsample",
    "top_q_projector",
    "transport_cost",
    "uniform_measure",
    "w2_squared_1d",
    "whiten",
]
