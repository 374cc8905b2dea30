"""Closed-form Gaussian embeddings and population covariance operators.

For the random measure N(b, sigma^2 I_d) with b ~ N(0, tau_b^2 I_d) and a
scalar sigma ~ N(1, tau_sigma^2), each embedding has a closed form:

* linear-kernel KME:  x |-> x^T b
* LOT (reference N(0, I_d)):  x |-> (sigma - 1) x + b
* SW:  (t, theta) |-> theta^T b + sigma * Phi^{-1}(t)

and the centered covariance operator decomposes over explicit eigenfunctions.
This module evaluates those closed forms on a given discretization so the
experiment harness can compare empirical covariances against the population
truth. The common-scalar-sigma LOT covariance adds one component tau_sigma^2
on the identity vector field h(x) = x, whose squared L^2(rho) norm is d; the
Monte Carlo cross-check for this formula lives in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .embeddings import KME, LOT, EmbeddedVector, EmbeddingConfig, embed, embedding_distance
from .hilbert import CovOperator
from .measures import GaussianLaw, RandomMeasureModel, sample_gaussian
from .rng import RngStream

# Rational minimax approximation of the standard normal quantile (lower /
# central / upper regions), refined below by one Halley step on the erf
# residual so the result is accurate to ~1e-15 everywhere we evaluate it.
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425
_SQRT2 = math.sqrt(2.0)
_SQRT_2PI = math.sqrt(2.0 * math.pi)


def _ndtri_raw(t: float) -> float:
    if t < _P_LOW:
        u = math.sqrt(-2.0 * math.log(t))
        return ((((( _C[0]*u + _C[1])*u + _C[2])*u + _C[3])*u + _C[4])*u + _C[5]) / \
               (((( _D[0]*u + _D[1])*u + _D[2])*u + _D[3])*u + 1.0)
    u = t - 0.5
    r = u * u
    return ((((( _A[0]*r + _A[1])*r + _A[2])*r + _A[3])*r + _A[4])*r + _A[5]) * u / \
           ((((( _B[0]*r + _B[1])*r + _B[2])*r + _B[3])*r + _B[4])*r + 1.0)


def _ndtri_half(t: float) -> float:
    """Quantile for t in (0, 0.5]: rational approximation plus one Halley step."""
    x = _ndtri_raw(t)
    err = 0.5 * (1.0 + math.erf(x / _SQRT2)) - t
    u = err * _SQRT_2PI * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


def normal_quantile(t):
    """Standard normal quantile Phi^{-1}(t) for t in (0, 1).

    Both half-ranges evaluate one branch, so the odd symmetry
    Phi^{-1}(1 - t) = -Phi^{-1}(t) is exact whenever 1 - t is exactly
    representable. Accepts a scalar or an array.
    """
    arr = np.asarray(t, dtype=np.float64)
    if np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise ValueError("quantile levels must lie strictly inside (0, 1)")
    flat = arr.reshape(-1)
    out = np.empty(flat.shape)
    for k, tk in enumerate(flat):
        if tk == 0.5:
            out[k] = 0.0
        elif tk > 0.5:
            out[k] = -_ndtri_half(1.0 - tk)
        else:
            out[k] = _ndtri_half(tk)
    if arr.ndim == 0:
        return float(out[0])
    return out.reshape(arr.shape)


@dataclass(frozen=True)
class GaussianModelParams:
    """Variances of the random-measure model feeding the closed forms."""

    d: int
    tau_b_sq: float
    tau_sigma_sq: float

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ValueError("dimension must be >= 1")
        if self.tau_b_sq < 0 or self.tau_sigma_sq < 0:
            raise ValueError("variances must be nonnegative")

    @classmethod
    def from_model(cls, model: RandomMeasureModel) -> "GaussianModelParams":
        return cls(model.d, model.tau_b**2, model.tau_sigma**2)


def analytic_embed(law: GaussianLaw, cfg: EmbeddingConfig) -> EmbeddedVector:
    """Closed-form embedding of the law evaluated at the discretization nodes."""
    if cfg.kind == KME:
        if cfg.kernel != "linear":
            raise ValueError("closed-form KME is available for the linear kernel only")
        coords = cfg.reference.points @ law.b
    elif cfg.kind == LOT:
        if law.dim != cfg.reference.dim:
            raise ValueError("law and reference dimensions differ")
        blocks = (law.sigma - 1.0) * cfg.reference.points + law.b
        coords = blocks.reshape(-1)
    else:
        qvals = normal_quantile(cfg.grid.levels)
        coords = (cfg.directions @ law.b)[:, None] + law.sigma * qvals[None, :]
        coords = coords.reshape(-1)
    return EmbeddedVector(coords, cfg.quad_weights(), cfg.space_tag)


def analytic_covariance(params: GaussianModelParams, cfg: EmbeddingConfig) -> CovOperator:
    """Discretized population covariance from the closed-form eigenfunctions.

    Eigenfunction evaluations are used raw, without re-orthonormalization;
    the resulting O(m0^{-1/2}) Monte Carlo orthogonality error is part of the
    discretization and is absorbed by the experiment tolerances.
    """
    sqw = np.sqrt(cfg.quad_weights())
    d = params.d
    if cfg.kind == KME:
        if cfg.kernel != "linear":
            raise ValueError("closed-form KME covariance is linear-kernel only")
        if cfg.reference.dim != d:
            raise ValueError("reference dimension does not match the model")
        psis = (cfg.reference.points * sqw[:, None]).T  # row i = whitened f_i(x) = x_i
        mat = params.tau_b_sq * (psis.T @ psis)
    elif cfg.kind == LOT:
        if cfg.reference.dim != d:
            raise ValueError("reference dimension does not match the model")
        m0 = cfg.reference.num_points
        mat = np.zeros((m0 * d, m0 * d))
        for i in range(d):
            f = np.zeros(m0 * d)
            f[i::d] = 1.0
            psi = f * sqw
            mat += params.tau_b_sq * np.outer(psi, psi)
        psi_h = cfg.reference.points.reshape(-1) * sqw
        mat += params.tau_sigma_sq * np.outer(psi_h, psi_h)
    else:
        if cfg.directions.shape[1] != d:
            raise ValueError("direction dimension does not match the model")
        p = cfg.directions.shape[0]
        T = cfg.grid.T
        mat = np.zeros((p * T, p * T))
        for i in range(d):
            f = np.repeat(math.sqrt(d) * cfg.directions[:, i], T)
            psi = f * sqw
            mat += (params.tau_b_sq / d) * np.outer(psi, psi)
        g = np.tile(normal_quantile(cfg.grid.levels), p)
        psi_g = g * sqw
        mat += params.tau_sigma_sq * np.outer(psi_g, psi_g)
    return CovOperator(0.5 * (mat + mat.T))


def sampling_error_mc(law: GaussianLaw, cfg: EmbeddingConfig, m: int, trials: int,
                      rng: RngStream) -> float:
    """Monte Carlo estimate of E || Phi(mu) - Phi(mu_hat_m) ||^2 for a fixed law."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    phi0 = analytic_embed(law, cfg)
    total = 0.0
    for t in range(trials):
        mu_hat = sample_gaussian(law, m, rng.child("sample", t))
        total += embedding_distance(phi0, embed(mu_hat, cfg)) ** 2
    return total / trials
