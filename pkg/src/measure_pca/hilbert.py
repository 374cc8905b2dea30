"""Covariance operators, Hilbert-Schmidt geometry and PCA in whitened coordinates.

Whitening multiplies each embedded coordinate by the square root of its
quadrature weight, after which the discretized Hilbert inner product is the
plain dot product and covariance operators are ordinary symmetric matrices.
Covariances produced by :func:`empirical_covariance` and by the closed-form
oracles are positive semidefinite by construction; the :class:`CovOperator`
type itself only requires symmetry so that differences of covariances can be
measured in HS norm.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .embeddings import EmbeddedVector

_SYM_TOL = 1e-10


@dataclass(frozen=True)
class CovOperator:
    """Symmetric operator in whitened coordinates."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        mat = np.ascontiguousarray(self.matrix, dtype=np.float64)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("operator matrix must be square")
        if not np.all(np.isfinite(mat)):
            raise ValueError("operator matrix contains non-finite entries")
        scale = float(np.max(np.abs(mat))) if mat.size else 0.0
        if scale > 0.0 and float(np.max(np.abs(mat - mat.T))) > _SYM_TOL * scale:
            raise ValueError("operator matrix is not symmetric within tolerance")
        mat = 0.5 * (mat + mat.T)
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.matrix))


@dataclass(frozen=True)
class SpectralDecomp:
    """Descending eigenvalues with orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


@dataclass(frozen=True)
class Projector:
    """Rank-q orthogonal projector given by an orthonormal basis (columns)."""

    q: int
    basis: np.ndarray

    def __post_init__(self) -> None:
        basis = np.ascontiguousarray(self.basis, dtype=np.float64)
        if basis.ndim != 2 or basis.shape[1] != self.q:
            raise ValueError("basis must be a D x q matrix")
        gram = basis.T @ basis
        if float(np.max(np.abs(gram - np.eye(self.q)))) > 1e-10:
            raise ValueError("projector basis is not orthonormal within 1e-10")
        basis.setflags(write=False)
        object.__setattr__(self, "basis", basis)


def whiten(v: EmbeddedVector) -> np.ndarray:
    """Coordinates scaled by sqrt of the quadrature weights."""
    return v.coords * np.sqrt(v.quad_weights)


def _whitened_matrix(vs: Sequence[EmbeddedVector]) -> np.ndarray:
    if len(vs) < 1:
        raise ValueError("need at least one embedded vector")
    tag = vs[0].space_tag
    if any(v.space_tag != tag for v in vs):
        raise ValueError("embedded vectors live in different spaces")
    sqw = np.sqrt(vs[0].quad_weights)
    return np.stack([v.coords for v in vs]) * sqw


def empirical_covariance(vs: Sequence[EmbeddedVector], center: bool = True) -> CovOperator:
    """(1/n) sum (psi_i - psi_bar)(psi_i - psi_bar)^T of the whitened vectors.

    Rows are accumulated in a canonical (lexicographic) order so the result
    is exactly invariant under permutations of the input list.
    """
    psi = _whitened_matrix(vs)
    psi = psi[np.lexsort(psi.T[::-1])]
    if center:
        psi = psi - psi.mean(axis=0)
    mat = (psi.T @ psi) / psi.shape[0]
    return CovOperator(0.5 * (mat + mat.T))


def hs_norm(a: CovOperator) -> float:
    """Hilbert-Schmidt (Frobenius) norm."""
    return float(np.linalg.norm(a.matrix))


def hs_inner(a: CovOperator, b: CovOperator) -> float:
    """Hilbert-Schmidt (Frobenius) inner product."""
    if a.dim != b.dim:
        raise ValueError("operator dimensions differ")
    return float(np.sum(a.matrix * b.matrix))


def hs_distance(a: CovOperator, b: CovOperator) -> float:
    """HS norm of the difference a - b."""
    if a.dim != b.dim:
        raise ValueError("operator dimensions differ")
    return float(np.linalg.norm(a.matrix - b.matrix))


def spectral_decompose(a: CovOperator) -> SpectralDecomp:
    """Full symmetric eigendecomposition, eigenvalues descending.

    Sign convention: each eigenvector's largest-magnitude entry is positive,
    ties broken at the lowest index, so the decomposition is deterministic.
    """
    vals, vecs = np.linalg.eigh(a.matrix)
    order = np.argsort(vals)[::-1]
    vals = np.ascontiguousarray(vals[order])
    vecs = np.ascontiguousarray(vecs[:, order])
    lead = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[lead, np.arange(vecs.shape[1])])
    signs[signs == 0.0] = 1.0
    vecs *= signs
    vals.setflags(write=False)
    vecs.setflags(write=False)
    return SpectralDecomp(vals, vecs)


def top_q_projector(s: SpectralDecomp, q: int) -> Projector:
    """Projector onto the span of the first q eigenvectors."""
    d = s.eigenvectors.shape[0]
    if not 1 <= q <= d:
        raise ValueError(f"rank q={q} out of range [1, {d}]")
    return Projector(q, s.eigenvectors[:, :q])


def reconstruction_risk(sigma: CovOperator, p: Projector) -> float:
    """<Sigma, I - P>_HS = trace(Sigma) - trace(B^T Sigma B)."""
    if p.basis.shape[0] != sigma.dim:
        raise ValueError("projector dimension does not match the operator")
    tr = sigma.trace()
    kept = float(np.trace(p.basis.T @ sigma.matrix @ p.basis))
    risk = tr - kept
    if risk < -1e-9 * max(tr, 1.0):
        raise RuntimeError("reconstruction risk significantly negative; operator not PSD")
    return max(risk, 0.0)


def excess_risk(sigma_pop: CovOperator, p_hat: Projector, q: int) -> float:
    """Reconstruction-risk gap of p_hat relative to the optimal rank-q projector."""
    if p_hat.q != q:
        raise ValueError(f"projector rank {p_hat.q} does not match q={q}")
    p_opt = top_q_projector(spectral_decompose(sigma_pop), q)
    gap = reconstruction_risk(sigma_pop, p_hat) - reconstruction_risk(sigma_pop, p_opt)
    if gap < -1e-9 * max(sigma_pop.trace(), 1.0):
        raise RuntimeError("excess risk significantly negative; eigensolver inconsistency")
    return max(gap, 0.0)


def pca_scores(vs: Sequence[EmbeddedVector], p: Projector, center: bool = True) -> np.ndarray:
    """Projection coefficients B^T (psi_i - psi_bar), one row per vector."""
    psi = _whitened_matrix(vs)
    if psi.shape[1] != p.basis.shape[0]:
        raise ValueError("projector dimension does not match the vectors")
    if center:
        psi = psi - psi.mean(axis=0)
    return psi @ p.basis


def risk_bound_first_term(eigenvalues: np.ndarray, q: int, n: int) -> float:
    """sum_{j<=q} max{ sqrt(lambda_j * tail_j / n), tail_j / n } with tail_j = sum_{k>=j} lambda_k."""
    lam = np.asarray(eigenvalues, dtype=np.float64).reshape(-1)
    if lam.size == 0 or not 1 <= q <= lam.size:
        raise ValueError("q must lie in [1, len(eigenvalues)]")
    if n < 1:
        raise ValueError("n must be >= 1")
    if np.any(lam < -1e-12):
        raise ValueError("eigenvalues must be nonnegative")
    if np.any(np.diff(lam) > 1e-12):
        raise ValueError("eigenvalues must be nonincreasing")
    lam = np.maximum(lam, 0.0)
    tails = np.cumsum(lam[::-1])[::-1]
    terms = np.maximum(np.sqrt(lam[:q] * tails[:q] / n), tails[:q] / n)
    return float(np.sum(terms))
