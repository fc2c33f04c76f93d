"""Gaussian moment fitting and the Frechet distance between fitted Gaussians.

This is the distance behind FID: fit (mean, covariance) to each embedding
set and evaluate the closed-form 2-Wasserstein distance between the two
Gaussians.  The trace term uses a symmetric eigendecomposition of
S1 Sigma2 S1 (S1 the root of Sigma1), which is PSD whenever the inputs
are, instead of a general square root of the non-symmetric product
Sigma1 Sigma2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embed_io import EmbeddingSet
from .errors import ArityError, DataError, ShapeError

SYMMETRY_ATOL = 1e-10
# Most negative eigenvalue tolerated in a covariance, relative to the largest.
PSD_RTOL = 1e-8


@dataclass(frozen=True)
class GaussianSummary:
    """Sample mean, covariance, and count of one embedding set."""

    mean: np.ndarray
    cov: np.ndarray
    n: int

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64).ravel()
        cov = np.asarray(self.cov, dtype=np.float64)
        d = mean.size
        if cov.shape != (d, d):
            raise ShapeError(f"covariance shape {cov.shape} does not match mean size {d}")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise DataError("Gaussian summary contains NaN or Inf")
        if np.max(np.abs(cov - cov.T)) > SYMMETRY_ATOL:
            raise DataError("covariance is not symmetric")
        evals = np.linalg.eigvalsh(cov)
        floor = -PSD_RTOL * max(evals[-1], 0.0)
        if evals[0] < min(floor, 0.0) - SYMMETRY_ATOL:
            raise DataError(f"covariance has negative eigenvalue {evals[0]:.3e}")
        mean.flags.writeable = False
        cov.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def d(self) -> int:
        return self.mean.size


def fit_gaussian(x: EmbeddingSet, ridge: float = 0.0) -> GaussianSummary:
    """Sample mean and unbiased (divisor n-1) covariance of an embedding set.

    ``ridge`` adds eps * I to the covariance for rank-deficient sets
    (high dimension, few samples); the default adds nothing.

    Examples
    --------
    >>> es = EmbeddingSet(np.array([[0.0, 0.0], [2.0, 0.0]]))
    >>> g = fit_gaussian(es)
    >>> g.mean.tolist(), g.cov.tolist()
    ([1.0, 0.0], [[2.0, 0.0], [0.0, 0.0]])
    """
    if x.n < 2:
        raise ArityError(f"need at least 2 samples to fit a covariance, got {x.n}")
    if ridge < 0:
        raise DataError(f"ridge must be nonnegative, got {ridge}")
    mean = x.data.mean(axis=0)
    centered = x.data - mean
    cov = centered.T @ centered / (x.n - 1)
    cov = (cov + cov.T) / 2.0
    if ridge:
        cov = cov + ridge * np.eye(x.d)
    return GaussianSummary(mean=mean, cov=cov, n=x.n)


def sqrtm_psd(a: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition.

    Negative eigenvalues (numerical noise in nominally PSD inputs) are
    clamped to zero.  The result S is symmetric and satisfies S @ S = a
    to about 1e-6 relative Frobenius error for well-scaled inputs.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"matrix square root needs a square matrix, got {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.max(np.abs(a - a.T)) > 1e-8 * scale:
        raise DataError("matrix square root input is not symmetric")
    evals, vecs = np.linalg.eigh((a + a.T) / 2.0)
    root = (vecs * np.sqrt(np.clip(evals, 0.0, None))) @ vecs.T
    return (root + root.T) / 2.0


def frechet_distance_squared(g1: GaussianSummary, g2: GaussianSummary) -> float:
    """Squared Frechet (2-Wasserstein) distance between two Gaussians.

    ||mu1 - mu2||^2 + Tr(S1 + S2 - 2 (S1^{1/2} S2 S1^{1/2})^{1/2}).
    A slightly negative trace term (rounding noise, within 1e-6 of zero
    relative to the total trace scale) is floored at zero.
    """
    if g1.d != g2.d:
        raise ShapeError(f"dimension mismatch: {g1.d} vs {g2.d}")
    mean_term = float(np.sum((g1.mean - g2.mean) ** 2))
    s1 = sqrtm_psd(g1.cov)
    inner = s1 @ g2.cov @ s1
    cross = sqrtm_psd((inner + inner.T) / 2.0)
    trace_term = float(np.trace(g1.cov) + np.trace(g2.cov) - 2.0 * np.trace(cross))
    scale = max(1.0, float(np.trace(g1.cov) + np.trace(g2.cov)))
    if trace_term < -1e-6 * scale:
        raise DataError(f"trace term {trace_term:.3e} is negative beyond tolerance")
    return mean_term + max(trace_term, 0.0)


def fid(x: EmbeddingSet, y: EmbeddingSet, ridge: float = 0.0) -> float:
    """Frechet distance between Gaussians fitted to two embedding sets.

    Examples
    --------
    >>> rng = np.random.default_rng(0)
    >>> a = EmbeddingSet(rng.standard_normal((64, 4)))
    >>> fid(a, a)
    0.0
    """
    if x.d != y.d:
        raise ShapeError(f"dimension mismatch: x has d={x.d}, y has d={y.d}")
    return frechet_distance_squared(fit_gaussian(x, ridge), fit_gaussian(y, ridge))
