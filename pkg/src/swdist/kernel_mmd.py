"""Kernel Gram evaluation and unbiased squared maximum mean discrepancy.

Three kernel families cover the common embedding-space metrics: the cubic
polynomial kernel on Inception features (KID), a single RBF at sigma=10 on
CLIP features (CMMD), and a mixture of RBF bandwidths placed around the
median pairwise distance (for self-supervised ViT features).  The MMD
estimator is the unbiased U-statistic in all cases, so values can be
negative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embed_io import EmbeddingSet
from .errors import ArityError, BandwidthError, DataError, ShapeError

# Peak entries per Gram block: 8M float64 entries is 64 MB.
_BLOCK_ENTRIES = 8_000_000

MIXTURE_MULTIPLIERS = (0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0)
MEDIAN_POOL_CAP = 2000
CMMD_SIGMA = 10.0


@dataclass(frozen=True)
class PolynomialKernel:
    """k(u, v) = (gamma * <u, v> + coef)^degree; gamma=None means 1/d."""

    degree: int = 3
    gamma: float | None = None
    coef: float = 1.0

    def __post_init__(self):
        if not isinstance(self.degree, (int, np.integer)) or self.degree < 1:
            raise DataError(f"polynomial degree must be an integer >= 1, got {self.degree!r}")
        if self.gamma is not None and not (self.gamma > 0):
            raise DataError(f"polynomial gamma must be positive or None, got {self.gamma}")
        if self.coef < 0:
            raise DataError(f"polynomial coef must be nonnegative, got {self.coef}")


@dataclass(frozen=True)
class RbfKernel:
    """k(u, v) = exp(-||u - v||^2 / (2 sigma^2))."""

    sigma: float

    def __post_init__(self):
        if not (self.sigma > 0):
            raise BandwidthError(f"rbf sigma must be positive, got {self.sigma}")


@dataclass(frozen=True)
class RbfMixtureKernel:
    """Mean of RBF kernels at multiplier * base bandwidth.

    ``sigma_base`` is the resolved base bandwidth; when None it is taken
    as the median pairwise distance of the pooled inputs at use time.
    """

    multipliers: tuple = MIXTURE_MULTIPLIERS
    sigma_base: float | None = None

    def __post_init__(self):
        mult = tuple(float(m) for m in self.multipliers)
        if not mult:
            raise ArityError("mixture needs at least one bandwidth multiplier")
        if any(m <= 0 for m in mult):
            raise BandwidthError(f"mixture multipliers must be positive, got {mult}")
        if self.sigma_base is not None and not (self.sigma_base > 0):
            raise BandwidthError(f"mixture base bandwidth must be positive, got {self.sigma_base}")
        object.__setattr__(self, "multipliers", mult)

    def sigmas(self) -> tuple:
        if self.sigma_base is None:
            raise BandwidthError("mixture base bandwidth is unresolved")
        return tuple(m * self.sigma_base for m in self.multipliers)


KernelSpec = PolynomialKernel | RbfKernel | RbfMixtureKernel


@dataclass(frozen=True)
class MmdResult:
    """Unbiased squared-MMD estimate; the U-statistic can go below zero."""

    value: float
    kernel: KernelSpec
    n: int
    m: int

    def __post_init__(self):
        if self.n < 2 or self.m < 2:
            raise ArityError(
                f"unbiased estimate needs >= 2 samples per side, got {self.n} and {self.m}")


def median_heuristic(x: EmbeddingSet, y: EmbeddingSet, cap: int = MEDIAN_POOL_CAP,
                     seed: int = 0) -> float:
    """Median pairwise Euclidean distance over the pooled sample.

    Pools both sets, subsamples uniformly (seeded) to at most ``cap``
    points, and returns the median over all pairs of the pool.

    Examples
    --------
    >>> a = EmbeddingSet(np.array([[0.0], [1.0]]))
    >>> b = EmbeddingSet(np.array([[3.0]]))
    >>> median_heuristic(a, b)  # pairs (0,1), (0,3), (1,3)
    2.0
    """
    if x.d != y.d:
        raise ShapeError(f"dimension mismatch: {x.d} vs {y.d}")
    pooled = np.concatenate([x.data, y.data], axis=0)
    if pooled.shape[0] > cap:
        keep = np.random.default_rng(seed).choice(pooled.shape[0], size=cap, replace=False)
        pooled = pooled[np.sort(keep)]
    k = pooled.shape[0]
    if k < 2:
        raise ArityError(f"need at least 2 pooled points for a pairwise median, got {k}")
    norms = np.einsum("ij,ij->i", pooled, pooled)
    sq = norms[:, None] + norms[None, :] - 2.0 * (pooled @ pooled.T)
    iu, ju = np.triu_indices(k, k=1)
    return float(np.median(np.sqrt(np.maximum(sq[iu, ju], 0.0))))


def _resolve(kernel: KernelSpec, x: EmbeddingSet, y: EmbeddingSet) -> KernelSpec:
    """Bind data-dependent kernel parameters (auto gamma, median bandwidth)."""
    if isinstance(kernel, PolynomialKernel) and kernel.gamma is None:
        return PolynomialKernel(kernel.degree, 1.0 / x.d, kernel.coef)
    if isinstance(kernel, RbfMixtureKernel) and kernel.sigma_base is None:
        base = median_heuristic(x, y)
        if base <= 0.0:
            raise BandwidthError("median pairwise distance is zero; bandwidth undefined")
        return RbfMixtureKernel(kernel.multipliers, base)
    return kernel


def _kernel_block(kernel, xb, yb, xb_norms, yb_norms, diag_offset=None, diag_value=None):
    """Evaluate one Gram block; optionally overwrite crossing diagonal cells.

    diag_offset marks where the global diagonal enters this block (for
    same-set Grams); those entries are overwritten with diag_value so
    identity pairs are exact regardless of floating-point expansion noise.
    """
    if isinstance(kernel, PolynomialKernel):
        block = (kernel.gamma * (xb @ yb.T) + kernel.coef) ** kernel.degree
    elif isinstance(kernel, RbfKernel):
        sq = xb_norms[:, None] + yb_norms[None, :] - 2.0 * (xb @ yb.T)
        np.maximum(sq, 0.0, out=sq)
        block = np.exp(sq / (-2.0 * kernel.sigma ** 2))
    else:
        raise DataError(f"unsupported kernel {kernel!r}")
    if diag_offset is not None:
        rows = np.arange(xb.shape[0])
        cols = rows + diag_offset
        mask = (cols >= 0) & (cols < yb.shape[0])
        vals = diag_value[mask] if isinstance(diag_value, np.ndarray) else diag_value
        block[rows[mask], cols[mask]] = vals
    return block


def _block_rows(m: int) -> int:
    return max(1, _BLOCK_ENTRIES // max(1, m))


def gram(kernel: KernelSpec, x: EmbeddingSet, y: EmbeddingSet) -> np.ndarray:
    """Full N x M Gram matrix k(x_i, y_j).

    A same-set Gram (``gram(k, x, x)``) has exact identity entries on the
    diagonal: unit for RBF kernels, (gamma ||x_i||^2 + coef)^degree for
    polynomial ones.

    Examples
    --------
    >>> es = EmbeddingSet(np.array([[1.0, 0.0]]))
    >>> float(gram(PolynomialKernel(3, None, 1.0), es, es)[0, 0])
    3.375
    """
    if x.d != y.d:
        raise ShapeError(f"dimension mismatch: {x.d} vs {y.d}")
    kernel = _resolve(kernel, x, y)
    if isinstance(kernel, RbfMixtureKernel):
        grams = [gram(RbfKernel(s), x, y) for s in kernel.sigmas()]
        out = grams[0]
        for g in grams[1:]:
            out = out + g
        return out / len(grams)

    same = x is y or x.data is y.data
    xn = np.einsum("ij,ij->i", x.data, x.data)
    yn = xn if same else np.einsum("ij,ij->i", y.data, y.data)
    out = np.empty((x.n, y.n))
    step = _block_rows(y.n)
    for r0 in range(0, x.n, step):
        r1 = min(r0 + step, x.n)
        diag_offset = None
        diag_value = None
        if same:
            diag_offset = r0
            if isinstance(kernel, PolynomialKernel):
                diag_value = (kernel.gamma * xn[r0:r1] + kernel.coef) ** kernel.degree
            else:
                diag_value = 1.0
        out[r0:r1] = _kernel_block(kernel, x.data[r0:r1], y.data,
                                   xn[r0:r1], yn, diag_offset, diag_value)
    return out


def _sum_pairs(kernel, x: EmbeddingSet, y: EmbeddingSet, skip_diagonal: bool):
    """Sum of kernel values over all (i, j) pairs, optionally excluding i=j.

    Blocked over rows; block subtotals are accumulated in row order in
    float64, so results are reproducible for fixed inputs.
    """
    same = skip_diagonal
    xn = np.einsum("ij,ij->i", x.data, x.data)
    yn = xn if same else np.einsum("ij,ij->i", y.data, y.data)
    step = _block_rows(y.n)
    total = 0.0
    for r0 in range(0, x.n, step):
        r1 = min(r0 + step, x.n)
        # Writing 0 into the crossing diagonal cells removes the i=j terms.
        block = _kernel_block(kernel, x.data[r0:r1], y.data, xn[r0:r1], yn,
                              diag_offset=r0 if same else None,
                              diag_value=0.0 if same else None)
        total += float(np.sum(block))
    return total


def mmd2_unbiased(kernel: KernelSpec, x: EmbeddingSet, y: EmbeddingSet) -> MmdResult:
    """Unbiased estimate of the squared MMD between two embedding sets.

    sum_{i != j} k(x_i, x_j) / (n (n-1))
      + sum_{i != j} k(y_i, y_j) / (m (m-1))
      - 2 sum_{i, j} k(x_i, y_j) / (n m)

    Examples
    --------
    >>> lin = PolynomialKernel(degree=1, gamma=1.0, coef=0.0)
    >>> a = EmbeddingSet(np.array([[0.0], [2.0]]))
    >>> b = EmbeddingSet(np.array([[1.0], [1.0]]))
    >>> mmd2_unbiased(lin, a, b).value
    -1.0
    """
    if x.d != y.d:
        raise ShapeError(f"dimension mismatch: {x.d} vs {y.d}")
    n, m = x.n, y.n
    if n < 2 or m < 2:
        raise ArityError(f"unbiased estimate needs >= 2 samples per side, got {n} and {m}")
    kernel = _resolve(kernel, x, y)
    if isinstance(kernel, RbfMixtureKernel):
        vals = [mmd2_unbiased(RbfKernel(s), x, y).value for s in kernel.sigmas()]
        return MmdResult(value=float(np.mean(vals)), kernel=kernel, n=n, m=m)
    sum_xx = _sum_pairs(kernel, x, x, skip_diagonal=True)
    sum_yy = _sum_pairs(kernel, y, y, skip_diagonal=True)
    sum_xy = _sum_pairs(kernel, x, y, skip_diagonal=False)
    value = sum_xx / (n * (n - 1)) + sum_yy / (m * (m - 1)) - 2.0 * sum_xy / (n * m)
    return MmdResult(value=value, kernel=kernel, n=n, m=m)


def kid(x: EmbeddingSet, y: EmbeddingSet) -> MmdResult:
    """Squared MMD under the cubic polynomial kernel (<u,v>/d + 1)^3."""
    return mmd2_unbiased(PolynomialKernel(degree=3, gamma=None, coef=1.0), x, y)


def cmmd(x: EmbeddingSet, y: EmbeddingSet) -> MmdResult:
    """Squared MMD under a single RBF kernel with sigma = 10.

    Reported unscaled; some published implementations multiply by 1000.
    """
    return mmd2_unbiased(RbfKernel(CMMD_SIGMA), x, y)


def mmd_rbf_mixture(x: EmbeddingSet, y: EmbeddingSet,
                    multipliers=MIXTURE_MULTIPLIERS) -> MmdResult:
    """Squared MMD averaged over RBF bandwidths around the median distance.

    Bandwidths are multiplier * median pairwise distance of the pooled
    sample; the value is the mean of the per-bandwidth unbiased estimates,
    which equals the estimate under the averaged kernel.
    """
    return mmd2_unbiased(RbfMixtureKernel(tuple(multipliers), None), x, y)
