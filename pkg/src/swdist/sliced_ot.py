"""Sliced squared 2-Wasserstein distance between embedding sets.

The squared sliced distance is the average, over uniformly random unit
directions theta on S^{d-1}, of the exact one-dimensional squared
2-Wasserstein distance between the projected samples.  The integral over
the sphere is replaced by a Monte Carlo average over L directions; the
one-dimensional transport cost has a closed form on sorted samples, so
each direction costs O(N log N).

Also provided: a projection-count planner that inverts a concentration
bound, returning the number of directions sufficient for a target
tolerance and failure probability when the data lie near a
low-dimensional manifold of known diameter.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .embed_io import EmbeddingSet
from .errors import ArityError, DataError, DomainError, ShapeError

DEFAULT_NUM_DIRECTIONS = 500
DEFAULT_CHUNK = 2048

# Grid of direction counts for the refinement study.
ABLATION_GRID = (10, 50, 70, 100, 500, 1000, 2000, 5000, 10000, 15000, 20000)
ABLATION_SEEDS = tuple(range(10))


@dataclass(frozen=True)
class ProjectionPlan:
    """Number of directions, ambient dimension, and the seed that fixes them.

    Regenerating directions from an identical plan is bit-reproducible.
    """

    num_directions: int
    dim: int
    seed: int

    def __post_init__(self):
        if int(self.num_directions) < 1:
            raise ShapeError(f"need at least one direction, got {self.num_directions}")
        if int(self.dim) < 1:
            raise ShapeError(f"direction dimension must be >= 1, got {self.dim}")
        object.__setattr__(self, "num_directions", int(self.num_directions))
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "seed", int(self.seed))


@dataclass(frozen=True)
class BoundQuery:
    """Inputs to the projection-count bound.

    intrinsic_dim : assumed manifold dimension k, integer >= 1
    diameter      : diameter D of the support, > 0
    tolerance     : additive estimation tolerance tau, > 0
    failure_prob  : probability delta in (0, 1) that the tolerance is exceeded
    curvature_const : constant C >= depends on manifold curvature, > 0, default 1
    """

    intrinsic_dim: int
    diameter: float
    tolerance: float
    failure_prob: float
    curvature_const: float = 1.0

    def __post_init__(self):
        k = self.intrinsic_dim
        if not isinstance(k, (int, np.integer)) or isinstance(k, bool) or k < 1:
            raise DomainError(f"intrinsic_dim must be an integer >= 1, got {k!r}")
        if not (self.diameter > 0):
            raise DomainError(f"diameter must be > 0, got {self.diameter}")
        if not (self.tolerance > 0):
            raise DomainError(f"tolerance must be > 0, got {self.tolerance}")
        if not (0 < self.failure_prob < 1):
            raise DomainError(f"failure_prob must lie in (0, 1), got {self.failure_prob}")
        if not (self.curvature_const > 0):
            raise DomainError(f"curvature_const must be > 0, got {self.curvature_const}")


@dataclass(frozen=True)
class SwdResult:
    """Monte Carlo estimate of the squared sliced distance.

    ``value`` is the mean of the per-direction one-dimensional squared
    transport costs; when ``per_direction_values`` is kept, its mean agrees
    with ``value`` to 1e-12 relative.
    """

    value: float
    plan: ProjectionPlan
    per_direction_values: np.ndarray | None = None

    def __post_init__(self):
        if not (self.value >= 0):
            raise DataError(f"squared distance cannot be negative, got {self.value}")
        if self.per_direction_values is not None:
            pdv = np.asarray(self.per_direction_values, dtype=np.float64)
            if pdv.shape != (self.plan.num_directions,):
                raise ShapeError("per-direction array must have one entry per direction")
            if abs(pdv.mean() - self.value) > 1e-12 * max(1.0, abs(self.value)):
                raise DataError("per-direction values inconsistent with reported mean")
            pdv.flags.writeable = False
            object.__setattr__(self, "per_direction_values", pdv)


def _direction_chunks(plan: ProjectionPlan, chunk: int):
    """Yield consecutive blocks of unit directions from one PRNG stream.

    Standard-normal draws from a single generator are a sequential bit
    stream, so the concatenation over chunks is independent of the chunk
    size: any chunking reproduces sample_directions(plan) exactly.
    """
    rng = np.random.default_rng(plan.seed)
    remaining = plan.num_directions
    while remaining > 0:
        take = min(chunk, remaining)
        block = rng.standard_normal((take, plan.dim))
        block /= np.linalg.norm(block, axis=1, keepdims=True)
        yield block
        remaining -= take


def sample_directions(plan: ProjectionPlan) -> np.ndarray:
    """Draw L unit vectors uniformly on the sphere S^{d-1}.

    Rows are independent standard-normal vectors scaled to unit norm,
    the standard rotation-invariant construction.  Deterministic in the
    plan seed.

    Examples
    --------
    >>> t = sample_directions(ProjectionPlan(3, 5, seed=42))
    >>> t.shape
    (3, 5)
    >>> bool(np.allclose(np.linalg.norm(t, axis=1), 1.0, atol=1e-12))
    True
    >>> np.array_equal(t, sample_directions(ProjectionPlan(3, 5, seed=42)))
    True
    """
    return np.concatenate(list(_direction_chunks(plan, DEFAULT_CHUNK)), axis=0)


def _as_clean_1d(v, name: str) -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64).ravel()
    if arr.size == 0:
        raise ArityError(f"{name} must be nonempty")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains NaN or Inf")
    return arr


def _merged_quantile_indices(n: int, m: int):
    """Breakpoints of the merged empirical quantile grid and, per segment,
    the order-statistic index each side's quantile function takes there.

    Levels i/n and j/m that coincide as rationals coincide bit-exactly in
    floating point (both are correctly rounded), so the union has no
    spurious near-duplicate segments.
    """
    levels = np.union1d(np.arange(1, n + 1) / n, np.arange(1, m + 1) / m)
    edges = np.concatenate(([0.0], levels))
    widths = np.diff(edges)
    mids = (edges[:-1] + edges[1:]) / 2.0
    ix = np.minimum((mids * n).astype(np.int64), n - 1)
    iy = np.minimum((mids * m).astype(np.int64), m - 1)
    return widths, ix, iy


def w2_squared_1d(x, y) -> float:
    """Exact squared 2-Wasserstein distance between two 1D empirical measures.

    Both inputs carry uniform weights.  For equal sizes N the optimal
    coupling pairs order statistics, giving (1/N) sum_i (x_(i) - y_(i))^2.
    For unequal sizes the distance is integrated in closed form over the
    merged quantile breakpoints of the two empirical CDFs; the equal-size
    formula is the exact special case.  Symmetric in its arguments.

    Examples
    --------
    >>> w2_squared_1d([0.0, 1.0], [0.0, 1.0])
    0.0
    >>> w2_squared_1d([0.0], [3.0])
    9.0
    >>> w2_squared_1d([0.0, 2.0], [1.0, 3.0])
    1.0
    >>> w2_squared_1d([0.0], [0.0, 3.0])  # mass 1/2 moves by 3
    4.5
    """
    xs = np.sort(_as_clean_1d(x, "x"))
    ys = np.sort(_as_clean_1d(y, "y"))
    n, m = xs.size, ys.size
    if n == m:
        return float(np.mean((xs - ys) ** 2))
    widths, ix, iy = _merged_quantile_indices(n, m)
    return float(np.dot(widths, (xs[ix] - ys[iy]) ** 2))


def _chunk_costs(proj_a: np.ndarray, proj_b: np.ndarray,
                 widths, ix, iy) -> np.ndarray:
    """Per-direction 1D squared transport costs for one direction block.

    proj_a is (N, c): one column per direction. Sorting along axis 0 gives
    the order statistics of every projection at once.
    """
    pa = np.sort(proj_a, axis=0)
    pb = np.sort(proj_b, axis=0)
    if widths is None:
        return np.mean((pa - pb) ** 2, axis=0)
    return widths @ (pa[ix, :] - pb[iy, :]) ** 2


def swd_squared(a: EmbeddingSet, b: EmbeddingSet, plan: ProjectionPlan,
                *, chunk_size: int = DEFAULT_CHUNK, workers: int = 1,
                keep_per_direction: bool = False) -> SwdResult:
    """Monte Carlo estimate of the squared sliced 2-Wasserstein distance.

    Computes (1/L) sum_l w2(a theta_l, b theta_l)^2 over the plan's L
    directions.  Directions are generated in blocks from a single PRNG
    stream and the per-direction costs are summed with an exactly rounded
    reduction, so the result is bit-identical for a fixed seed regardless
    of ``chunk_size`` or ``workers``.  Worker threads only parallelize
    the projection and sorting work of in-flight blocks.
    """
    if a.d != b.d:
        raise ShapeError(f"dimension mismatch: a has d={a.d}, b has d={b.d}")
    if plan.dim != a.d:
        raise ShapeError(f"plan is for d={plan.dim}, data has d={a.d}")
    if chunk_size < 1:
        raise ShapeError("chunk_size must be >= 1")
    workers = max(1, int(workers))

    if a.n == b.n:
        widths = ix = iy = None
    else:
        widths, ix, iy = _merged_quantile_indices(a.n, b.n)

    xa, xb = a.data, b.data
    chunk_results: list[np.ndarray] = []

    def job(dirs: np.ndarray) -> np.ndarray:
        return _chunk_costs(xa @ dirs.T, xb @ dirs.T, widths, ix, iy)

    if workers == 1:
        for dirs in _direction_chunks(plan, chunk_size):
            chunk_results.append(job(dirs))
    else:
        # Bounded pipeline: at most `workers` blocks in flight, results
        # collected in submission order so the reduction stays ordered.
        with ThreadPoolExecutor(max_workers=workers) as pool:
            pending = []
            for dirs in _direction_chunks(plan, chunk_size):
                pending.append(pool.submit(job, dirs))
                if len(pending) > workers:
                    chunk_results.append(pending.pop(0).result())
            for fut in pending:
                chunk_results.append(fut.result())

    per_dir = np.concatenate(chunk_results)
    # Exactly rounded sum: independent of how directions were chunked.
    value = math.fsum(per_dir) / plan.num_directions
    if not keep_per_direction:
        per_dir = None
    return SwdResult(value=value, plan=plan, per_direction_values=per_dir)


def plan_projections(q: BoundQuery) -> int:
    """Number of directions sufficient for tolerance tau at confidence 1-delta.

    Evaluates ceil((2 D^4 / tau^2) * (2 k ln(8 C D^2 / tau) - ln(delta/2)))
    for data on a k-dimensional manifold of diameter D with curvature
    constant C.  Natural logarithms.  Requires 8 C D^2 / tau > 1 so the
    bound is positive; a larger tolerance has no finite requirement here.

    Examples
    --------
    >>> plan_projections(BoundQuery(intrinsic_dim=4, diameter=2.0,
    ...                             tolerance=0.5, failure_prob=0.05))
    4731
    """
    log_arg = 8.0 * q.curvature_const * q.diameter ** 2 / q.tolerance
    if log_arg <= 1.0:
        raise DomainError(
            "tolerance is too large relative to C*D^2: "
            f"8*C*D^2/tau = {log_arg:.6g} must exceed 1")
    interior = 2.0 * q.intrinsic_dim * math.log(log_arg) - math.log(q.failure_prob / 2.0)
    if interior <= 0:
        raise DomainError("bound interior is nonpositive; tolerance too large")
    return math.ceil(2.0 * q.diameter ** 4 / q.tolerance ** 2 * interior)


@dataclass(frozen=True)
class AblationRow:
    num_directions: int
    mean_value: float
    std_value: float
    wall_time_s: float


def repeat_seed(base_seed: int, repeat: int) -> int:
    """Well-mixed 64-bit seed for one repeat of a seeded experiment."""
    ss = np.random.SeedSequence([int(base_seed) & 0xFFFFFFFFFFFFFFFF, int(repeat)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def ablate_projections(a: EmbeddingSet, b: EmbeddingSet,
                       l_grid=ABLATION_GRID, seeds=ABLATION_SEEDS,
                       base_seed: int = 0, *, chunk_size: int = DEFAULT_CHUNK,
                       workers: int = 1) -> list[AblationRow]:
    """Estimator mean, spread, and cost as the direction count grows.

    For each L in the grid, runs swd_squared once per seed (each repeat's
    direction seed derived from base_seed and the repeat label) and
    reports mean, sample standard deviation (0 for a single seed), and
    total wall-clock time across the repeats.
    """
    l_grid = [int(L) for L in l_grid]
    seeds = list(seeds)
    if not l_grid:
        raise ArityError("direction-count grid must be nonempty")
    if not seeds:
        raise ArityError("seed list must be nonempty")
    rows = []
    for L in l_grid:
        t0 = time.perf_counter()
        vals = np.array([
            swd_squared(a, b, ProjectionPlan(L, a.d, repeat_seed(base_seed, s)),
                        chunk_size=chunk_size, workers=workers).value
            for s in seeds
        ])
        elapsed = time.perf_counter() - t0
        std = float(np.std(vals, ddof=1)) if len(seeds) > 1 else 0.0
        rows.append(AblationRow(L, float(np.mean(vals)), std, elapsed))
    return rows
