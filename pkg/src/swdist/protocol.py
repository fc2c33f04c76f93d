"""Evaluation statistics for embedding-space distances.

A metric here is any callable taking two embedding sets and returning a
real number.  The module measures how such a metric behaves along four
axes: response to increasing degradation severity, stability across
random subsamples, consistency of relative response across datasets, and
agreement with human mean-opinion scores.  Nothing in this module knows
which metric it is driving.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .embed_io import EmbeddingSet, random_splits
from .errors import (
    ArityError,
    CapacityError,
    ConstantInputError,
    CoverageError,
    DataError,
    ShapeError,
)

SIGNAL_FLOOR = 1e-12
DEFAULT_PERMUTATIONS = 10000
# A coefficient of variation is meaningless when the mean is this close
# to zero relative to its own standard error.
CV_UNRELIABLE_FACTOR = 10.0


@dataclass(frozen=True)
class MetricResult:
    """One metric evaluation with enough context to reproduce it."""

    metric_id: str
    value: float
    config: dict
    n: int
    m: int

    def __post_init__(self):
        if not self.metric_id:
            raise DataError("metric_id must be nonempty")
        try:
            json.dumps(self.config, sort_keys=True)
        except (TypeError, ValueError) as exc:
            raise DataError(f"config is not serializable: {exc}") from exc


@dataclass(frozen=True)
class DegradationCurve:
    """Metric response along one degradation family of one dataset.

    ``violations`` lists (index, relative decrease) for every severity
    step where the raw response moved down instead of up.
    """

    dataset_id: str
    degradation: str
    severities: tuple
    raw: tuple
    normalized: tuple
    violations: tuple

    def __post_init__(self):
        if not (len(self.severities) == len(self.raw) == len(self.normalized)):
            raise ShapeError("severities, raw, and normalized must align")
        if self.normalized and not all(-1e-12 <= v <= 1 + 1e-12 for v in self.normalized):
            raise DataError("normalized values must lie in [0, 1]")


@dataclass(frozen=True)
class StabilityReport:
    """Finite-sample behavior of a metric on repeated subsample pairs."""

    dataset_k: str
    dataset_j: str
    bias: float
    sigma: float
    cv: float
    r: int
    per_split: tuple
    cv_unreliable: bool = field(default=False)

    def __post_init__(self):
        if len(self.per_split) != self.r:
            raise ShapeError("per-split values must have one entry per repetition")
        if abs(self.bias - np.mean(self.per_split)) > 1e-9 * max(1.0, abs(self.bias)):
            raise DataError("bias does not match the mean of per-split values")


@dataclass(frozen=True)
class ConsistencyReport:
    """Cross-dataset agreement of degradation responses.

    ``log_ratios`` maps (dataset_j, dataset_k, degradation, severity),
    with j < k lexicographically, to log2 of the response ratio.
    """

    log_ratios: dict
    lambda_mean_abs: float
    interaction_vars: dict
    mean_interaction: float


@dataclass(frozen=True)
class RefinementCurve:
    """Metric trajectory of generator snapshots against a fixed real set."""

    timesteps: tuple
    values: tuple
    metric_id: str = ""

    def __post_init__(self):
        if len(self.timesteps) != len(self.values):
            raise ShapeError("timesteps and values must align")
        ts = self.timesteps
        if any(ts[i] >= ts[i + 1] for i in range(len(ts) - 1)):
            raise DataError("timesteps must be strictly increasing")


@dataclass(frozen=True)
class CorrelationReport:
    spearman: float
    kendall: float
    p_spearman: float
    p_kendall: float
    n_conditions: int


# --------------------------------------------------------------------------
# degradation response


def minmax_normalize(values) -> np.ndarray:
    """Rescale to [0, 1] by (x - min) / (max - min); constant input maps to 0."""
    v = np.asarray(values, dtype=np.float64)
    lo, hi = v.min(), v.max()
    if hi == lo:
        return np.zeros_like(v)
    return (v - lo) / (hi - lo)


def degradation_curve(metric, clean: EmbeddingSet, degraded,
                      dataset_id: str = "", degradation: str = "",
                      severities=None) -> DegradationCurve:
    """Evaluate a metric between each degraded set and the clean set.

    ``degraded`` is ordered by increasing severity.  A well-behaved metric
    should respond monotonically; every step downward is recorded as a
    violation with its relative decrease (relative to the previous raw
    value, or infinite if that value was 0).
    """
    degraded = list(degraded)
    if not degraded:
        raise ArityError("need at least one degraded set")
    if severities is None:
        severities = tuple(range(1, len(degraded) + 1))
    severities = tuple(severities)
    if len(severities) != len(degraded):
        raise ShapeError("one severity label per degraded set")
    raw = [float(metric(d, clean)) for d in degraded]
    violations = []
    for i in range(1, len(raw)):
        if raw[i] < raw[i - 1]:
            prev = raw[i - 1]
            rel = (prev - raw[i]) / prev if prev != 0 else math.inf
            violations.append((i, rel))
    return DegradationCurve(
        dataset_id=dataset_id,
        degradation=degradation,
        severities=severities,
        raw=tuple(raw),
        normalized=tuple(minmax_normalize(raw).tolist()),
        violations=tuple(violations),
    )


def degradation_rows(curve: DegradationCurve, metric_id: str) -> list[dict]:
    """Flatten a curve to rows with the stable report column set."""
    by_index = dict(curve.violations)
    rows = []
    for i, s in enumerate(curve.severities):
        pct = by_index.get(i, 0.0)
        rows.append({
            "dataset": curve.dataset_id,
            "degradation": curve.degradation,
            "severity": s,
            "metric": metric_id,
            "value": curve.raw[i],
            "normalized": curve.normalized[i],
            "violation_pct": 100.0 * pct if math.isfinite(pct) else math.inf,
        })
    return rows


# --------------------------------------------------------------------------
# finite-sample stability


def finite_sample_bias(metric, set_k: EmbeddingSet, set_j: EmbeddingSet,
                       r: int, half_size: int, seed: int) -> StabilityReport:
    """Metric mean, spread, and CV over r random subsample pairs.

    When both arguments are the same set, each repetition compares two
    disjoint halves of it (the within-dataset null, where an unbiased
    metric should average 0).  For distinct sets, each repetition draws
    half_size rows independently from each side; draws are fresh per
    repetition and fully determined by (seed, repetition).
    """
    if r < 1:
        raise ArityError("need at least one repetition")
    same = set_k is set_j or set_k.data is set_j.data
    values = []
    if same:
        for pair in random_splits(set_k, r, half_size, seed):
            a = EmbeddingSet(set_k.data[pair.a_indices], set_k.dataset_id,
                             set_k.backbone_id)
            b = EmbeddingSet(set_k.data[pair.b_indices], set_k.dataset_id,
                             set_k.backbone_id)
            values.append(float(metric(a, b)))
    else:
        if half_size < 1:
            raise ArityError("half_size must be at least 1")
        if half_size > set_k.n or half_size > set_j.n:
            raise CapacityError(
                f"cannot draw {half_size} rows from sets of {set_k.n} and {set_j.n}")
        for i in range(r):
            rng = np.random.default_rng([seed & 0xFFFFFFFFFFFFFFFF, i])
            ia = rng.choice(set_k.n, size=half_size, replace=False)
            ib = rng.choice(set_j.n, size=half_size, replace=False)
            a = EmbeddingSet(set_k.data[ia], set_k.dataset_id, set_k.backbone_id)
            b = EmbeddingSet(set_j.data[ib], set_j.dataset_id, set_j.backbone_id)
            values.append(float(metric(a, b)))
    vals = np.asarray(values)
    bias = float(vals.mean())
    sigma = float(vals.std(ddof=1)) if r > 1 else 0.0
    if sigma == 0.0:
        cv = 0.0
    elif bias == 0.0:
        cv = math.inf
    else:
        cv = sigma / abs(bias)
    unreliable = abs(bias) < CV_UNRELIABLE_FACTOR * sigma / math.sqrt(r)
    return StabilityReport(
        dataset_k=set_k.dataset_id, dataset_j=set_j.dataset_id,
        bias=bias, sigma=sigma, cv=cv, r=r, per_split=tuple(values),
        cv_unreliable=unreliable,
    )


# --------------------------------------------------------------------------
# cross-dataset consistency


def consistency(signals: dict) -> ConsistencyReport:
    """Pairwise log2 response ratios across datasets on a shared grid.

    ``signals`` maps (dataset, degradation, severity) to a positive raw
    response.  Every dataset must cover the full degradation x severity
    grid.  Nonpositive responses are floored at 1e-12 with a warning.
    Single-cell grids have zero interaction variance by convention.
    """
    datasets = sorted({k[0] for k in signals})
    taus = sorted({k[1] for k in signals})
    sevs = sorted({k[2] for k in signals})
    if len(datasets) < 2:
        raise ArityError("consistency needs at least two datasets")
    cells = [(t, s) for t in taus for s in sevs]
    missing = [(d, t, s) for d in datasets for (t, s) in cells
               if (d, t, s) not in signals]
    if missing:
        raise CoverageError(f"incomplete signal grid, missing {missing[:5]}"
                            + ("..." if len(missing) > 5 else ""))

    def floored(key):
        v = signals[key]
        if v <= 0:
            warnings.warn(f"nonpositive signal {v!r} at {key}; floored at {SIGNAL_FLOOR}")
            return SIGNAL_FLOOR
        return float(v)

    log_ratios = {}
    interaction_vars = {}
    for a in range(len(datasets)):
        for b in range(a + 1, len(datasets)):
            dj, dk = datasets[a], datasets[b]
            pair_vals = []
            for (t, s) in cells:
                l = math.log2(floored((dj, t, s)) / floored((dk, t, s)))
                log_ratios[(dj, dk, t, s)] = l
                pair_vals.append(l)
            interaction_vars[(dj, dk)] = (
                float(np.var(pair_vals, ddof=1)) if len(pair_vals) > 1 else 0.0)

    m_expected = len(taus) * len(sevs) * len(datasets) * (len(datasets) - 1) // 2
    assert len(log_ratios) == m_expected
    lam = float(np.mean([abs(v) for v in log_ratios.values()]))
    v_m = float(np.mean(list(interaction_vars.values())))
    return ConsistencyReport(
        log_ratios=log_ratios, lambda_mean_abs=lam,
        interaction_vars=interaction_vars, mean_interaction=v_m,
    )


# --------------------------------------------------------------------------
# refinement


def refinement_curve(metric, real_set: EmbeddingSet, snapshots,
                     metric_id: str = "") -> RefinementCurve:
    """Metric value of each generator snapshot against the real set."""
    snapshots = list(snapshots)
    if not snapshots:
        raise ArityError("need at least one snapshot")
    timesteps = tuple(t for t, _ in snapshots)
    values = tuple(float(metric(s, real_set)) for _, s in snapshots)
    return RefinementCurve(timesteps=timesteps, values=values, metric_id=metric_id)


# --------------------------------------------------------------------------
# rank correlation


def _rankdata(v: np.ndarray) -> np.ndarray:
    """Ranks starting at 1 with ties given the average of their positions."""
    v = np.asarray(v, dtype=np.float64)
    order = np.argsort(v, kind="stable")
    ranks = np.empty(v.size, dtype=np.float64)
    ranks[order] = np.arange(1, v.size + 1)
    # Average the ranks within each tie group.
    sv = v[order]
    i = 0
    while i < v.size:
        j = i
        while j + 1 < v.size and sv[j + 1] == sv[i]:
            j += 1
        if j > i:
            ranks[order[i:j + 1]] = (i + 1 + j + 1) / 2.0
        i = j + 1
    return ranks


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    ac = a - a.mean()
    bc = b - b.mean()
    denom = math.sqrt(float(ac @ ac) * float(bc @ bc))
    if denom == 0:
        raise ConstantInputError("correlation undefined for constant input")
    return float(ac @ bc) / denom


def _kendall_parts(a: np.ndarray, b: np.ndarray):
    """Sign vectors over i<j pairs plus the tie-corrected denominator."""
    n = a.size
    iu, ju = np.triu_indices(n, k=1)
    sa = np.sign(a[iu] - a[ju])
    sb = np.sign(b[iu] - b[ju])
    n0 = n * (n - 1) / 2.0
    n1 = float(np.sum(sa == 0))
    n2 = float(np.sum(sb == 0))
    denom = math.sqrt((n0 - n1) * (n0 - n2))
    if denom == 0:
        raise ConstantInputError("rank correlation undefined for constant input")
    return sa, sb, denom, iu, ju


def rank_correlation(human, predicted, permutations: int = DEFAULT_PERMUTATIONS,
                     seed: int = 0) -> CorrelationReport:
    """Spearman and Kendall agreement with permutation p-values.

    Spearman rho is the Pearson correlation of tie-averaged ranks; Kendall
    is the tau-b variant (tie-corrected).  Two-sided p-values count seeded
    permutations of the predicted list whose |statistic| reaches the
    observed one, smoothed as (1 + count) / (1 + permutations).

    Examples
    --------
    >>> r = rank_correlation([1, 2, 3, 4], [1, 3, 2, 4], permutations=200)
    >>> round(r.spearman, 10), round(r.kendall, 10)
    (0.8, 0.6666666667)
    """
    h = np.asarray(human, dtype=np.float64)
    p = np.asarray(predicted, dtype=np.float64)
    if h.size != p.size:
        raise ArityError(f"length mismatch: {h.size} vs {p.size}")
    if h.size < 3:
        raise ArityError(f"need at least 3 conditions, got {h.size}")
    if not (np.all(np.isfinite(h)) and np.all(np.isfinite(p))):
        raise DataError("scores contain NaN or Inf")
    if permutations < 1:
        raise ArityError("need at least one permutation")

    rh = _rankdata(h)
    rp = _rankdata(p)
    rho = _pearson(rh, rp)
    sa, sb, denom, iu, ju = _kendall_parts(h, p)
    tau = float(np.sum(sa * sb)) / denom

    # Permutation null: shuffle the predicted side, keep the human side.
    rng = np.random.default_rng(seed)
    rh_c = rh - rh.mean()
    rp_c = rp - rp.mean()
    rho_scale = math.sqrt(float(rh_c @ rh_c) * float(rp_c @ rp_c))
    sb_matrix = np.sign(p[:, None] - p[None, :])
    count_rho = 0
    count_tau = 0
    for _ in range(permutations):
        perm = rng.permutation(h.size)
        rho_perm = float(rh_c @ rp_c[perm]) / rho_scale
        if abs(rho_perm) >= abs(rho) - 1e-12:
            count_rho += 1
        tau_perm = float(np.sum(sa * sb_matrix[perm[iu], perm[ju]])) / denom
        if abs(tau_perm) >= abs(tau) - 1e-12:
            count_tau += 1
    p_rho = (1 + count_rho) / (1 + permutations)
    p_tau = (1 + count_tau) / (1 + permutations)
    return CorrelationReport(spearman=rho, kendall=tau, p_spearman=p_rho,
                             p_kendall=p_tau, n_conditions=int(h.size))


def mos_aggregate(ratings: dict) -> dict:
    """Mean opinion score per condition from integer ratings in 1..5."""
    out = {}
    for cond, scores in ratings.items():
        scores = list(scores)
        if not scores:
            raise ArityError(f"no ratings for condition {cond!r}")
        for s in scores:
            if int(s) != s or not (1 <= int(s) <= 5):
                raise DataError(f"rating {s!r} for {cond!r} outside 1..5")
        out[cond] = float(np.mean([int(s) for s in scores]))
    return out
