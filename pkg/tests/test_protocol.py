"""Degradation curves, stability and consistency statistics, rank tests."""

import math

import numpy as np
import pytest
import scipy.stats

from swdist.embed_io import EmbeddingSet
from swdist.errors import (
    ArityError,
    CapacityError,
    ConstantInputError,
    CoverageError,
    DataError,
    ShapeError,
)
from swdist.protocol import (
    CorrelationReport,
    DegradationCurve,
    MetricResult,
    RefinementCurve,
    StabilityReport,
    consistency,
    degradation_curve,
    degradation_rows,
    finite_sample_bias,
    minmax_normalize,
    mos_aggregate,
    rank_correlation,
    refinement_curve,
)
from swdist.sliced_ot import ProjectionPlan, swd_squared


def scripted_metric(values):
    # Returns the given values in call order, whatever the inputs.
    it = iter(values)
    return lambda a, b: next(it)


def toy_sets(k, n=8, d=3, seed=0):
    rng = np.random.default_rng(seed)
    return [EmbeddingSet(rng.standard_normal((n, d))) for _ in range(k)]


# --------------------------------------------------------------------------
# degradation curves


def test_curve_constant_raw():
    clean, d1, d2, d3 = toy_sets(4)
    c = degradation_curve(scripted_metric([2.0, 2.0, 2.0]), clean, [d1, d2, d3])
    assert c.raw == (2.0, 2.0, 2.0)
    assert c.normalized == (0.0, 0.0, 0.0)
    assert c.violations == ()


def test_curve_minmax():
    clean, d1, d2, d3 = toy_sets(4)
    c = degradation_curve(scripted_metric([1.0, 2.0, 4.0]), clean, [d1, d2, d3],
                          dataset_id="ds", degradation="blur")
    assert c.normalized == pytest.approx((0.0, 1.0 / 3.0, 1.0))
    assert c.violations == ()
    assert c.severities == (1, 2, 3)


def test_curve_violation():
    clean, d1, d2, d3 = toy_sets(4)
    c = degradation_curve(scripted_metric([1.0, 3.0, 2.0]), clean, [d1, d2, d3])
    assert len(c.violations) == 1
    idx, rel = c.violations[0]
    assert idx == 2
    assert rel == pytest.approx(1.0 / 3.0)


def test_curve_severity_labels_and_errors():
    clean, d1 = toy_sets(2)
    c = degradation_curve(scripted_metric([1.0]), clean, [d1], severities=[0.5])
    assert c.severities == (0.5,)
    with pytest.raises(ArityError):
        degradation_curve(scripted_metric([]), clean, [])
    with pytest.raises(ShapeError):
        degradation_curve(scripted_metric([1.0]), clean, [d1], severities=[1, 2])


def test_curve_rows_columns():
    clean, d1, d2, d3 = toy_sets(4)
    c = degradation_curve(scripted_metric([1.0, 3.0, 2.0]), clean, [d1, d2, d3],
                          dataset_id="ds", degradation="noise")
    rows = degradation_rows(c, "swd")
    assert [set(r) for r in rows] == [
        {"dataset", "degradation", "severity", "metric", "value",
         "normalized", "violation_pct"}] * 3
    assert rows[0]["violation_pct"] == 0.0
    assert rows[2]["violation_pct"] == pytest.approx(100.0 / 3.0)
    assert rows[1]["metric"] == "swd"
    assert rows[1]["value"] == 3.0


def test_minmax_normalize_range():
    v = minmax_normalize([3.0, -1.0, 5.0])
    assert v.min() == 0.0 and v.max() == 1.0
    assert np.all(minmax_normalize([2.0, 2.0]) == 0.0)


def test_curve_type_validation():
    with pytest.raises(ShapeError):
        DegradationCurve("d", "t", (1, 2), (1.0,), (0.0,), ())
    with pytest.raises(DataError):
        DegradationCurve("d", "t", (1,), (1.0,), (2.0,), ())


# --------------------------------------------------------------------------
# finite-sample stability


def test_bias_constant_metric():
    (x,) = toy_sets(1, n=20)
    rep = finite_sample_bias(lambda a, b: 7.0, x, x, r=5, half_size=8, seed=1)
    assert rep.bias == 7.0
    assert rep.sigma == 0.0
    assert rep.cv == 0.0
    assert not rep.cv_unreliable
    assert rep.r == 5 and len(rep.per_split) == 5


def test_bias_hand_values():
    (x,) = toy_sets(1, n=20)
    rep = finite_sample_bias(scripted_metric([1.0, 3.0]), x, x, r=2, half_size=8, seed=1)
    assert rep.bias == 2.0
    assert rep.sigma == pytest.approx(math.sqrt(2.0))
    assert rep.cv == pytest.approx(math.sqrt(2.0) / 2.0)
    # mean is within 10 standard errors of zero, so the CV is flagged
    assert rep.cv_unreliable


def test_bias_intra_uses_disjoint_halves():
    (x,) = toy_sets(1, n=10)
    seen = []
    def metric(a, b):
        seen.append((a.data, b.data))
        return 0.0
    finite_sample_bias(metric, x, x, r=3, half_size=5, seed=2)
    for a, b in seen:
        rows_a = {tuple(r) for r in a}
        rows_b = {tuple(r) for r in b}
        assert not rows_a & rows_b
        assert len(rows_a) == len(rows_b) == 5


def test_bias_deterministic_and_seed_sensitive():
    (x,) = toy_sets(1, n=60, d=4)
    metric = lambda a, b: swd_squared(a, b, ProjectionPlan(16, 4, seed=0)).value
    r1 = finite_sample_bias(metric, x, x, r=4, half_size=20, seed=9)
    r2 = finite_sample_bias(metric, x, x, r=4, half_size=20, seed=9)
    r3 = finite_sample_bias(metric, x, x, r=4, half_size=20, seed=10)
    assert r1.per_split == r2.per_split
    assert r1.per_split != r3.per_split


def test_bias_cross_dataset_draws():
    x, y = toy_sets(2, n=12)
    y2 = EmbeddingSet(y.data[:9])
    rep = finite_sample_bias(lambda a, b: float(a.n + b.n), x, y2, r=2,
                             half_size=9, seed=0)
    assert rep.per_split == (18.0, 18.0)
    with pytest.raises(CapacityError):
        finite_sample_bias(lambda a, b: 0.0, x, y2, r=2, half_size=10, seed=0)


def test_bias_intra_capacity():
    (x,) = toy_sets(1, n=10)
    with pytest.raises(CapacityError):
        finite_sample_bias(lambda a, b: 0.0, x, x, r=1, half_size=6, seed=0)


def test_cv_scale_invariance():
    (x,) = toy_sets(1, n=40, d=4, seed=5)
    metric = lambda a, b: swd_squared(a, b, ProjectionPlan(8, 4, seed=1)).value
    scaled = lambda a, b: 37.0 * metric(a, b)
    r1 = finite_sample_bias(metric, x, x, r=6, half_size=15, seed=3)
    r2 = finite_sample_bias(scaled, x, x, r=6, half_size=15, seed=3)
    assert r1.cv == pytest.approx(r2.cv, rel=1e-12)


def test_stability_report_validation():
    with pytest.raises(DataError):
        StabilityReport("a", "b", bias=5.0, sigma=0.0, cv=0.0, r=2,
                        per_split=(1.0, 1.0))
    with pytest.raises(ShapeError):
        StabilityReport("a", "b", bias=1.0, sigma=0.0, cv=0.0, r=3,
                        per_split=(1.0, 1.0))


# --------------------------------------------------------------------------
# cross-dataset consistency


def test_consistency_constant_ratio():
    sig = {}
    for t in ("blur",):
        for s in (1, 2):
            sig[("a", t, s)] = 2.0 * (s + 1)
            sig[("b", t, s)] = 1.0 * (s + 1)
    rep = consistency(sig)
    assert rep.lambda_mean_abs == pytest.approx(1.0)
    assert rep.interaction_vars[("a", "b")] == pytest.approx(0.0)
    assert rep.mean_interaction == pytest.approx(0.0)


def test_consistency_identical_signals():
    sig = {(d, "blur", s): 1.5 + s for d in ("a", "b", "c") for s in (1, 2, 3)}
    rep = consistency(sig)
    assert rep.lambda_mean_abs == 0.0
    assert len(rep.log_ratios) == 1 * 3 * 3  # |T| |S| C(3,2)


def test_consistency_hand_values():
    # ratios {2, 8} -> log2 values {1, 3}: mean |L| = 2, Var (n-1) = 2
    sig = {("a", "t", 1): 2.0, ("a", "t", 2): 8.0,
           ("b", "t", 1): 1.0, ("b", "t", 2): 1.0}
    rep = consistency(sig)
    assert rep.log_ratios[("a", "b", "t", 1)] == pytest.approx(1.0)
    assert rep.log_ratios[("a", "b", "t", 2)] == pytest.approx(3.0)
    assert rep.lambda_mean_abs == pytest.approx(2.0)
    assert rep.interaction_vars[("a", "b")] == pytest.approx(2.0)
    assert rep.mean_interaction == pytest.approx(2.0)


def test_consistency_scale_equivariance():
    rng = np.random.default_rng(6)
    sig = {(d, t, s): float(rng.uniform(0.5, 4.0))
           for d in ("a", "b") for t in ("x", "y") for s in (1, 2, 3)}
    rep = consistency(sig)
    c = 5.0
    scaled = {k: (v * c if k[0] == "a" else v) for k, v in sig.items()}
    rep2 = consistency(scaled)
    for key, l in rep.log_ratios.items():
        assert rep2.log_ratios[key] == pytest.approx(l + math.log2(c), rel=1e-9)
    assert rep2.interaction_vars[("a", "b")] == pytest.approx(
        rep.interaction_vars[("a", "b")], rel=1e-9)


def test_consistency_coverage_errors():
    sig = {("a", "t", 1): 1.0, ("a", "t", 2): 2.0, ("b", "t", 1): 1.0}
    with pytest.raises(CoverageError):
        consistency(sig)
    with pytest.raises(ArityError):
        consistency({("a", "t", 1): 1.0})


def test_consistency_floors_nonpositive():
    sig = {("a", "t", 1): 0.0, ("b", "t", 1): 1.0}
    with pytest.warns(UserWarning):
        rep = consistency(sig)
    assert rep.log_ratios[("a", "b", "t", 1)] == pytest.approx(math.log2(1e-12))


# --------------------------------------------------------------------------
# refinement


def _swd_metric(d, L=64, seed=0):
    plan = ProjectionPlan(L, d, seed)
    return lambda a, b: swd_squared(a, b, plan).value


def test_refinement_identical_snapshots():
    (real,) = toy_sets(1, n=20, d=3)
    rc = refinement_curve(_swd_metric(3), real, [(1, real), (2, real)])
    assert rc.values == (0.0, 0.0)
    assert rc.timesteps == (1, 2)


def test_refinement_interpolation_decreases():
    rng = np.random.default_rng(7)
    base = rng.standard_normal((64, 3))
    real = EmbeddingSet(base)
    offset = np.array([4.0, -3.0, 2.0])
    snaps = []
    for i, t in enumerate((0.25, 0.5, 0.75, 1.0)):
        snaps.append((t, EmbeddingSet(base + (1.0 - t) * offset)))
    rc = refinement_curve(_swd_metric(3), real, snaps, metric_id="swd")
    assert all(rc.values[i] > rc.values[i + 1] for i in range(3))
    assert rc.values[-1] == 0.0
    assert rc.metric_id == "swd"


def test_refinement_single_snapshot_and_errors():
    (real, other) = toy_sets(2, n=10)
    rc = refinement_curve(_swd_metric(3), real, [(5, other)])
    assert len(rc.values) == 1
    with pytest.raises(DataError):
        refinement_curve(_swd_metric(3), real, [(2, other), (2, other)])
    with pytest.raises(ArityError):
        refinement_curve(_swd_metric(3), real, [])
    with pytest.raises(ShapeError):
        RefinementCurve(timesteps=(1, 2), values=(0.0,))


# --------------------------------------------------------------------------
# rank correlation


def test_rank_correlation_hand_values():
    rep = rank_correlation([1, 2, 3, 4], [1, 3, 2, 4], permutations=100, seed=0)
    assert rep.spearman == pytest.approx(0.8)
    assert rep.kendall == pytest.approx(2.0 / 3.0)
    assert rep.n_conditions == 4


def test_rank_correlation_perfect_and_reversed():
    h = [1.0, 2.0, 3.0, 4.0, 5.0]
    rep = rank_correlation(h, [2.0, 4.0, 5.0, 7.0, 11.0], permutations=100, seed=0)
    assert rep.spearman == pytest.approx(1.0)
    assert rep.kendall == pytest.approx(1.0)
    rep = rank_correlation(h, [5.0, 4.0, 3.0, 2.0, 1.0], permutations=100, seed=0)
    assert rep.spearman == pytest.approx(-1.0)
    assert rep.kendall == pytest.approx(-1.0)


def test_rank_correlation_monotone_invariance():
    rng = np.random.default_rng(8)
    h = rng.standard_normal(12)
    p = rng.standard_normal(12)
    base = rank_correlation(h, p, permutations=50, seed=0)
    warped = rank_correlation(np.exp(h), p ** 3, permutations=50, seed=0)
    assert warped.spearman == pytest.approx(base.spearman, rel=1e-12)
    assert warped.kendall == pytest.approx(base.kendall, rel=1e-12)


def test_rank_correlation_matches_scipy_with_ties():
    rng = np.random.default_rng(9)
    for _ in range(5):
        h = rng.integers(1, 6, size=15).astype(float)  # tied scores
        p = rng.standard_normal(15).round(1)
        if len(set(h)) < 2 or len(set(p)) < 2:
            continue
        rep = rank_correlation(h, p, permutations=10, seed=0)
        rho_ref = scipy.stats.spearmanr(h, p).statistic
        tau_ref = scipy.stats.kendalltau(h, p).statistic
        assert rep.spearman == pytest.approx(rho_ref, abs=1e-10)
        assert rep.kendall == pytest.approx(tau_ref, abs=1e-10)


def test_rank_correlation_p_values():
    h = list(range(10))
    p = [x + 0.1 for x in range(10)]
    rep = rank_correlation(h, p, permutations=999, seed=1)
    assert 0.0 < rep.p_spearman <= 0.05
    assert 0.0 < rep.p_kendall <= 0.05
    rep2 = rank_correlation(h, p, permutations=999, seed=1)
    assert (rep.p_spearman, rep.p_kendall) == (rep2.p_spearman, rep2.p_kendall)
    # +1 smoothing keeps p strictly above zero and at most 1
    assert rep.p_spearman >= 1.0 / 1000.0


def test_rank_correlation_errors():
    with pytest.raises(ArityError):
        rank_correlation([1, 2, 3], [1, 2], permutations=10)
    with pytest.raises(ArityError):
        rank_correlation([1, 2], [1, 2], permutations=10)
    with pytest.raises(ConstantInputError):
        rank_correlation([1, 1, 1], [1, 2, 3], permutations=10)
    with pytest.raises(ConstantInputError):
        rank_correlation([1, 2, 3], [2, 2, 2], permutations=10)
    with pytest.raises(DataError):
        rank_correlation([1, 2, np.nan], [1, 2, 3], permutations=10)


# --------------------------------------------------------------------------
# MOS aggregation


def test_mos_aggregate_values():
    out = mos_aggregate({"c1": [3, 3, 3], "c2": [1, 5], "c3": [2, 3, 4, 4]})
    assert out == {"c1": 3.0, "c2": 3.0, "c3": 3.25}


def test_mos_aggregate_errors():
    with pytest.raises(DataError):
        mos_aggregate({"c": [0, 3]})
    with pytest.raises(DataError):
        mos_aggregate({"c": [6]})
    with pytest.raises(DataError):
        mos_aggregate({"c": [2.5]})
    with pytest.raises(ArityError):
        mos_aggregate({"c": []})


def test_metric_result_validation():
    MetricResult("swd", 1.0, {"L": 500}, 10, 10)
    with pytest.raises(DataError):
        MetricResult("", 1.0, {}, 10, 10)
    with pytest.raises(DataError):
        MetricResult("swd", 1.0, {"bad": object()}, 10, 10)
