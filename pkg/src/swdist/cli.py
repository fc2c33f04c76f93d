"""Command-line front end: reproducible batch runs over embedding files.

Subcommands
-----------
compute      one or more metrics between two matrix files, JSON per metric
degradation  response curves over a manifest's degraded conditions
stability    repeated-split bias/CV table per dataset and metric
consistency  cross-dataset log-ratio statistics per metric
ablate       direction-count sweep for the sliced distance
plan         projection-count bound evaluation
correlate    rank agreement between two score columns in a CSV file

All randomness flows from one global seed (flag, config file, or the
SWDIST_SEED environment variable, in that order of precedence).  Output
files are byte-identical across reruns; wall-time fields appear only on
streams, never in files.  Exit codes: 0 success, 2 bad input or usage,
1 internal failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .embed_io import DatasetManifest, EmbeddingSet, load_manifest, load_matrix
from .errors import CoverageError, DataError, SwdistError
from .gaussian_frechet import fid
from .kernel_mmd import (
    CMMD_SIGMA,
    MIXTURE_MULTIPLIERS,
    RbfKernel,
    mmd2_unbiased,
    mmd_rbf_mixture,
    kid,
)
from .protocol import (
    consistency,
    degradation_curve,
    degradation_rows,
    finite_sample_bias,
    rank_correlation,
)
from .sliced_ot import (
    ABLATION_GRID,
    ABLATION_SEEDS,
    BoundQuery,
    DEFAULT_NUM_DIRECTIONS,
    ProjectionPlan,
    ablate_projections,
    plan_projections,
    swd_squared,
)

METRIC_IDS = ("swd", "fid", "kid", "cmmd", "mmd-rbf-mixture")
DEFAULT_R = 20
SEED_ENV_VAR = "SWDIST_SEED"

DEGRADATION_COLUMNS = ("dataset", "degradation", "severity", "metric",
                       "value", "normalized", "violation_pct")
STABILITY_COLUMNS = ("dataset", "metric", "bias", "sigma", "cv",
                     "cv_unreliable", "r")
ABLATE_COLUMNS = ("l", "mean", "std", "runtime_s", "metric", "n", "m",
                  "base_seed")


@dataclass
class RunConfig:
    """Everything a batch run needs; round-trips losslessly through JSON."""

    metrics: dict = field(default_factory=lambda: {"swd": {}})
    manifest: str | None = None
    out_dir: str = "."
    seed: int = 0
    workers: int = 1
    r: int = DEFAULT_R
    half_size: int | None = None

    def __post_init__(self):
        for mid in self.metrics:
            if mid not in METRIC_IDS:
                raise DataError(f"unknown metric {mid!r}; choose from {METRIC_IDS}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise DataError(f"unknown config keys {sorted(unknown)}")
        return cls(**raw)

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise DataError(f"config file {path} must hold a JSON object")
        return cls.from_dict(raw)

    def to_file(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


# --------------------------------------------------------------------------
# metric resolution


def resolve_metric(metric_id: str, params: dict, global_seed: int, workers: int):
    """Build (callable, provenance dict) for one metric selection.

    The callable takes two embedding sets and returns a float; provenance
    echoes every parameter that determines the value.
    """
    params = dict(params)
    if metric_id == "swd":
        l = int(params.pop("l", DEFAULT_NUM_DIRECTIONS))
        seed = int(params.pop("seed", global_seed))
        _reject_extras(metric_id, params)
        prov = {"l": l, "seed": seed}
        def metric(a, b):
            return swd_squared(a, b, ProjectionPlan(l, a.d, seed), workers=workers).value
        return metric, prov
    if metric_id == "fid":
        ridge = float(params.pop("ridge", 0.0))
        _reject_extras(metric_id, params)
        return (lambda a, b: fid(a, b, ridge=ridge)), {"ridge": ridge}
    if metric_id == "kid":
        _reject_extras(metric_id, params)
        return (lambda a, b: kid(a, b).value), {"degree": 3, "coef": 1.0, "gamma": "1/d"}
    if metric_id == "cmmd":
        sigma = float(params.pop("sigma", CMMD_SIGMA))
        _reject_extras(metric_id, params)
        return (lambda a, b: mmd2_unbiased(RbfKernel(sigma), a, b).value), {"sigma": sigma}
    if metric_id == "mmd-rbf-mixture":
        multipliers = tuple(float(m) for m in params.pop("multipliers", MIXTURE_MULTIPLIERS))
        _reject_extras(metric_id, params)
        return (lambda a, b: mmd_rbf_mixture(a, b, multipliers).value), {
            "multipliers": list(multipliers)}
    raise DataError(f"unknown metric {metric_id!r}; choose from {METRIC_IDS}")


def _reject_extras(metric_id: str, leftover: dict) -> None:
    if leftover:
        raise DataError(f"unknown parameters for {metric_id}: {sorted(leftover)}")


# --------------------------------------------------------------------------
# output helpers


def _write_csv(path: Path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row[c]) for c in columns])


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, bool):
        return str(v).lower()
    return v


def _write_json(path: Path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _print_json(payload) -> None:
    print(json.dumps(payload, sort_keys=True))


# --------------------------------------------------------------------------
# manifest grouping


def _effective_datasets(manifest: DatasetManifest) -> dict:
    """Group manifest entries by dataset (split further by backbone).

    Returns {effective id: {condition: [entries sorted by severity]}}.
    """
    groups = {}
    for e in manifest.entries:
        eff = e.dataset if not e.backbone else f"{e.dataset}/{e.backbone}"
        groups.setdefault(eff, {}).setdefault(e.condition, []).append(e)
    for conditions in groups.values():
        for cond, entries in conditions.items():
            entries.sort(key=lambda e: (e.severity is None, e.severity))
    return dict(sorted(groups.items()))


def _load_entry(manifest: DatasetManifest, entry, eff_id: str) -> EmbeddingSet:
    return load_matrix(manifest.resolve(entry), dataset_id=eff_id,
                       backbone_id=entry.backbone)


def _require_clean(conditions: dict, eff_id: str):
    if "clean" not in conditions:
        raise CoverageError(f"dataset {eff_id!r} has no clean condition")
    return conditions["clean"][0]


# --------------------------------------------------------------------------
# subcommands


def cmd_compute(cfg: RunConfig, path_a: str, path_b: str) -> int:
    a = load_matrix(path_a)
    b = load_matrix(path_b)
    records = []
    for mid in sorted(cfg.metrics):
        metric, prov = resolve_metric(mid, cfg.metrics[mid], cfg.seed, cfg.workers)
        t0 = time.perf_counter()
        value = float(metric(a, b))
        wall = time.perf_counter() - t0
        record = {"metric": mid, "value": value, "n": a.n, "m": b.n,
                  "params": prov}
        records.append(record)
        _print_json({**record, "wall_time_s": wall})
    if cfg.out_dir != ".":
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "compute.json", records)
    return 0


def _curves_for_manifest(cfg: RunConfig, manifest: DatasetManifest):
    """One DegradationCurve per (metric, dataset, degradation family)."""
    groups = _effective_datasets(manifest)
    jobs = []
    for mid in sorted(cfg.metrics):
        metric, prov = resolve_metric(mid, cfg.metrics[mid], cfg.seed, cfg.workers)
        for eff_id, conditions in groups.items():
            clean_entry = _require_clean(conditions, eff_id)
            clean = _load_entry(manifest, clean_entry, eff_id)
            for cond in sorted(c for c in conditions if c != "clean"):
                entries = conditions[cond]
                degraded = [_load_entry(manifest, e, eff_id) for e in entries]
                severities = [e.severity if e.severity is not None else i + 1
                              for i, e in enumerate(entries)]
                jobs.append((mid, prov, metric, eff_id, cond, clean,
                             degraded, severities))

    def run(job):
        mid, prov, metric, eff_id, cond, clean, degraded, severities = job
        curve = degradation_curve(metric, clean, degraded, dataset_id=eff_id,
                                  degradation=cond, severities=severities)
        return mid, prov, curve, clean.n, [d.n for d in degraded]

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(j) for j in jobs]
    return results


def cmd_degradation(cfg: RunConfig) -> int:
    if not cfg.manifest:
        raise DataError("degradation requires a manifest (positional or config)")
    manifest = load_manifest(cfg.manifest)
    results = _curves_for_manifest(cfg, manifest)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    curve_records = []
    for mid, prov, curve, n_clean, n_degraded in results:
        rows.extend(degradation_rows(curve, mid))
        curve_records.append({
            "metric": mid,
            "params": prov,
            "dataset": curve.dataset_id,
            "degradation": curve.degradation,
            "severities": list(curve.severities),
            "raw": list(curve.raw),
            "normalized": list(curve.normalized),
            "violations": [{"index": i, "relative_decrease": r}
                           for i, r in curve.violations],
            "n_clean": n_clean,
            "n_degraded": n_degraded,
        })
    _write_csv(out / "degradation.csv", DEGRADATION_COLUMNS, rows)
    _write_json(out / "degradation.json", {"seed": cfg.seed, "curves": curve_records})
    print(f"wrote {len(rows)} rows for {len(curve_records)} curves to {out}")
    return 0


def cmd_stability(cfg: RunConfig) -> int:
    if not cfg.manifest:
        raise DataError("stability requires a manifest (positional or config)")
    manifest = load_manifest(cfg.manifest)
    groups = _effective_datasets(manifest)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    records = []
    for mid in sorted(cfg.metrics):
        metric, prov = resolve_metric(mid, cfg.metrics[mid], cfg.seed, cfg.workers)
        for eff_id, conditions in groups.items():
            clean = _load_entry(manifest, _require_clean(conditions, eff_id), eff_id)
            half = cfg.half_size if cfg.half_size is not None else clean.n // 2
            rep = finite_sample_bias(metric, clean, clean, r=cfg.r,
                                     half_size=half, seed=cfg.seed)
            rows.append({"dataset": eff_id, "metric": mid, "bias": rep.bias,
                         "sigma": rep.sigma, "cv": rep.cv,
                         "cv_unreliable": rep.cv_unreliable, "r": rep.r})
            records.append({"dataset": eff_id, "metric": mid, "params": prov,
                            "bias": rep.bias, "sigma": rep.sigma, "cv": rep.cv,
                            "cv_unreliable": rep.cv_unreliable, "r": rep.r,
                            "half_size": half, "seed": cfg.seed,
                            "per_split": list(rep.per_split), "n": clean.n})
    _write_csv(out / "stability.csv", STABILITY_COLUMNS, rows)
    _write_json(out / "stability.json", {"seed": cfg.seed, "reports": records})
    print(f"wrote {len(rows)} stability rows to {out}")
    return 0


def cmd_consistency(cfg: RunConfig) -> int:
    if not cfg.manifest:
        raise DataError("consistency requires a manifest (positional or config)")
    manifest = load_manifest(cfg.manifest)
    results = _curves_for_manifest(cfg, manifest)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    per_metric = {}
    for mid, prov, curve, _, _ in results:
        cells = per_metric.setdefault(mid, {})
        for s, raw in zip(curve.severities, curve.raw):
            cells[(curve.dataset_id, curve.degradation, s)] = raw
    payload = {}
    for mid in sorted(per_metric):
        rep = consistency(per_metric[mid])
        payload[mid] = {
            "lambda": rep.lambda_mean_abs,
            "v_m": rep.mean_interaction,
            "interaction_vars": [
                {"datasets": [j, k], "variance": v}
                for (j, k), v in sorted(rep.interaction_vars.items())
            ],
            "log_ratios": [
                {"datasets": [j, k], "degradation": t, "severity": s,
                 "log2_ratio": v}
                for (j, k, t, s), v in sorted(rep.log_ratios.items(),
                                              key=lambda kv: repr(kv[0]))
            ],
        }
    _write_json(out / "consistency.json", {"seed": cfg.seed, "metrics": payload})
    for mid in sorted(payload):
        _print_json({"metric": mid, "lambda": payload[mid]["lambda"],
                     "v_m": payload[mid]["v_m"]})
    return 0


def cmd_ablate(cfg: RunConfig, path_a: str, path_b: str, grid=None) -> int:
    a = load_matrix(path_a)
    b = load_matrix(path_b)
    l_grid = list(grid) if grid else list(ABLATION_GRID)
    table = ablate_projections(a, b, l_grid=l_grid, seeds=ABLATION_SEEDS,
                               base_seed=cfg.seed, workers=cfg.workers)
    rows = [{"l": r.num_directions, "mean": r.mean_value, "std": r.std_value,
             "runtime_s": r.wall_time_s, "metric": "swd", "n": a.n, "m": b.n,
             "base_seed": cfg.seed} for r in table]
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "ablate.csv", ABLATE_COLUMNS, rows)
    for row in rows:
        _print_json(row)
    return 0


def cmd_plan(k: int, diameter: float, tau: float, delta: float, c: float) -> int:
    q = BoundQuery(intrinsic_dim=k, diameter=diameter, tolerance=tau,
                   failure_prob=delta, curvature_const=c)
    print(plan_projections(q))
    return 0


def cmd_correlate(path: str, permutations: int, seed: int) -> int:
    human, predicted = _read_two_columns(path)
    rep = rank_correlation(human, predicted, permutations=permutations, seed=seed)
    _print_json({"spearman": rep.spearman, "kendall": rep.kendall,
                 "p_spearman": rep.p_spearman, "p_kendall": rep.p_kendall,
                 "n_conditions": rep.n_conditions, "permutations": permutations,
                 "seed": seed})
    return 0


def _read_two_columns(path):
    human, predicted = [], []
    with open(path, newline="") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row:
                continue
            if len(row) < 2:
                raise DataError(f"{path} row {i + 1}: need two columns, got {len(row)}")
            try:
                h, p = float(row[0]), float(row[1])
            except ValueError:
                if i == 0:  # header row
                    continue
                raise DataError(f"{path} row {i + 1}: non-numeric values {row[:2]}")
            human.append(h)
            predicted.append(p)
    return human, predicted


# --------------------------------------------------------------------------
# argument parsing


def _add_common(sp, with_metrics=True):
    sp.add_argument("--config", help="JSON config file (flags override it)")
    sp.add_argument("--out", help="output directory")
    sp.add_argument("--seed", type=int, help="global seed")
    sp.add_argument("--workers", type=int, help="worker threads")
    if with_metrics:
        sp.add_argument("--metric", action="append", choices=METRIC_IDS,
                        help="metric to run (repeatable)")
        sp.add_argument("--l", type=int, help="direction count for swd")
        sp.add_argument("--sigma", type=float, help="bandwidth for cmmd")
        sp.add_argument("--multipliers",
                        help="comma-separated bandwidth multipliers for mmd-rbf-mixture")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swdist",
        description="Distributional distances between embedding sets "
                    "and the statistics to evaluate them.")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("compute", help="metrics between two matrix files")
    _add_common(sp)
    sp.add_argument("set_a")
    sp.add_argument("set_b")

    sp = sub.add_parser("degradation", help="severity response curves")
    _add_common(sp)
    sp.add_argument("manifest", nargs="?")

    sp = sub.add_parser("stability", help="repeated-split bias and CV")
    _add_common(sp)
    sp.add_argument("manifest", nargs="?")
    sp.add_argument("--r", type=int, help="number of split repetitions")
    sp.add_argument("--half-size", type=int, dest="half_size",
                    help="rows per split half (default: half the set)")

    sp = sub.add_parser("consistency", help="cross-dataset log-ratio stats")
    _add_common(sp)
    sp.add_argument("manifest", nargs="?")

    sp = sub.add_parser("ablate", help="direction-count sweep for swd")
    _add_common(sp, with_metrics=False)
    sp.add_argument("set_a")
    sp.add_argument("set_b")
    sp.add_argument("--grid", help="comma-separated direction counts")

    sp = sub.add_parser("plan", help="projection-count bound")
    sp.add_argument("--k", type=int, required=True, help="intrinsic dimension")
    sp.add_argument("--diameter", type=float, default=2.0,
                    help="support diameter (2 for unit-norm embeddings)")
    sp.add_argument("--tau", type=float, required=True, help="tolerance")
    sp.add_argument("--delta", type=float, required=True, help="failure probability")
    sp.add_argument("--c", type=float, default=1.0, help="curvature constant")

    sp = sub.add_parser("correlate", help="rank agreement of two score columns")
    sp.add_argument("csv_path")
    sp.add_argument("--permutations", type=int, default=10000)
    sp.add_argument("--seed", type=int)
    return parser


def _env_seed() -> int | None:
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError:
        raise DataError(f"{SEED_ENV_VAR} must be an integer, got {raw!r}")


def _config_from_args(args) -> RunConfig:
    """Merge config file, environment, and flags; flags take precedence."""
    raw = {}
    if args.config:
        cfg = RunConfig.from_file(args.config)
        with open(args.config) as fh:
            raw = json.load(fh)
    else:
        cfg = RunConfig()
    # Seed precedence: --seed flag, then config file, then environment.
    if args.seed is not None:
        cfg.seed = args.seed
    elif "seed" not in raw:
        env = _env_seed()
        if env is not None:
            cfg.seed = env
    if args.out is not None:
        cfg.out_dir = args.out
    if args.workers is not None:
        cfg.workers = max(1, args.workers)
    if getattr(args, "manifest", None):
        cfg.manifest = args.manifest
    if getattr(args, "r", None) is not None:
        cfg.r = args.r
    if getattr(args, "half_size", None) is not None:
        cfg.half_size = args.half_size
    if getattr(args, "metric", None):
        selected = {}
        for mid in args.metric:
            selected[mid] = dict(cfg.metrics.get(mid, {}))
        cfg.metrics = selected
    if getattr(args, "l", None) is not None:
        cfg.metrics.setdefault("swd", {})["l"] = args.l
    if getattr(args, "sigma", None) is not None:
        cfg.metrics.setdefault("cmmd", {})["sigma"] = args.sigma
    if getattr(args, "multipliers", None):
        cfg.metrics.setdefault("mmd-rbf-mixture", {})["multipliers"] = [
            float(x) for x in args.multipliers.split(",")]
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "plan":
            return cmd_plan(args.k, args.diameter, args.tau, args.delta, args.c)
        if args.command == "correlate":
            if args.seed is not None:
                seed = args.seed
            else:
                env = _env_seed()
                seed = env if env is not None else 0
            return cmd_correlate(args.csv_path, args.permutations, seed)
        cfg = _config_from_args(args)
        if args.command == "compute":
            return cmd_compute(cfg, args.set_a, args.set_b)
        if args.command == "degradation":
            return cmd_degradation(cfg)
        if args.command == "stability":
            return cmd_stability(cfg)
        if args.command == "consistency":
            return cmd_consistency(cfg)
        if args.command == "ablate":
            grid = [int(x) for x in args.grid.split(",")] if args.grid else None
            return cmd_ablate(cfg, args.set_a, args.set_b, grid=grid)
        parser.error(f"unhandled command {args.command}")
    except SwdistError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


def entrypoint() -> None:
    sys.exit(main())
