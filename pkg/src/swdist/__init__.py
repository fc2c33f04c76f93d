"""Assumption-free distributional distances between embedding sets.

Core pieces: an exactly solvable sliced 2-Wasserstein estimator with a
projection-count planner, Gaussian Frechet distance (FID on any backbone),
unbiased kernel MMD variants (KID, CMMD, RBF mixtures), and a protocol of
evaluation statistics (degradation response, finite-sample stability,
cross-dataset consistency, human-score agreement).
"""

from .embed_io import (
    DatasetManifest,
    EmbeddingSet,
    ManifestEntry,
    SplitPair,
    load_manifest,
    load_matrix,
    random_splits,
    save_manifest,
    save_matrix,
)
from .errors import (
    ArityError,
    BandwidthError,
    CapacityError,
    ConstantInputError,
    CoverageError,
    DataError,
    DomainError,
    FormatError,
    ShapeError,
    SwdistError,
    WriteError,
)
from .gaussian_frechet import (
    GaussianSummary,
    fid,
    fit_gaussian,
    frechet_distance_squared,
    sqrtm_psd,
)
from .kernel_mmd import (
    MmdResult,
    PolynomialKernel,
    RbfKernel,
    RbfMixtureKernel,
    cmmd,
    gram,
    kid,
    median_heuristic,
    mmd2_unbiased,
    mmd_rbf_mixture,
)
from .protocol import (
    ConsistencyReport,
    CorrelationReport,
    DegradationCurve,
    MetricResult,
    RefinementCurve,
    StabilityReport,
    consistency,
    degradation_curve,
    finite_sample_bias,
    mos_aggregate,
    rank_correlation,
    refinement_curve,
)
from .sliced_ot import (
    BoundQuery,
    ProjectionPlan,
    SwdResult,
    ablate_projections,
    plan_projections,
    sample_directions,
    swd_squared,
    w2_squared_1d,
)

__version__ = "0.1.0"

__all__ = [
    "ArityError", "BandwidthError", "BoundQuery", "CapacityError",
    "ConsistencyReport", "ConstantInputError", "CorrelationReport",
    "CoverageError", "DataError", "DatasetManifest", "DegradationCurve",
    "DomainError", "EmbeddingSet", "FormatError", "GaussianSummary",
    "ManifestEntry", "MetricResult", "MmdResult", "PolynomialKernel",
    "ProjectionPlan", "RbfKernel", "RbfMixtureKernel", "RefinementCurve",
    "ShapeError", "SplitPair", "StabilityReport", "SwdResult", "SwdistError",
    "WriteError", "ablate_projections", "cmmd", "consistency",
    "degradation_curve", "fid", "finite_sample_bias", "fit_gaussian",
    "frechet_distance_squared", "gram", "kid", "load_manifest", "load_matrix",
    "median_heuristic", "mmd2_unbiased", "mmd_rbf_mixture", "mos_aggregate",
    "plan_projections", "random_splits", "rank_correlation",
    "refinement_curve", "sample_directions", "save_manifest", "save_matrix",
    "sqrtm_psd", "swd_squared", "w2_squared_1d",
]
