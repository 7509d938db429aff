"""Anisotropic fractional Brownian sheets: synthesis and Hurst estimation.

Synthesis draws exact-covariance Gaussian lattices by separable circulant
embedding; estimation regresses log2 per-octave wavelet coefficient
variances on the octave vectors, optionally reweighted once by a model
covariance (the two-step estimator).
"""
from .covmodel import (
    CovModelConfig,
    config_for_system,
    detail_cross_covariance,
    detail_variance,
    logvar_covariance_entry,
    model_covariance,
    two_step_fit,
)
from .errors import (
    ConfigError,
    DimensionOverflowError,
    EmbeddingError,
    ExperimentError,
    FbsheetError,
    FieldFormatError,
    InsufficientDataError,
    InsufficientReplicatesError,
    InvalidRangeError,
    MagicMismatchError,
    ModelDegenerateError,
    RankDeficiencyError,
    SingularSystemError,
    TruncatedPayloadError,
    UnsupportedOrderError,
    WeightMatrixError,
)
from .estimator import (
    EstimatorReport,
    RegressionSystem,
    asymptotic_covariance,
    build_system,
    fit_system,
)
from .field import Field
from .harness import (
    ExperimentConfig,
    ExperimentResult,
    SummaryRow,
    SummaryTable,
    load_field,
    logscale_export,
    run_experiment,
    save_field,
    summarize,
    write_estimates_csv,
    write_summary_csv,
)
from .hurst import WaveletHurstEstimator
from .synthesis import (
    embedding_eigenvalues,
    fgn_autocovariance,
    integrate_increments,
    synth_fbs,
    synth_fbs_pair,
    synth_fgn_pair,
    synth_fgn_sheet,
)
from .wavelet import (
    CoefficientGrid,
    WaveletFilter,
    auto_octave_box,
    available_count,
    cascade_table,
    daubechies_filter,
    detail_1d,
    detail_grid,
    octave_box,
    sample_variance,
)

__version__ = "0.1.0"

__all__ = [
    "CoefficientGrid",
    "ConfigError",
    "CovModelConfig",
    "DimensionOverflowError",
    "EmbeddingError",
    "EstimatorReport",
    "ExperimentConfig",
    "ExperimentError",
    "ExperimentResult",
    "FbsheetError",
    "Field",
    "FieldFormatError",
    "InsufficientDataError",
    "InsufficientReplicatesError",
    "InvalidRangeError",
    "MagicMismatchError",
    "ModelDegenerateError",
    "RankDeficiencyError",
    "RegressionSystem",
    "SingularSystemError",
    "SummaryRow",
    "SummaryTable",
    "TruncatedPayloadError",
    "UnsupportedOrderError",
    "WaveletFilter",
    "WaveletHurstEstimator",
    "WeightMatrixError",
    "asymptotic_covariance",
    "auto_octave_box",
    "available_count",
    "build_system",
    "cascade_table",
    "config_for_system",
    "daubechies_filter",
    "detail_1d",
    "detail_cross_covariance",
    "detail_grid",
    "detail_variance",
    "embedding_eigenvalues",
    "fgn_autocovariance",
    "fit_system",
    "integrate_increments",
    "load_field",
    "logscale_export",
    "logvar_covariance_entry",
    "model_covariance",
    "octave_box",
    "run_experiment",
    "sample_variance",
    "save_field",
    "summarize",
    "synth_fbs",
    "synth_fbs_pair",
    "synth_fgn_pair",
    "synth_fgn_sheet",
    "two_step_fit",
    "write_estimates_csv",
    "write_summary_csv",
]
