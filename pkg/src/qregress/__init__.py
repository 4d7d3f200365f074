"""Numerical laboratory for robust slope estimation on eigenvalue pairs.

Observables are finite symmetric matrices, states are density
operators, and the observed data are eigenvalue pairs drawn from the
distribution the state induces on the spectrum. The slope linking the
pair is fitted by convex M-estimation, and Monte Carlo suites check
that the estimator concentrates and that its normalized error looks
standard normal.
"""

from .asymptotics import (
    AsymptoticConstants,
    DesignStats,
    NormalityReport,
    ShiftCurve,
    consistency_check,
    design_stats,
    design_stats_prefixes,
    diagnostics_json,
    estimate_constants,
    estimate_score_second_moment,
    estimate_score_slope,
    ks_test,
    normalized_statistic,
    score_shift_curve,
)
from .exceptions import (
    AsymmetryTooLarge,
    AtDiscontinuity,
    BracketFailure,
    DegenerateDesign,
    DegenerateNormalization,
    DimensionMismatch,
    EigensolverFailure,
    EmptySupport,
    IoFailure,
    NonFiniteMoment,
    NotPositiveSemiDefinite,
    NotUnitTrace,
    NumericError,
    QRegressError,
    TooFewReplications,
    ValidationError,
    ZeroBeta,
)
from .experiment import (
    ExperimentConfig,
    MonteCarloReport,
    emit_report,
    run_experiment,
)
from .losses import (
    LossFunction,
    absolute_loss,
    discontinuities,
    huber_loss,
    loss_from_spec,
    lq_loss,
    quantile_loss,
    rho_eval,
    rho_prime,
    square_loss,
)
from .operators import (
    EigenPMF,
    QuantumState,
    SpectralDecomposition,
    SymmetricOperator,
    commutator_norm,
    diagonal_operator,
    eigen_pmf,
    gibbs_state,
    make_state,
    make_symmetric,
    maximally_mixed,
    quantum_expectation,
    random_symmetric,
    reconstruct,
    spectral_decompose,
)
from .regressor import RobustSlopeRegressor
from .rng import RngSeed, replication_streams
from .sampling import (
    ErrorModel,
    Sample,
    TruePair,
    apply_error,
    build_true_pair,
    contaminated,
    draw_errors,
    error_draw,
    error_model_from_spec,
    gaussian,
    laplace,
    read_samples_csv,
    sample_eigen_pairs,
    samples_from_json,
    samples_to_arrays,
    samples_to_csv_text,
    samples_to_json,
    student_t,
    write_samples_csv,
)
from .solvers import (
    EstimatorResult,
    RegressionData,
    estimate,
    estimate_general,
    estimate_ls,
    estimate_weighted_quantile,
    grid_oracle,
    objective,
)
from .version import __version__

__all__ = [
    "__version__",
    # operators
    "SymmetricOperator", "QuantumState", "SpectralDecomposition", "EigenPMF",
    "make_symmetric", "make_state", "spectral_decompose", "reconstruct",
    "quantum_expectation", "eigen_pmf", "commutator_norm",
    "diagonal_operator", "random_symmetric", "maximally_mixed", "gibbs_state",
    # losses
    "LossFunction", "square_loss", "absolute_loss", "huber_loss", "lq_loss",
    "quantile_loss", "loss_from_spec", "rho_eval", "rho_prime", "discontinuities",
    # solvers
    "RegressionData", "EstimatorResult", "objective", "estimate",
    "estimate_ls", "estimate_weighted_quantile", "estimate_general", "grid_oracle",
    # sampling
    "Sample", "TruePair", "ErrorModel", "build_true_pair", "sample_eigen_pairs",
    "apply_error", "draw_errors", "error_draw", "gaussian", "laplace",
    "student_t", "contaminated", "error_model_from_spec", "samples_to_arrays",
    "samples_to_json", "samples_from_json", "samples_to_csv_text",
    "write_samples_csv", "read_samples_csv",
    # rng
    "RngSeed", "replication_streams",
    # asymptotics
    "DesignStats", "design_stats", "design_stats_prefixes",
    "AsymptoticConstants", "estimate_constants", "estimate_score_slope",
    "estimate_score_second_moment", "ShiftCurve", "score_shift_curve",
    "normalized_statistic", "NormalityReport", "ks_test", "consistency_check",
    "diagnostics_json",
    # regressor
    "RobustSlopeRegressor",
    # experiment
    "ExperimentConfig", "MonteCarloReport", "run_experiment", "emit_report",
    # exceptions
    "QRegressError", "ValidationError", "DimensionMismatch", "AsymmetryTooLarge",
    "NotUnitTrace", "NotPositiveSemiDefinite", "ZeroBeta", "TooFewReplications",
    "NumericError", "EigensolverFailure", "DegenerateDesign", "EmptySupport",
    "BracketFailure", "NonFiniteMoment", "DegenerateNormalization", "IoFailure",
    "AtDiscontinuity",
]
