"""Robust completion of low-rank matrices from non-uniform Bernoulli
observations with sparse sign corruptions, plus the dual-certificate
machinery that backs the recovery guarantee."""

from .certificate import (
    CertificateReport,
    ContractionStats,
    GolfingTrace,
    NormContractionStats,
    bernstein_bound,
    check_norm_contraction,
    check_operator_contraction,
    construct_certificate,
    contraction_operator_norm,
    evaluate_conditions,
)
from .experiments import (
    ExperimentConfig,
    auto_lambda,
    generate_ground_truth,
    run_certify,
    run_single,
    run_sweep,
    trial_seed,
)
from .io import (
    AGGREGATE_HEADER,
    CERTIFY_HEADER,
    DIAGNOSTICS_HEADER,
    PROFILE_HEADER,
    TRIALS_HEADER,
    AggregateRecord,
    CertifyRecord,
    TrialRecord,
    read_aggregate,
    read_certify,
    read_mask,
    read_matrix,
    read_plan,
    read_profile,
    read_trials,
    write_aggregate,
    write_certify,
    write_mask,
    write_matrix,
    write_plan,
    write_profile,
    write_solution,
    write_trials,
)
from .leverage import (
    LeverageProfile,
    estimate_leverage,
    leverage_inf2_norm,
    leverage_inf_norm,
    leverage_scores,
)
from .linalg import (
    OperatorNormEstimate,
    SvdFactors,
    as_mask,
    as_matrix,
    mask_from_pairs,
    mask_to_pairs,
    operator_norm,
    project_mask,
    project_tangent,
    project_tangent_perp,
    reduced_svd,
)
from .sampling import (
    DecoupledSample,
    GolfingPartition,
    ObservationSet,
    SamplingPlan,
    golfing_batch_count,
    golfing_partition,
    observe_decoupled,
    plan_certificate,
    plan_leveraged,
    plan_uniform,
    rng_stream,
    sample_decoupled,
    sample_direct,
)
from .solver import (
    IterationStats,
    Solution,
    SolverConfig,
    default_lambda,
    relative_error,
    singular_value_threshold,
    soft_threshold,
    solve,
)

__version__ = "0.1.0"

__all__ = [
    "AGGREGATE_HEADER",
    "CERTIFY_HEADER",
    "DIAGNOSTICS_HEADER",
    "PROFILE_HEADER",
    "TRIALS_HEADER",
    "AggregateRecord",
    "CertificateReport",
    "CertifyRecord",
    "ContractionStats",
    "DecoupledSample",
    "ExperimentConfig",
    "GolfingPartition",
    "GolfingTrace",
    "IterationStats",
    "LeverageProfile",
    "NormContractionStats",
    "ObservationSet",
    "OperatorNormEstimate",
    "SamplingPlan",
    "Solution",
    "SolverConfig",
    "SvdFactors",
    "TrialRecord",
    "as_mask",
    "as_matrix",
    "auto_lambda",
    "bernstein_bound",
    "check_norm_contraction",
    "check_operator_contraction",
    "construct_certificate",
    "contraction_operator_norm",
    "default_lambda",
    "estimate_leverage",
    "evaluate_conditions",
    "generate_ground_truth",
    "golfing_batch_count",
    "golfing_partition",
    "leverage_inf2_norm",
    "leverage_inf_norm",
    "leverage_scores",
    "mask_from_pairs",
    "mask_to_pairs",
    "observe_decoupled",
    "operator_norm",
    "plan_certificate",
    "plan_leveraged",
    "plan_uniform",
    "project_mask",
    "project_tangent",
    "project_tangent_perp",
    "read_aggregate",
    "read_certify",
    "read_mask",
    "read_matrix",
    "read_plan",
    "read_profile",
    "read_trials",
    "reduced_svd",
    "relative_error",
    "rng_stream",
    "run_certify",
    "run_single",
    "run_sweep",
    "sample_decoupled",
    "sample_direct",
    "singular_value_threshold",
    "soft_threshold",
    "solve",
    "trial_seed",
    "write_aggregate",
    "write_certify",
    "write_mask",
    "write_matrix",
    "write_plan",
    "write_profile",
    "write_solution",
    "write_trials",
]
