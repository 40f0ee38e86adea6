from .config import ConfigError, load_run_config
from .core import (
    CertificateError,
    ConvergenceError,
    DegenerateSetError,
    DivergenceError,
    EvaluationError,
    IllegalArgumentError,
    InfeasibleError,
    InvertibilityError,
    MdiError,
    NoAcceptanceError,
    SlaterError,
    SolverError,
    SupportError,
)
from .datasets import (
    HeartData,
    LabeledSamples,
    biased_subsample,
    covshift_moment_set,
    covshift_mu_star,
    density_ratio,
    empirical_mean_box,
    load_heart_csv,
    synth_test,
    synth_train,
)
from .distributions import (
    AffineFeatures,
    BallSet,
    BoxSet,
    CoordinateFeatures,
    DiscreteDistribution,
    FeatureMap,
    IdentityFeatures,
    LogRatioFeatures,
    MomentSet,
    SingletonSet,
    TabularFeatures,
    empirical_from_samples,
    moment,
    relative_entropy,
    total_variation,
)
from .dro import (
    DroConfig,
    DualProgram,
    LinearLoss,
    LogisticLoss,
    LossModel,
    NewsvendorLoss,
    PipelineResult,
    ScenarioSet,
    WorstCaseRisk,
    check_recession_condition,
    dro_train,
    erm_train,
    mdi_dro_pipeline,
    risk,
    worst_case_risk,
)
from .guarantees import (
    BoundReport,
    finite_sample_bound,
    hoeffding_ips_bound,
    ope_bound,
    radius_for_confidence,
)
from .iprojection import (
    IProjectionConfig,
    IProjectionProblem,
    IProjectionSolution,
    SmoothingSchedule,
    compute_schedule,
    conditional_limit_check,
    smoothed_dual_gradient,
    smoothed_dual_objective,
    solve,
    tilting_oracle,
)
from .mdp import (
    BehavioralSamples,
    OccupationMeasure,
    OpeEstimate,
    StationaryPolicy,
    TabularMdp,
    capped_ips_estimate,
    inventory_instance,
    ips_estimate,
    long_run_cost,
    mdi_ope_estimate,
    occupation_measure,
    random_policy,
    sample_behavioral,
)
from .utils import load_distribution


__all__ = (
    "AffineFeatures",
    "BallSet",
    "BehavioralSamples",
    "BoundReport",
    "BoxSet",
    "CertificateError",
    "ConfigError",
    "ConvergenceError",
    "CoordinateFeatures",
    "DegenerateSetError",
    "DiscreteDistribution",
    "DivergenceError",
    "DroConfig",
    "DualProgram",
    "EvaluationError",
    "FeatureMap",
    "HeartData",
    "IProjectionConfig",
    "IProjectionProblem",
    "IProjectionSolution",
    "IdentityFeatures",
    "IllegalArgumentError",
    "InfeasibleError",
    "InvertibilityError",
    "LabeledSamples",
    "LinearLoss",
    "LogRatioFeatures",
    "LogisticLoss",
    "LossModel",
    "MdiError",
    "MomentSet",
    "NewsvendorLoss",
    "NoAcceptanceError",
    "OccupationMeasure",
    "OpeEstimate",
    "PipelineResult",
    "ScenarioSet",
    "SingletonSet",
    "SlaterError",
    "SmoothingSchedule",
    "SolverError",
    "StationaryPolicy",
    "SupportError",
    "TabularFeatures",
    "TabularMdp",
    "WorstCaseRisk",
    "biased_subsample",
    "capped_ips_estimate",
    "check_recession_condition",
    "compute_schedule",
    "conditional_limit_check",
    "covshift_moment_set",
    "covshift_mu_star",
    "density_ratio",
    "dro_train",
    "empirical_from_samples",
    "empirical_mean_box",
    "erm_train",
    "finite_sample_bound",
    "hoeffding_ips_bound",
    "inventory_instance",
    "ips_estimate",
    "load_distribution",
    "load_heart_csv",
    "load_run_config",
    "long_run_cost",
    "mdi_dro_pipeline",
    "mdi_ope_estimate",
    "moment",
    "occupation_measure",
    "ope_bound",
    "radius_for_confidence",
    "random_policy",
    "relative_entropy",
    "risk",
    "sample_behavioral",
    "smoothed_dual_gradient",
    "smoothed_dual_objective",
    "solve",
    "synth_test",
    "synth_train",
    "tilting_oracle",
    "total_variation",
    "worst_case_risk",
)
