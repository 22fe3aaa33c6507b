"""Randomization tests for completely randomized experiments, including tests that
condition on observed covariate balance through tiered Mahalanobis criteria, plus
a simulation lab for power and conditional-validity studies."""

from .balance import (
    BalanceCriterion,
    BalanceSummary,
    StratumCountCriterion,
    TierSpec,
    balance_summary,
    covariance_inverse,
    evaluate_criterion,
    mahalanobis,
    mean_diff_signs,
)
from .bounds import (
    BoundsConfig,
    build_tier_criterion,
    procedure1_bounds,
    procedure2_bounds,
    sign_constrained_draws,
)
from .cem import CoarseningSpec, cem_prune, coarsen, quantile_cutpoints, sturges_cutpoints
from .data import (
    ExperimentData,
    PotentialOutcomes,
    draw_complete,
    load_experiment_csv,
    observe,
    save_experiment_csv,
)
from .dgp import DGPSpec, generate, transformed_covariates
from .engine import TestResult, exact_pvalue_enumerate, randomization_pvalue
from .errors import (
    AllStrataDroppedError,
    AllUnitsPrunedError,
    CountMismatchError,
    CRTError,
    EmptyArmError,
    EnumerationTooLargeError,
    EvaluationFailureError,
    InsufficientDrawsError,
    InvalidDesignError,
    LengthMismatchError,
    RankDeficiencyError,
    SamplerStallError,
    SchemaError,
    SingularCovarianceError,
    ZeroRangeError,
)
from .estimator import CEMRandomizationTest, RandomizationTest
from .rng import substream
from .samplers import (
    CompleteSampler,
    ConditionalSampler,
    WithinStrataSampler,
    draw_conditional,
    draw_within_strata,
)
from .simlab import (
    DecileRow,
    DecileTable,
    PowerRow,
    PowerTable,
    ProcedureSpec,
    StudyConfig,
    read_config,
    read_decile_csv,
    read_power_csv,
    run_conditional_validity_study,
    run_power_study,
    write_results,
)
from .statistics import (
    StatisticSpec,
    StratumLabels,
    least_squares,
    tau_int,
    tau_ps,
    tau_sd,
)

__version__ = "0.1.0"

__all__ = [
    "AllStrataDroppedError",
    "AllUnitsPrunedError",
    "BalanceCriterion",
    "BalanceSummary",
    "BoundsConfig",
    "CEMRandomizationTest",
    "CRTError",
    "CoarseningSpec",
    "CompleteSampler",
    "ConditionalSampler",
    "CountMismatchError",
    "DGPSpec",
    "DecileRow",
    "DecileTable",
    "EmptyArmError",
    "EnumerationTooLargeError",
    "EvaluationFailureError",
    "ExperimentData",
    "InsufficientDrawsError",
    "InvalidDesignError",
    "LengthMismatchError",
    "PotentialOutcomes",
    "PowerRow",
    "PowerTable",
    "ProcedureSpec",
    "RandomizationTest",
    "RankDeficiencyError",
    "SamplerStallError",
    "SchemaError",
    "SingularCovarianceError",
    "StatisticSpec",
    "StratumCountCriterion",
    "StratumLabels",
    "StudyConfig",
    "TestResult",
    "TierSpec",
    "WithinStrataSampler",
    "ZeroRangeError",
    "balance_summary",
    "build_tier_criterion",
    "cem_prune",
    "coarsen",
    "covariance_inverse",
    "draw_complete",
    "draw_conditional",
    "draw_within_strata",
    "evaluate_criterion",
    "exact_pvalue_enumerate",
    "generate",
    "least_squares",
    "load_experiment_csv",
    "mahalanobis",
    "mean_diff_signs",
    "observe",
    "procedure1_bounds",
    "procedure2_bounds",
    "quantile_cutpoints",
    "randomization_pvalue",
    "read_config",
    "read_decile_csv",
    "read_power_csv",
    "run_conditional_validity_study",
    "run_power_study",
    "save_experiment_csv",
    "sign_constrained_draws",
    "StatisticSpec",
    "sturges_cutpoints",
    "substream",
    "tau_int",
    "tau_ps",
    "tau_sd",
    "transformed_covariates",
    "write_results",
]
