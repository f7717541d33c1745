"""Feature selection for case-control data via cross-validated error estimates.

The package bundles an exact model layer (error functional, optimal rule),
a reproducible synthetic data generator, stratified sample construction,
the K-fold subset-scoring estimator with exhaustive search, a budget-aware
sample-size planner and a Monte Carlo comparison harness with a CLI.
"""

from .datagen import (
    Observation,
    SeededStream,
    XorModel,
    derive_seed,
    draw_maf,
    genotype_pmf,
    model_with_drawn_mafs,
    response_prob,
    sample_many,
    sample_observation,
)
from .estimator import (
    ClassTooSmallError,
    ErrEstimate,
    FoldPartition,
    IidSample,
    TrainedRule,
    err_hat_K,
    err_hat_iid,
    partition_folds,
    predict,
    select_relevant,
    train_rule,
)
from .exact import (
    Classifier,
    ModelDiagnostics,
    PenaltySpec,
    conditional_response_rate,
    error_exact,
    maincond_residual,
    model_diagnostics,
    optimal_classifier,
)
from .harness import (
    ExperimentConfig,
    MethodVariant,
    TMRReport,
    TMRRow,
    desk_config,
    run_experiment,
    run_replicate,
    table1_config,
)
from .planner import (
    CostParams,
    NTildeLaw,
    PlanInfeasibleError,
    lambda0,
    nb_pmf,
    ntilde_law,
    ntilde_pmf,
    prob_cost_within,
    s_str,
    s_str_estimated,
)
from .stratify import (
    DrawBudgetError,
    PrevalenceEstimate,
    StratifiedSample,
    build_stratified,
    case_law_check,
    case_pair_independence_check,
    conditional_case_law,
    estimate_prevalence,
)

__version__ = "0.1.0"
