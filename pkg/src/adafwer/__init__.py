"""Covariate-adaptive family-wise error rate control for multiple testing."""

from .baselines import (
    AlternativeSpec,
    bonferroni,
    f1_density,
    f1_inverse,
    holm,
    oracle_reject,
    weighted_bonferroni,
)
from .core import (
    CensoredData,
    HypothesisTable,
    MixtureFit,
    MixtureParams,
    counter_rng,
)
from .decide import (
    DecisionSet,
    EpsilonBundle,
    bonferroni_weights,
    compute_tau,
    decisions_from_fit,
    thresholds_and_reject,
    winsorize_pi,
)
from .estimate import (
    EmOptions,
    InitEstimate,
    e_step,
    fit_em,
    fit_mixture,
    m_step_beta,
    m_step_k,
    plugin_pi0,
    small_p_init,
    storey_pi0_gamma,
)
from .estimator import CovariateAdaptiveFwer
from .evaluate import (
    EvaluationSummary,
    perturbation_diagnostic,
    run_experiment,
    score_replicate,
    u_gamma_k,
    wilson_interval,
)
from .simulate import (
    SimulatedStudy,
    SimulationConfig,
    config_for_setup,
    empirical_correlation_check,
    simulate,
)

__all__ = [
    "AlternativeSpec",
    "CensoredData",
    "CovariateAdaptiveFwer",
    "DecisionSet",
    "EmOptions",
    "EpsilonBundle",
    "EvaluationSummary",
    "HypothesisTable",
    "InitEstimate",
    "MixtureFit",
    "MixtureParams",
    "SimulatedStudy",
    "SimulationConfig",
    "bonferroni",
    "bonferroni_weights",
    "compute_tau",
    "config_for_setup",
    "counter_rng",
    "decisions_from_fit",
    "e_step",
    "empirical_correlation_check",
    "f1_density",
    "f1_inverse",
    "fit_em",
    "fit_mixture",
    "holm",
    "m_step_beta",
    "m_step_k",
    "oracle_reject",
    "perturbation_diagnostic",
    "plugin_pi0",
    "run_experiment",
    "score_replicate",
    "simulate",
    "small_p_init",
    "storey_pi0_gamma",
    "thresholds_and_reject",
    "u_gamma_k",
    "weighted_bonferroni",
    "wilson_interval",
    "winsorize_pi",
]
