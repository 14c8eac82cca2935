"""Bayesian rough set classifiers trained by Metropolis sampling over cut points."""

from .errors import (
    BayesRoughError,
    ChainError,
    ConfigError,
    DomainError,
    ParseError,
    ProposalError,
    SchemaError,
)
from .granulation import (
    GranularTable,
    Granulization,
    GridProposal,
    discretize_value,
    granulate_table,
    perturb,
    random_granulization,
)
from .posterior import (
    ModelScorer,
    PosteriorConfig,
    RoughModel,
    log_likelihood,
    log_posterior,
    log_prior,
    predictive_accuracy,
)
from .predictive import PredictiveDistribution, emit_report, predict_distribution, predict_mean
from .roughcore import (
    Approximation,
    EquivalenceClasses,
    Rule,
    RuleSet,
    approximate,
    approximation_accuracy,
    classify,
    format_rules,
    induce_rules,
    lower_approximation,
    partition_classes,
    rough_membership,
    upper_approximation,
)
from .sampler import Chain, ChainConfig, Diagnostics, chain_diagnostics, metropolis_step, run_chain
from .synth import GroundTruth, SynthSpec, checkerboard_spec, demographic_spec, generate
from .table import (
    AttributeSpec,
    CleanReport,
    Condition,
    ConsistencyPredicate,
    InformationTable,
    clean_table,
    load_table,
    write_table,
)

__version__ = "0.1.0"

__all__ = [
    "Approximation",
    "AttributeSpec",
    "BayesRoughError",
    "Chain",
    "ChainConfig",
    "ChainError",
    "CleanReport",
    "Condition",
    "ConfigError",
    "ConsistencyPredicate",
    "Diagnostics",
    "DomainError",
    "EquivalenceClasses",
    "GranularTable",
    "Granulization",
    "GridProposal",
    "GroundTruth",
    "InformationTable",
    "ModelScorer",
    "ParseError",
    "PosteriorConfig",
    "PredictiveDistribution",
    "ProposalError",
    "RoughModel",
    "Rule",
    "RuleSet",
    "SchemaError",
    "SynthSpec",
    "approximate",
    "approximation_accuracy",
    "chain_diagnostics",
    "checkerboard_spec",
    "classify",
    "clean_table",
    "demographic_spec",
    "discretize_value",
    "emit_report",
    "format_rules",
    "generate",
    "granulate_table",
    "induce_rules",
    "load_table",
    "log_likelihood",
    "log_posterior",
    "log_prior",
    "lower_approximation",
    "metropolis_step",
    "partition_classes",
    "perturb",
    "predict_distribution",
    "predict_mean",
    "predictive_accuracy",
    "random_granulization",
    "rough_membership",
    "run_chain",
    "upper_approximation",
    "write_table",
]
