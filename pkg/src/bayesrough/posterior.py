"""Bayesian scoring of rough set models.

The unnormalized log posterior of a model with predictive accuracy ``A`` and
``N`` rules is ``(A - 1) - lam * N``: an ``exp(A - 1)`` likelihood times an
``exp(-lam * N)`` prior that favours small rule sets.  Normalizing constants
are never needed because the sampler only compares differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError
from .granulation import GranularTable, Granulization, granulate_table
from .roughcore import RuleSet, induce_rules
from .table import InformationTable

DEFAULT_LAMBDA = 1e-3


@dataclass(frozen=True)
class PosteriorConfig:
    """``lam`` weights the rule-count prior.  ``holdout`` is the fraction of
    objects kept aside to measure accuracy; ``None`` scores on the training
    rows themselves."""

    lam: float = DEFAULT_LAMBDA
    holdout: float | None = None

    def __post_init__(self):
        if not (isinstance(self.lam, (int, float)) and math.isfinite(self.lam) and self.lam >= 0):
            raise ConfigError(f"lambda must be a non-negative number, got {self.lam!r}")
        if self.holdout is not None and not 0.0 < self.holdout < 1.0:
            raise ConfigError(f"holdout fraction must lie in (0, 1), got {self.holdout!r}")


def predictive_accuracy(rules: RuleSet, gt: GranularTable) -> float:
    """Fraction of objects whose predicted class matches their decision.

    The prediction is positive when the matched rule's output is > 0 and
    negative otherwise; objects with no matching rule count as errors.
    """
    if len(gt) == 0:
        raise DomainError("accuracy of an empty table is undefined")
    if gt.decisions is None:
        raise DomainError("accuracy needs a decision column")
    out, matched = rules.outputs(gt.signatures)
    correct = matched & ((out > 0) == (gt.decisions == 1))
    return int(correct.sum()) / len(gt)


def log_likelihood(accuracy: float) -> float:
    if not 0.0 <= accuracy <= 1.0:
        raise DomainError(f"accuracy must lie in [0, 1], got {accuracy}")
    return accuracy - 1.0


def log_prior(n_rules: int, lam: float) -> float:
    if n_rules < 0 or lam < 0:
        raise DomainError("rule count and lambda must be non-negative")
    return -lam * n_rules


def log_posterior(accuracy: float, n_rules: int, lam: float) -> float:
    return log_likelihood(accuracy) + log_prior(n_rules, lam)


@dataclass(frozen=True, eq=False)
class RoughModel:
    """One sampled state: a granulization, its rules and their score."""

    granulization: Granulization
    rules: RuleSet
    accuracy: float
    lam: float
    log_posterior: float

    @classmethod
    def build(cls, g: Granulization, rules: RuleSet, accuracy: float, lam: float) -> "RoughModel":
        return cls(g, rules, accuracy, lam, log_posterior(accuracy, rules.rule_count, lam))

    @property
    def rule_count(self) -> int:
        return self.rules.rule_count

    def to_dict(self) -> dict:
        return {
            "cuts": self.granulization.to_dict(),
            "accuracy": self.accuracy,
            "n_rules": self.rule_count,
            "log_posterior": self.log_posterior,
            "rules": self.rules.to_rows(),
        }

    @classmethod
    def from_dict(cls, schema, data: dict, lam: float) -> "RoughModel":
        g = Granulization.from_dict(schema, data["cuts"])
        rules = RuleSet.from_rows(data["rules"], g.granules)
        model = cls(g, rules, float(data["accuracy"]), lam, float(data["log_posterior"]))
        if model.rule_count != data.get("n_rules", model.rule_count):
            raise DomainError("stored rule count disagrees with stored rules")
        return model


class ModelScorer:
    """Scores granulizations against a fixed clean table.

    With a holdout fraction the table is split once, by ``rng``: rules are
    induced on the training part and accuracy is measured on the rest.
    """

    def __init__(self, table: InformationTable, config: PosteriorConfig = PosteriorConfig(), rng=None):
        if table.n_objects == 0:
            raise DomainError("cannot score models on an empty table")
        if not table.has_decisions:
            raise DomainError("training table needs a decision column")
        if not table.is_clean():
            raise DomainError("training table must be cleaned first")
        self.table = table
        self.config = config
        self.train_rows = self.test_rows = None
        if config.holdout is not None:
            n = table.n_objects
            n_test = int(round(config.holdout * n))
            if n_test < 1 or n_test >= n:
                raise ConfigError(f"holdout {config.holdout} leaves an empty split for {n} objects")
            order = np.random.default_rng(rng).permutation(n)
            self.test_rows = np.sort(order[:n_test])
            self.train_rows = np.sort(order[n_test:])

    def score(self, g: Granulization) -> RoughModel:
        gt = granulate_table(self.table, g)
        if self.train_rows is None:
            rules = induce_rules(gt)
            accuracy = predictive_accuracy(rules, gt)
        else:
            rules = induce_rules(gt.take(self.train_rows))
            accuracy = predictive_accuracy(rules, gt.take(self.test_rows))
        return RoughModel.build(gt.granulization, rules, accuracy, self.config.lam)
