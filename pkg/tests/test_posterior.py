import json

import numpy as np
import pytest

from bayesrough.errors import ConfigError, DomainError
from bayesrough.granulation import Granulization, granulate_table
from bayesrough.posterior import (
    ModelScorer,
    PosteriorConfig,
    RoughModel,
    log_likelihood,
    log_posterior,
    log_prior,
    predictive_accuracy,
)
from bayesrough.roughcore import induce_rules
from bayesrough.table import InformationTable
from conftest import granular, small_table


def test_accuracy_consistent_table_is_one():
    gt = granular([[0], [0], [1]], [1, 1, 0])
    assert predictive_accuracy(induce_rules(gt), gt) == 1.0


def test_accuracy_single_inconsistent_pair():
    gt = granular([[0], [0]], [1, 0])
    # tie decides negative, so exactly one of the pair is right
    assert predictive_accuracy(induce_rules(gt), gt) == 0.5


def test_accuracy_disjoint_signatures_is_zero():
    train = granular([[0, 0], [0, 0]], [1, 1], granules=[2, 2])
    test = granular([[1, 1], [1, 0]], [1, 0], granules=[2, 2])
    assert predictive_accuracy(induce_rules(train), test) == 0.0


def test_accuracy_rejects_empty():
    gt = granular([[0]], [1])
    with pytest.raises(DomainError):
        predictive_accuracy(induce_rules(gt), gt.take([]))


def test_log_posterior_examples():
    assert log_posterior(1.0, 0, 0.001) == 0.0
    assert log_posterior(0.58, 0, 0.001) == pytest.approx(-0.42, abs=1e-15)
    assert log_posterior(1.0, 222, 0.001) == pytest.approx(-0.222, abs=1e-15)
    assert log_posterior(0.58, 222, 0.001) == pytest.approx(-0.642, abs=1e-15)
    assert log_likelihood(0.25) == -0.75
    assert log_prior(10, 0.5) == -5.0


def test_log_posterior_domain():
    with pytest.raises(DomainError):
        log_likelihood(1.2)
    with pytest.raises(DomainError):
        log_prior(3, -1.0)
    with pytest.raises(ConfigError):
        PosteriorConfig(lam=-0.1)
    with pytest.raises(ConfigError):
        PosteriorConfig(holdout=1.0)


def test_scorer_matches_direct_computation():
    table = small_table()
    g = Granulization(table.schema, ((25.0, 75.0),) * 3)
    model = ModelScorer(table, PosteriorConfig(0.01)).score(g)
    gt = granulate_table(table, g)
    rules = induce_rules(gt)
    assert model.rules == rules
    assert model.accuracy == predictive_accuracy(rules, gt)
    assert model.log_posterior == (model.accuracy - 1.0) - 0.01 * rules.rule_count


def test_scorer_holdout_split():
    table = small_table(200)
    scorer = ModelScorer(table, PosteriorConfig(0.001, 0.25), np.random.default_rng(0))
    assert len(scorer.test_rows) == 50 and len(scorer.train_rows) == 150
    assert not set(scorer.test_rows) & set(scorer.train_rows)
    g = Granulization(table.schema, ((25.0, 75.0),) * 3)
    model = scorer.score(g)
    assert sum(r.support for r in model.rules.values()) == 150


def test_scorer_requires_clean_table():
    table = small_table(10)
    with pytest.raises(DomainError):
        ModelScorer(table.take([]))
    dirty = InformationTable(table.schema, np.full((1, 3), np.nan), np.array([1], dtype=np.int8))
    with pytest.raises(DomainError):
        ModelScorer(dirty)
    with pytest.raises(DomainError):
        ModelScorer(InformationTable(table.schema, table.values))


def test_model_round_trip():
    table = small_table(100)
    g = Granulization(table.schema, ((30.0, 60.0),) * 3)
    model = ModelScorer(table).score(g)
    again = RoughModel.from_dict(table.schema, json.loads(json.dumps(model.to_dict())), model.lam)
    assert again.granulization == model.granulization
    assert again.rules == model.rules
    assert (again.accuracy, again.log_posterior) == (model.accuracy, model.log_posterior)
