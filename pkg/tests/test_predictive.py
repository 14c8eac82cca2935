import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bayesrough.errors import DomainError, SchemaError
from bayesrough.granulation import Granulization
from bayesrough.posterior import RoughModel
from bayesrough.predictive import (
    chain_accuracy_on,
    emit_report,
    model_outputs,
    predict_distribution,
    predict_mean,
    predict_table,
    query_filename,
)
from bayesrough.roughcore import Rule, RuleSet
from bayesrough.sampler import Chain, ChainConfig, Histogram, run_chain
from bayesrough.table import AttributeSpec
from conftest import small_table

SCHEMA = (AttributeSpec("a", "numeric", 0, 1),)


def chain_of(rule_lists, cut=0.5):
    """Chain over one attribute split at ``cut``; each entry lists ``(sig, pos, support)``."""
    g = Granulization(SCHEMA, ((cut,),))
    models = tuple(
        RoughModel.build(g, RuleSet([Rule((s,), p, n) for s, p, n in rules], (2,)), 0.5, 0.0)
        for rules in rule_lists
    )
    return Chain(ChainConfig(burn_in=0, retain=len(models)), SCHEMA, models, tuple(range(len(models))), 0, 0)


def test_unanimous_positive():
    chain = chain_of([[(0, 3, 3)]] * 4)
    assert predict_mean(chain, {"a": 0.2}) == 1.0


def test_mean_of_two_models():
    chain = chain_of([[(0, 1, 3)], [(0, 2, 2)]])
    assert predict_mean(chain, [0.1]) == pytest.approx(1 / 3, abs=1e-15)
    assert model_outputs(chain, [0.1]) == [pytest.approx(-1 / 3), 1.0]


def test_all_abstain_has_no_support():
    chain = chain_of([[(0, 1, 1)]] * 3)
    d = predict_distribution(chain, [0.9], bins=5)
    assert d.coverage == 0.0 and d.mean == 0.0 and d.no_support
    assert d.hist.total == 0 and len(d.hist.counts) == 5


def test_abstentions_count_as_zero():
    chain = chain_of([[(0, 2, 2)], [(0, 2, 2), (1, 0, 2)]])
    assert predict_mean(chain, [0.7]) == -0.5
    d = predict_distribution(chain, [0.7])
    assert d.abstentions == 1 and d.coverage == 0.5 and d.hist.total == 1


def test_query_validation():
    chain = chain_of([[(0, 1, 1)]])
    with pytest.raises(DomainError):
        predict_mean(chain, [1.5])
    with pytest.raises(SchemaError):
        predict_mean(chain, {"b": 0.3})
    with pytest.raises(SchemaError):
        predict_mean(chain, [0.1, 0.2])


rule_strategy = st.lists(
    st.tuples(st.integers(0, 1), st.integers(1, 20)).flatmap(
        lambda t: st.tuples(st.just(t[0]), st.integers(0, t[1]), st.just(t[1]))
    ),
    min_size=1, max_size=2, unique_by=lambda r: r[0],
)


@settings(max_examples=200, deadline=None)
@given(st.lists(rule_strategy, min_size=1, max_size=30), st.floats(0, 1))
def test_mean_is_exact_average_of_outputs(rule_lists, x):
    chain = chain_of(rule_lists)
    outs = model_outputs(chain, [x])
    assert all(o is None or -1.0 <= o <= 1.0 for o in outs)
    expect = math.fsum(0.0 if o is None else o for o in outs) / len(outs)
    assert predict_mean(chain, [x]) == expect
    d = predict_distribution(chain, [x])
    assert d.mean == expect
    assert d.hist.total == len(outs) - d.abstentions


def test_distribution_from_real_chain():
    table = small_table()
    chain = run_chain(table, ChainConfig(burn_in=10, retain=50, seed=0))
    d = predict_distribution(chain, table.values[0])
    assert d.n_models == 50 and len(d.outputs) == 50
    assert d.abstentions == 0  # a training row always matches its own rule
    dists = predict_table(chain, table.take(range(5)))
    assert [x.query_id for x in dists] == list(table.object_ids[:5])
    # accuracy on the training table equals the chain's stored mean
    assert chain_accuracy_on(chain, table) == pytest.approx(chain.mean_accuracy(), abs=1e-12)


def test_query_filename_sanitizes():
    assert query_filename("a b/c") == "pred_a_b_c.csv"
    assert query_filename("7") == "pred_7.csv"


def test_emit_report_bundle(tmp_path):
    table = small_table()
    chain = run_chain(table, ChainConfig(burn_in=10, retain=40, seed=1))
    bundle = emit_report(chain, table.take([0, 1]), tmp_path, bins=10)
    names = {p.name for p in bundle.files}
    for f in ("hist_rules.csv", "hist_accuracy.csv", "pred_1.csv", "pred_2.csv", "rules_map.txt",
              "summary.json", "fig_rules.png", "fig_accuracy.png", "fig_trace.png", "fig_pred_1.png"):
        assert f in names and (tmp_path / f).stat().st_size > 0
    rules_hist = Histogram.from_csv((tmp_path / "hist_rules.csv").read_text())
    assert rules_hist.total == 40
    acc_hist = Histogram.from_csv((tmp_path / "hist_accuracy.csv").read_text())
    assert acc_hist.total == 40 and 0.0 <= acc_hist.edges[0] and acc_hist.edges[-1] <= 1.0
    pred = Histogram.from_csv((tmp_path / "pred_1.csv").read_text())
    assert pred.edges[0] == -1.0 and pred.edges[-1] == 1.0 and pred.total == 40
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["map_index"] == int(np.argmax(chain.log_posteriors))
    text = (tmp_path / "rules_map.txt").read_text()
    assert f"Number of rules: {chain.map_model.rule_count}" in text
    assert text.index("Lower Approximation Rules") < text.index("Upper Approximation Rules")


def test_emit_report_without_figures(tmp_path):
    chain = chain_of([[(0, 1, 2)]])
    bundle = emit_report(chain, None, tmp_path, figures=False)
    assert not any(p.suffix == ".png" for p in bundle.files)
    assert not list(tmp_path.glob("*.png"))
