import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bayesrough.errors import DomainError
from bayesrough.roughcore import (
    CERTAIN,
    POSSIBLE,
    Approximation,
    Rule,
    RuleSet,
    approximate,
    approximation_accuracy,
    classify,
    decode_keys,
    format_plausibility,
    format_rules,
    induce_rules,
    lower_approximation,
    partition_classes,
    rough_membership,
    signature_keys,
    upper_approximation,
)
from conftest import granular


# -- brute-force oracle ----------------------------------------------------


def oracle_classes(sigs, attrs):
    n = len(sigs)
    same = lambda i, j: all(sigs[i][a] == sigs[j][a] for a in attrs)  # noqa: E731
    return {frozenset(j for j in range(n) if same(i, j)) for i in range(n)}


def oracle_lower(sigs, attrs, X):
    return frozenset(i for i in range(len(sigs)) if all(j in X for j in range(len(sigs)) if all(sigs[i][a] == sigs[j][a] for a in attrs)))


def oracle_upper(sigs, attrs, X):
    return frozenset(i for i in range(len(sigs)) if any(j in X for j in range(len(sigs)) if all(sigs[i][a] == sigs[j][a] for a in attrs)))


def test_partition_example():
    gt = granular([[0, 1], [0, 1], [1, 0], [2, 2]])
    blocks = set(partition_classes(gt))
    assert blocks == {frozenset({0, 1}), frozenset({2}), frozenset({3})}
    assert blocks == oracle_classes(gt.signatures.tolist(), [0, 1])


def test_partition_by_name_and_empty_subset():
    gt = granular([[0, 1], [0, 0], [1, 0]])
    assert set(partition_classes(gt, ["a0"])) == {frozenset({0, 1}), frozenset({2})}
    with pytest.raises(DomainError):
        partition_classes(gt, [])


def test_approximation_examples():
    gt = granular([[0], [0], [1], [2]])
    classes = partition_classes(gt)
    X = {0, 2}
    assert lower_approximation(classes, X) == {2}
    assert upper_approximation(classes, X) == {0, 1, 2}
    approx = approximate(classes, X)
    assert approx.boundary == {0, 1}
    assert not approx.crisp
    assert approximation_accuracy(approx) == pytest.approx(1 / 3)
    assert approximation_accuracy(Approximation(frozenset(), frozenset())) == 1.0
    assert approximation_accuracy(approximate(classes, {0, 1})) == 1.0


def test_membership_examples():
    gt = granular([[0]] * 3 + [[1]] * 15)
    classes = partition_classes(gt)
    X = {0, 3}
    assert rough_membership(classes, 1, X) == pytest.approx(1 / 3)
    assert rough_membership(classes, 10, X) == pytest.approx(1 / 15)
    with pytest.raises(DomainError):
        rough_membership(classes, 99, X)


@st.composite
def small_tables(draw):
    n = draw(st.integers(1, 12))
    m = draw(st.integers(1, 3))
    sigs = draw(st.lists(st.lists(st.integers(0, 2), min_size=m, max_size=m), min_size=n, max_size=n))
    X = draw(st.sets(st.integers(0, n - 1)))
    attrs = draw(st.sets(st.integers(0, m - 1), min_size=1))
    return sigs, frozenset(X), sorted(attrs)


@settings(max_examples=300, deadline=None)
@given(small_tables())
def test_rough_core_invariants(case):
    sigs, X, attrs = case
    gt = granular(sigs, granules=[3] * len(sigs[0]))
    classes = partition_classes(gt, attrs)
    assert set(classes) == oracle_classes(sigs, attrs)
    lo, up = lower_approximation(classes, X), upper_approximation(classes, X)
    assert lo == oracle_lower(sigs, attrs, X)
    assert up == oracle_upper(sigs, attrs, X)
    assert lo <= X <= up
    for x in range(len(sigs)):
        mu = rough_membership(classes, x, X)
        assert (mu == 1.0) == (x in lo)
        assert (mu > 0.0) == (x in up)
    alpha = approximation_accuracy(Approximation(lo, up))
    assert 0.0 <= alpha <= 1.0
    assert (alpha == 1.0) == (lo == up)


@settings(max_examples=100, deadline=None)
@given(small_tables())
def test_coarser_subset_is_coarser_partition(case):
    sigs, _, attrs = case
    gt = granular(sigs, granules=[3] * len(sigs[0]))
    fine = partition_classes(gt, attrs)
    for r in range(1, len(attrs)):
        for sub in itertools.combinations(attrs, r):
            coarse = partition_classes(gt, sub)
            for block in fine:
                assert any(block <= c for c in coarse)


# -- rules -----------------------------------------------------------------


def test_rule_examples():
    gt = granular([[1, 1]] * 4, [1, 1, 1, 1])
    rules = induce_rules(gt)
    (r,) = rules.values()
    assert (r.plausibility, r.certainty, r.decision, r.output) == (1.0, CERTAIN, 1, 1.0)
    r = induce_rules(granular([[0]] * 3, [1, 1, 0]))[(0,)]
    assert r.certainty == POSSIBLE and r.decision == 1
    assert r.plausibility == pytest.approx(2 / 3)


def test_tie_decides_negative():
    r = Rule((0,), 2, 4)
    assert r.tie and r.decision == 0 and r.output == 0.0


def test_rule_count_equals_distinct_signatures():
    rng = np.random.default_rng(0)
    space = np.array(list(itertools.product(range(4), repeat=6)))
    chosen = space[rng.choice(len(space), 452, replace=False)]
    rows = np.concatenate([chosen, chosen[rng.integers(0, 452, 12945 - 452)]])
    gt = granular(rows, rng.integers(0, 2, len(rows)), granules=[4] * 6)
    rules = induce_rules(gt)
    assert rules.rule_count == 452
    assert sum(r.support for r in rules.values()) == 12945


def test_classify_examples():
    rules = RuleSet([Rule((1, 1), 3, 3), Rule((0, 1), 1, 3)], (2, 2))
    assert classify(rules, (1, 1)) == 1.0
    assert classify(rules, (0, 1)) == pytest.approx(-1 / 3)
    assert classify(rules, (0, 0)) is None
    with pytest.raises(DomainError):
        classify(rules, (0, 5))


@settings(max_examples=200, deadline=None)
@given(small_tables(), st.data())
def test_rules_partition_table(case, data):
    sigs, _, _ = case
    dec = data.draw(st.lists(st.integers(0, 1), min_size=len(sigs), max_size=len(sigs)))
    gt = granular(sigs, dec, granules=[3] * len(sigs[0]))
    rules = induce_rules(gt)
    assert sum(r.support for r in rules.values()) == len(sigs)
    assert rules.rule_count == len({tuple(s) for s in sigs})
    for s, d in zip(sigs, dec):
        matches = [r for r in rules.values() if list(r.signature) == s]
        assert len(matches) == 1
        r = matches[0]
        oracle = Fraction(sum(dd for ss, dd in zip(sigs, dec) if ss == s), sigs.count(s))
        assert Fraction(r.positives, r.support) == oracle
        assert -1.0 <= r.output <= 1.0
    out, matched = rules.outputs(np.array(sigs))
    assert matched.all()
    assert out.tolist() == [classify(rules, s) for s in sigs]


def test_keys_round_trip():
    granules = (3, 4, 2)
    sigs = np.array(list(itertools.product(*(range(k) for k in granules))))
    keys = signature_keys(sigs, granules)
    assert keys.tolist() == list(range(24))
    assert np.array_equal(decode_keys(keys, granules), sigs)


def test_ruleset_rows_round_trip_and_validation():
    rules = RuleSet([Rule((1, 0), 1, 3), Rule((0, 1), 2, 2)], (2, 2))
    assert list(rules) == [(0, 1), (1, 0)]
    assert RuleSet.from_rows(rules.to_rows(), (2, 2)) == rules
    with pytest.raises(DomainError):
        RuleSet([Rule((2, 0), 1, 1)], (2, 2))
    with pytest.raises(DomainError):
        Rule((0,), 3, 2)
    with pytest.raises(DomainError):
        induce_rules(granular(np.zeros((0, 1)), granules=[2]))


def test_plausibility_truncates():
    assert format_plausibility(Rule((0,), 1, 3)) == "0.33333"
    assert format_plausibility(Rule((0,), 1, 15)) == "0.06666"
    assert format_plausibility(Rule((0,), 2, 3)) == "0.66666"
    assert format_plausibility(Rule((0,), 3, 3)) == "1.00000"


def test_format_rules_sections():
    rules = RuleSet([Rule((3, 0), 4, 4), Rule((0, 1), 1, 3), Rule((1, 1), 0, 2)], (4, 4))
    text = format_rules(rules, ["age", "race"], "HIV")
    assert "Number of rules: 3" in text
    lower, upper = text.split("Upper Approximation Rules")
    assert "If age = Very High and race = Low Then HIV = Most Probably Positive (support = 4)" in lower
    assert "Then HIV = Most Probably Negative (support = 2)" in lower
    assert "If age = Low and race = Med Then HIV = Positive with plausibility = 0.33333 (support = 3)" in upper
