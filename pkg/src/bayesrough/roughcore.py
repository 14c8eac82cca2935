"""Indiscernibility, approximations, rough membership and rule induction.

Objects are referred to by their row index in a :class:`GranularTable`.
A concept ``X`` is any set of object indices; the positive concept of a
decision table is the set of objects with decision 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DomainError, SchemaError
from .granulation import GranularTable, granule_labels

CERTAIN = "certain"
POSSIBLE = "possible"


@dataclass(frozen=True)
class EquivalenceClasses:
    """Partition of ``range(n_objects)`` by agreement on the attributes ``attributes``.

    ``blocks`` maps the shared sub-signature to the member indices.
    ``class_key[i]`` is the key of object ``i``'s block.
    """

    attributes: tuple[int, ...]
    blocks: Mapping[tuple[int, ...], frozenset[int]]
    class_key: tuple[tuple[int, ...], ...]

    @property
    def n_objects(self) -> int:
        return len(self.class_key)

    @property
    def universe(self) -> frozenset[int]:
        return frozenset(range(self.n_objects))

    def class_of(self, x: int) -> frozenset[int]:
        return self.blocks[self.class_key[x]]

    def __iter__(self):
        return iter(self.blocks.values())

    def __len__(self):
        return len(self.blocks)


def _attribute_indices(gt: GranularTable, attributes) -> tuple[int, ...]:
    if attributes is None:
        return tuple(range(gt.signatures.shape[1]))
    names = gt.table.names
    out = []
    for a in attributes:
        if isinstance(a, str):
            if a not in names:
                raise SchemaError(f"unknown attribute {a!r}")
            out.append(names.index(a))
        else:
            if not 0 <= int(a) < len(names):
                raise SchemaError(f"attribute index {a} out of range")
            out.append(int(a))
    if not out:
        raise DomainError("attribute subset must be non-empty")
    return tuple(sorted(set(out)))


def partition_classes(gt: GranularTable, attributes: Iterable | None = None) -> EquivalenceClasses:
    """Indiscernibility classes over an attribute subset (all attributes by default).

    ``attributes`` may mix names and column indices.
    """
    cols = _attribute_indices(gt, attributes)
    sub = gt.signatures[:, cols]
    keys = tuple(tuple(int(v) for v in row) for row in sub)
    members: dict[tuple[int, ...], list[int]] = {}
    for i, key in enumerate(keys):
        members.setdefault(key, []).append(i)
    blocks = {k: frozenset(v) for k, v in sorted(members.items())}
    return EquivalenceClasses(cols, blocks, keys)


def _as_concept(classes: EquivalenceClasses, X) -> frozenset[int]:
    X = frozenset(int(x) for x in X)
    if X and (min(X) < 0 or max(X) >= classes.n_objects):
        raise DomainError("concept contains objects outside the universe")
    return X


def lower_approximation(classes: EquivalenceClasses, X) -> frozenset[int]:
    """Union of the classes entirely inside ``X``."""
    X = _as_concept(classes, X)
    return frozenset().union(*(b for b in classes if b <= X))


def upper_approximation(classes: EquivalenceClasses, X) -> frozenset[int]:
    """Union of the classes that meet ``X``."""
    X = _as_concept(classes, X)
    return frozenset().union(*(b for b in classes if not b.isdisjoint(X)))


@dataclass(frozen=True)
class Approximation:
    lower: frozenset[int]
    upper: frozenset[int]

    @property
    def boundary(self) -> frozenset[int]:
        return self.upper - self.lower

    @property
    def crisp(self) -> bool:
        return self.lower == self.upper


def approximate(classes: EquivalenceClasses, X) -> Approximation:
    return Approximation(lower_approximation(classes, X), upper_approximation(classes, X))


def rough_membership(classes: EquivalenceClasses, x: int, X) -> float:
    """Fraction of ``x``'s class that lies in ``X``."""
    if not 0 <= x < classes.n_objects:
        raise DomainError(f"object {x} is outside the universe")
    block = classes.class_of(x)
    X = _as_concept(classes, X)
    return len(block & X) / len(block)


def approximation_accuracy(approx: Approximation) -> float:
    """``|lower| / |upper|``; an empty concept counts as perfectly approximated."""
    if not approx.upper:
        return 1.0
    return len(approx.lower) / len(approx.upper)


# -- rules -----------------------------------------------------------------


@dataclass(frozen=True)
class Rule:
    """One indiscernibility class read as ``if signature then decision``.

    ``positives`` of the ``support`` matching training objects have
    decision 1.  A tie decides 0 and sets ``tie``.
    """

    signature: tuple[int, ...]
    positives: int
    support: int

    def __post_init__(self):
        if self.support < 1 or not 0 <= self.positives <= self.support:
            raise DomainError(f"invalid rule counts {self.positives}/{self.support}")

    @property
    def plausibility(self) -> float:
        return self.positives / self.support

    @property
    def decision(self) -> int:
        return 1 if 2 * self.positives > self.support else 0

    @property
    def tie(self) -> bool:
        return 2 * self.positives == self.support

    @property
    def certainty(self) -> str:
        return CERTAIN if self.positives in (0, self.support) else POSSIBLE

    @property
    def output(self) -> float:
        """Plausibility mapped onto [-1, 1]."""
        return 2.0 * self.plausibility - 1.0


def _radix(granules) -> np.ndarray:
    granules = [int(k) for k in granules]
    if np.prod(np.array(granules, dtype=float)) >= 2.0 ** 62:
        raise DomainError(f"signature space {granules} too large to index")
    weights = np.ones(len(granules), dtype=np.int64)
    for j in range(len(granules) - 2, -1, -1):
        weights[j] = weights[j + 1] * granules[j + 1]
    return weights


def signature_keys(signatures: np.ndarray, granules) -> np.ndarray:
    """Mixed-radix integer code of each signature row.

    Codes sort in lexicographic signature order (first attribute most
    significant).
    """
    signatures = np.asarray(signatures, dtype=np.int64).reshape(-1, len(granules))
    return signatures @ _radix(granules)


def decode_keys(keys: np.ndarray, granules) -> np.ndarray:
    keys = np.asarray(keys, dtype=np.int64)
    out = np.empty((keys.size, len(granules)), dtype=np.int64)
    for j, w in enumerate(_radix(granules)):
        out[:, j], keys = np.divmod(keys, w)
    return out


class RuleSet(Mapping):
    """Rules keyed by granule signature, in lexicographic signature order."""

    def __init__(self, rules: Iterable[Rule], granules: Sequence[int]):
        self.granules = tuple(int(k) for k in granules)
        self._lookup = None
        self._rules = {}
        for r in sorted(rules, key=lambda r: r.signature):
            if r.signature in self._rules:
                raise DomainError(f"duplicate rule signature {r.signature}")
            self._check(r.signature)
            self._rules[r.signature] = r

    def _check(self, sig):
        if len(sig) != len(self.granules) or any(not 0 <= s < k for s, k in zip(sig, self.granules)):
            raise DomainError(f"signature {sig} is malformed for granules {self.granules}")

    def __getitem__(self, sig):
        return self._rules[tuple(sig)]

    def __iter__(self):
        return iter(self._rules)

    def __len__(self):
        return len(self._rules)

    def __eq__(self, other):
        if not isinstance(other, RuleSet):
            return NotImplemented
        return self.granules == other.granules and self._rules == other._rules

    __hash__ = None

    def __repr__(self):
        return f"RuleSet(N={len(self)}, granules={self.granules})"

    @property
    def rule_count(self) -> int:
        return len(self._rules)

    def certain(self) -> list[Rule]:
        return [r for r in self._rules.values() if r.certainty == CERTAIN]

    def possible(self) -> list[Rule]:
        return [r for r in self._rules.values() if r.certainty == POSSIBLE]

    def to_rows(self) -> list[list[int]]:
        """Compact form: ``[*signature, positives, support]`` per rule."""
        return [[*r.signature, r.positives, r.support] for r in self._rules.values()]

    @classmethod
    def from_rows(cls, rows, granules) -> "RuleSet":
        m = len(granules)
        return cls((Rule(tuple(int(v) for v in row[:m]), int(row[m]), int(row[m + 1])) for row in rows), granules)

    def _index(self):
        if self._lookup is None:
            keys = signature_keys(np.array([list(sig) for sig in self._rules], dtype=np.int64).reshape(-1, len(self.granules)), self.granules)
            outs = np.array([r.output for r in self._rules.values()])
            order = np.argsort(keys, kind="stable")
            self._lookup = (keys[order], outs[order])
        return self._lookup

    def outputs(self, signatures: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized :func:`classify`.

        Returns ``(outputs, matched)``; unmatched rows have output 0.
        """
        signatures = np.asarray(signatures, dtype=np.int64).reshape(-1, len(self.granules))
        keys, outs = self._index()
        query = signature_keys(signatures, self.granules)
        if keys.size == 0 or query.size == 0:
            return np.zeros(query.size), np.zeros(query.size, dtype=bool)
        pos = np.minimum(np.searchsorted(keys, query), keys.size - 1)
        matched = keys[pos] == query
        return np.where(matched, outs[pos], 0.0), matched


def induce_rules(gt: GranularTable) -> RuleSet:
    """One rule per indiscernibility class over all attributes."""
    if len(gt) == 0:
        raise DomainError("cannot induce rules from an empty table")
    if gt.decisions is None:
        raise DomainError("rule induction needs a decision column")
    keys = signature_keys(gt.signatures, gt.granules)
    uniq, inverse, support = np.unique(keys, return_inverse=True, return_counts=True)
    positives = np.bincount(inverse.reshape(-1), weights=gt.decisions == 1, minlength=len(uniq))
    sigs = decode_keys(uniq, gt.granules)
    rules = (
        Rule(tuple(sig), int(p), int(s))
        for sig, p, s in zip(sigs.tolist(), positives, support)
    )
    return RuleSet(rules, gt.granules)


def classify(rules: RuleSet, sig: Sequence[int]) -> float | None:
    """Output in [-1, 1] of the rule matching ``sig``, or ``None`` to abstain."""
    sig = tuple(int(s) for s in sig)
    rules._check(sig)
    rule = rules.get(sig)
    return None if rule is None else rule.output


# -- text report -----------------------------------------------------------


def format_plausibility(rule: Rule, places: int = 5) -> str:
    """Positive-class plausibility truncated (not rounded) to ``places`` decimals."""
    scale = 10 ** places
    q = rule.positives * scale // rule.support
    return f"{q // scale}.{q % scale:0{places}d}"


def format_rules(
    rules: RuleSet,
    names: Sequence[str],
    decision_name: str = "decision",
    *,
    positive: str = "Positive",
    negative: str = "Negative",
    title: str | None = None,
) -> str:
    """Render rules as ``If a = Low and ... Then <decision> = ...`` lines.

    Certain rules (lower approximation of either class) come first, possible
    rules (boundary classes) second, each numbered from 1.
    """
    if len(names) != len(rules.granules):
        raise SchemaError(f"{len(names)} names for {len(rules.granules)} attributes")
    labels = [granule_labels(k) for k in rules.granules]

    def condition(rule):
        return " and ".join(f"{n} = {lab[g]}" for n, lab, g in zip(names, labels, rule.signature))

    lines = []
    if title:
        lines.append(title)
    lines.append(f"Number of rules: {rules.rule_count}")
    lines.append("")
    lines.append("Lower Approximation Rules")
    for i, r in enumerate(rules.certain(), start=1):
        outcome = positive if r.decision == 1 else negative
        lines.append(f"{i}. If {condition(r)} Then {decision_name} = Most Probably {outcome} (support = {r.support})")
    lines.append("")
    lines.append("Upper Approximation Rules")
    for i, r in enumerate(rules.possible(), start=1):
        lines.append(
            f"{i}. If {condition(r)} Then {decision_name} = {positive} "
            f"with plausibility = {format_plausibility(r)} (support = {r.support})"
        )
    return "\n".join(lines) + "\n"
