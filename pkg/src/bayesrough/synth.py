"""Synthetic decision tables with a planted granule structure.

Attribute values are drawn uniformly inside their ranges (integers for
categorical attributes).  Each object's decision is drawn from the
probability its planted granule signature carries, then flipped with
probability ``noise``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import ConfigError, DomainError
from .granulation import Granulization, granulate_table
from .table import CATEGORICAL, NUMERIC, AttributeSpec, InformationTable, schema_from_dicts


@dataclass(frozen=True)
class SynthSpec:
    planted: Granulization
    rule_map: Mapping[tuple[int, ...], float]
    n_objects: int
    noise: float = 0.0
    seed: int = 0
    default_probability: float = 0.0
    decision_name: str = "decision"

    def __post_init__(self):
        if not 0.0 <= self.noise < 0.5:
            raise ConfigError(f"noise must lie in [0, 0.5), got {self.noise}")
        if not isinstance(self.n_objects, int) or self.n_objects < 0:
            raise ConfigError(f"n_objects must be a non-negative integer, got {self.n_objects!r}")
        if not 0.0 <= self.default_probability <= 1.0:
            raise ConfigError("default_probability must lie in [0, 1]")
        granules = self.planted.granules
        rules = {}
        for sig, p in dict(self.rule_map).items():
            sig = tuple(int(s) for s in sig)
            if len(sig) != len(granules) or any(not 0 <= s < k for s, k in zip(sig, granules)):
                raise ConfigError(f"planted signature {sig} does not fit granules {granules}")
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"planted probability {p} for {sig} outside [0, 1]")
            rules[sig] = float(p)
        object.__setattr__(self, "rule_map", rules)

    @property
    def schema(self) -> tuple[AttributeSpec, ...]:
        return self.planted.schema

    def probability(self, sig) -> float:
        return self.rule_map.get(tuple(sig), self.default_probability)

    def bayes_accuracy(self) -> float:
        """Best achievable accuracy, cells weighted by their expected share of objects."""
        total = 0.0
        for sig in itertools.product(*(range(k) for k in self.planted.granules)):
            p = self.probability(sig)
            q = p * (1 - self.noise) + (1 - p) * self.noise
            total += _cell_volume(self.planted, sig) * max(q, 1 - q)
        return total

    def to_dict(self) -> dict:
        return {
            "schema": [a.to_dict() for a in self.schema],
            "planted_cuts": self.planted.to_dict(),
            "rules": [{"signature": list(s), "p": p} for s, p in sorted(self.rule_map.items())],
            "default_probability": self.default_probability,
            "noise": self.noise,
            "n_objects": self.n_objects,
            "seed": self.seed,
            "decision_name": self.decision_name,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "SynthSpec":
        """Build from JSON; ``{"preset": name, ...}`` selects a preset with keyword overrides."""
        data = dict(data)
        preset = data.pop("preset", None)
        if preset is not None:
            try:
                factory = PRESETS[preset]
            except KeyError:
                raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}") from None
            try:
                return factory(**data)
            except TypeError as exc:
                raise ConfigError(f"bad settings for preset {preset!r}: {exc}") from exc
        try:
            schema = schema_from_dicts(data["schema"])
            planted = Granulization.from_dict(schema, data["planted_cuts"])
            rules = {tuple(r["signature"]): r["p"] for r in data.get("rules", [])}
            return cls(
                planted, rules, int(data["n_objects"]), float(data.get("noise", 0.0)),
                int(data.get("seed", 0)), float(data.get("default_probability", 0.0)),
                data.get("decision_name", "decision"),
            )
        except (KeyError, TypeError, ValueError, DomainError) as exc:
            raise ConfigError(f"malformed synthetic spec: {exc}") from exc


def _cell_volume(planted: Granulization, sig) -> float:
    vol = 1.0
    for attr, cv, s in zip(planted.schema, planted.cuts, sig):
        edges = [attr.low, *cv, attr.high]
        if attr.kind == CATEGORICAL:
            codes = np.arange(np.ceil(attr.low), np.floor(attr.high) + 1)
            inside = (codes >= edges[s]) & ((codes < edges[s + 1]) | (s == len(cv)))
            vol *= inside.sum() / codes.size
        else:
            vol *= (edges[s + 1] - edges[s]) / attr.width
    return vol


@dataclass(frozen=True)
class GroundTruth:
    planted: Granulization
    rule_map: Mapping[tuple[int, ...], float]
    signature_counts: Mapping[tuple[int, ...], int] = field(default_factory=dict)
    noise: float = 0.0
    bayes_accuracy: float = 1.0

    def to_dict(self) -> dict:
        return {
            "planted_cuts": self.planted.to_dict(),
            "rules": [{"signature": list(s), "p": p} for s, p in sorted(self.rule_map.items())],
            "signature_counts": [{"signature": list(s), "count": c} for s, c in sorted(self.signature_counts.items())],
            "n_signatures": len(self.signature_counts),
            "noise": self.noise,
            "bayes_accuracy": self.bayes_accuracy,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"


def generate(spec: SynthSpec) -> tuple[InformationTable, GroundTruth]:
    """Draw a table from ``spec``; reproducible from ``spec.seed``."""
    rng = np.random.default_rng(spec.seed)
    n, schema = spec.n_objects, spec.schema
    values = np.empty((n, len(schema)))
    for j, attr in enumerate(schema):
        if attr.kind == CATEGORICAL:
            values[:, j] = rng.integers(int(np.ceil(attr.low)), int(np.floor(attr.high)) + 1, size=n)
        else:
            values[:, j] = rng.uniform(attr.low, attr.high, size=n)
    probe = InformationTable(schema, values, None, decision_name=None)
    sigs = granulate_table(probe, spec.planted).signatures
    p = np.array([spec.probability(s) for s in map(tuple, sigs.tolist())])
    decisions = rng.random(n) < p
    flips = rng.random(n) < spec.noise
    decisions = (decisions ^ flips).astype(np.int8)

    counts: dict[tuple[int, ...], int] = {}
    for s in map(tuple, sigs.tolist()):
        counts[s] = counts.get(s, 0) + 1
    table = InformationTable(schema, values, decisions, decision_name=spec.decision_name)
    truth = GroundTruth(spec.planted, dict(spec.rule_map), counts, spec.noise, spec.bayes_accuracy())
    return table, truth


# -- presets ---------------------------------------------------------------


def checkerboard_spec(n_objects=5000, n_attributes=3, granules=3, noise=0.1, seed=0, cuts=None,
                      ranges=None, decision_name="decision") -> SynthSpec:
    """Decision 1 exactly on cells whose granule indices sum to an even number.

    Every planted cut separates cells of opposite label, so each one moves
    the achievable accuracy.  Default cuts are unevenly spaced so that an
    equal-width discretization does not recover them by accident.
    """
    ranges = ranges or [(0.0, 100.0)] * n_attributes
    schema = tuple(AttributeSpec(f"x{j + 1}", NUMERIC, lo, hi) for j, (lo, hi) in enumerate(ranges))
    if cuts is None:
        base = np.linspace(0.0, 1.0, granules + 1)[1:-1]
        shift = 0.08 * np.where(np.arange(granules - 1) % 2 == 0, -1.0, 1.0)
        cuts = [tuple(lo + (hi - lo) * (base + shift)) for lo, hi in ranges]
    planted = Granulization(schema, tuple(tuple(c) for c in cuts))
    rule_map = {
        sig: float(sum(sig) % 2 == 0)
        for sig in itertools.product(*(range(k) for k in planted.granules))
    }
    return SynthSpec(planted, rule_map, n_objects, noise, seed, 0.0, decision_name)


DEMOGRAPHIC_ATTRIBUTES = (
    AttributeSpec("race", CATEGORICAL, 1, 4),
    AttributeSpec("mothers_age", NUMERIC, 13, 50),
    AttributeSpec("education", CATEGORICAL, 0, 13),
    AttributeSpec("gravidity", CATEGORICAL, 0, 11),
    AttributeSpec("parity", CATEGORICAL, 0, 11),
    AttributeSpec("fathers_age", NUMERIC, 15, 70),
)


def demographic_spec(n_objects=2000, noise=0.1, seed=0, decision_name="hiv_status") -> SynthSpec:
    """Six antenatal-survey-like attributes with four planted granules each.

    Risk rises for young mothers with older partners and low education;
    the values are illustrative only.
    """
    cuts = (
        (1.5, 2.5, 3.5),
        (20.0, 27.0, 33.0),
        (4.5, 8.5, 11.5),
        (1.5, 2.5, 4.5),
        (0.5, 1.5, 3.5),
        (25.0, 32.0, 40.0),
    )
    planted = Granulization(DEMOGRAPHIC_ATTRIBUTES, cuts)
    rule_map = {}
    for sig in itertools.product(*(range(k) for k in planted.granules)):
        race, mage, edu, _, _, fage = sig
        score = (race == 0) + (mage <= 1) + (edu <= 1) + (fage >= 2)
        rule_map[sig] = 1.0 if score >= 3 else 0.0
    return SynthSpec(planted, rule_map, n_objects, noise, seed, 0.0, decision_name)


PRESETS = {"checkerboard": checkerboard_spec, "demographic": demographic_spec}
