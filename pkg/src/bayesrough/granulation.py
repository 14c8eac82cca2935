"""Granule space: per-attribute cut points and discretization into signatures.

An attribute with ``k`` granules carries ``k - 1`` strictly increasing cuts
inside its declared range.  Granule ``i`` is the half-open interval
``[cut[i-1], cut[i])``; the first granule is open below and the last one is
closed at the top of the range, so a value equal to a cut goes to the upper
granule.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, DomainError, ProposalError, SchemaError
from .table import AttributeSpec, InformationTable, validate_schema

logger = logging.getLogger(__name__)

DEFAULT_GRANULES = 4
MIN_SEPARATION = 1e-6  # fraction of the range width
DEFAULT_STEP_FRACTION = 0.05
DEFAULT_RETRIES = 100

_LABELS = {
    2: ("Low", "High"),
    3: ("Low", "Med", "High"),
    4: ("Low", "Med", "High", "Very High"),
}


def granule_labels(k: int) -> tuple[str, ...]:
    """Linguistic names of the ``k`` granules, lowest first."""
    if k in _LABELS:
        return _LABELS[k]
    return tuple(f"Level {i + 1}" for i in range(k))


def discretize_value(value: float, cuts: Sequence[float]) -> int:
    """Index of the granule holding ``value``: the number of cuts <= value."""
    return int(np.searchsorted(np.asarray(cuts, dtype=np.float64), value, side="right"))


def discretize_column(values: np.ndarray, cuts: Sequence[float]) -> np.ndarray:
    return np.searchsorted(np.asarray(cuts, dtype=np.float64), values, side="right")


def _separation(attr: AttributeSpec) -> float:
    return MIN_SEPARATION * attr.width


def _valid_cuts(cuts: np.ndarray, attr: AttributeSpec) -> bool:
    if cuts.size == 0:
        return False
    if not (cuts[0] > attr.low and cuts[-1] < attr.high):
        return False
    return bool(np.all(np.diff(cuts) >= _separation(attr)))


@dataclass(frozen=True)
class Granulization:
    """Cut vectors for every attribute of a schema, in schema order."""

    schema: tuple[AttributeSpec, ...]
    cuts: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        schema = validate_schema(self.schema)
        cuts = tuple(tuple(float(c) for c in cv) for cv in self.cuts)
        if len(cuts) != len(schema):
            raise SchemaError(f"{len(cuts)} cut vectors for {len(schema)} attributes")
        for attr, cv in zip(schema, cuts):
            if not _valid_cuts(np.asarray(cv), attr):
                raise DomainError(
                    f"attribute {attr.name!r}: cuts {list(cv)} must be non-empty, strictly inside "
                    f"[{attr.low}, {attr.high}] and separated by at least {_separation(attr):g}"
                )
        object.__setattr__(self, "schema", schema)
        object.__setattr__(self, "cuts", cuts)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.schema)

    @property
    def granules(self) -> tuple[int, ...]:
        return tuple(len(cv) + 1 for cv in self.cuts)

    def cuts_for(self, name: str) -> tuple[float, ...]:
        try:
            return self.cuts[self.names.index(name)]
        except ValueError:
            raise SchemaError(f"granulization has no attribute {name!r}") from None

    def flat(self) -> tuple[float, ...]:
        return tuple(c for cv in self.cuts for c in cv)

    def replace(self, index: int, cuts: Sequence[float]) -> "Granulization":
        new = list(self.cuts)
        new[index] = tuple(cuts)
        return Granulization(self.schema, tuple(new))

    def trace_columns(self) -> list[str]:
        return [f"{a.name}_c{j + 1}" for a, cv in zip(self.schema, self.cuts) for j in range(len(cv))]

    def to_dict(self) -> dict:
        return {a.name: list(cv) for a, cv in zip(self.schema, self.cuts)}

    @classmethod
    def from_dict(cls, schema: Sequence[AttributeSpec], data: Mapping[str, Sequence[float]]) -> "Granulization":
        schema = validate_schema(schema)
        missing = [a.name for a in schema if a.name not in data]
        if missing:
            raise SchemaError(f"no cuts for attributes {missing}")
        return cls(schema, tuple(tuple(data[a.name]) for a in schema))


@dataclass(frozen=True, eq=False)
class GranularTable:
    """A table discretized under a granulization.

    ``signatures[i, j]`` is object ``i``'s granule index on attribute ``j``.
    """

    table: InformationTable
    granulization: Granulization
    signatures: np.ndarray

    def __len__(self):
        return self.signatures.shape[0]

    @property
    def granules(self) -> tuple[int, ...]:
        return self.granulization.granules

    @property
    def decisions(self) -> np.ndarray | None:
        return self.table.decisions

    def signature(self, i: int) -> tuple[int, ...]:
        return tuple(int(s) for s in self.signatures[i])

    def take(self, rows) -> "GranularTable":
        rows = np.asarray(rows, dtype=np.intp)
        sig = self.signatures[rows]
        sig.setflags(write=False)
        return GranularTable(self.table.take(rows), self.granulization, sig)

    def verify(self) -> bool:
        """Re-discretize the source values and compare with the cache."""
        return bool(np.array_equal(granulate_table(self.table, self.granulization).signatures, self.signatures))


def granulate_table(table: InformationTable, g: Granulization) -> GranularTable:
    """Discretize every value of a clean table under ``g``.

    ``g`` is matched to the table by attribute name; signatures follow the
    table's schema order.
    """
    gnames = g.names
    missing = [n for n in table.names if n not in gnames]
    if missing:
        raise SchemaError(f"granulization lacks attributes {missing}")
    if table.n_objects and np.isnan(table.values).any():
        raise DomainError("table has missing values; clean it before granulation")
    if table.names == gnames:
        ordered = g
    else:
        ordered = Granulization(table.schema, tuple(g.cuts_for(n) for n in table.names))
    sig = np.empty(table.values.shape, dtype=np.int64)
    for j, cv in enumerate(ordered.cuts):
        sig[:, j] = discretize_column(table.values[:, j], cv)
    sig.setflags(write=False)
    return GranularTable(table, ordered, sig)


def _granule_counts(schema, k) -> list[int]:
    if isinstance(k, Mapping):
        missing = [a.name for a in schema if a.name not in k]
        if missing:
            raise ConfigError(f"no granule count for attributes {missing}")
        counts = [k[a.name] for a in schema]
    elif isinstance(k, (int, np.integer)):
        counts = [int(k)] * len(schema)
    else:
        counts = list(k)
        if len(counts) != len(schema):
            raise ConfigError(f"{len(counts)} granule counts for {len(schema)} attributes")
    for attr, c in zip(schema, counts):
        if int(c) != c or c < 2:
            raise ConfigError(f"attribute {attr.name!r}: need at least 2 granules, got {c}")
        if (c - 1) * MIN_SEPARATION >= 1.0:
            raise ConfigError(f"attribute {attr.name!r}: range too narrow to host {c - 1} cuts")
    return [int(c) for c in counts]


def random_granulization(schema, granules_per_attribute=DEFAULT_GRANULES, rng=None, *, max_tries=1000) -> Granulization:
    """Draw cuts uniformly inside each declared range and sort them.

    ``granules_per_attribute`` is an int, a sequence aligned with the schema
    or a mapping from attribute name to granule count.
    """
    schema = validate_schema(schema)
    counts = _granule_counts(schema, granules_per_attribute)
    rng = np.random.default_rng(rng)
    cuts = []
    for attr, k in zip(schema, counts):
        for _ in range(max_tries):
            cv = np.sort(rng.uniform(attr.low, attr.high, size=k - 1))
            if _valid_cuts(cv, attr):
                cuts.append(tuple(cv.tolist()))
                break
        else:
            raise ConfigError(f"attribute {attr.name!r}: could not place {k - 1} separated cuts")
    return Granulization(schema, tuple(cuts))


def perturb(g: Granulization, step_fraction: float = DEFAULT_STEP_FRACTION, rng=None, *,
            max_retries: int = DEFAULT_RETRIES) -> Granulization:
    """Move one uniformly chosen cut by a Gaussian step and re-sort.

    The displacement has standard deviation ``step_fraction`` times the
    attribute's range width.  Cuts are clamped to stay strictly inside the
    range; a draw that breaks the minimum separation is redrawn, up to
    ``max_retries`` times, after which :class:`ProposalError` is raised.
    """
    if not 0.0 <= step_fraction <= 1.0:
        raise DomainError(f"step_fraction must lie in [0, 1], got {step_fraction}")
    rng = np.random.default_rng(rng)
    i = int(rng.integers(len(g.schema)))
    attr = g.schema[i]
    current = np.array(g.cuts[i])
    j = int(rng.integers(current.size))
    sep = _separation(attr)
    sigma = step_fraction * attr.width
    for _ in range(max_retries):
        cv = current.copy()
        cv[j] += rng.normal(0.0, sigma) if sigma > 0 else 0.0
        cv = np.clip(np.sort(cv), attr.low + sep, attr.high - sep)
        if _valid_cuts(cv, attr):
            return g.replace(i, cv.tolist())
    raise ProposalError(f"no valid move of cut {j} on {attr.name!r} after {max_retries} tries")


class GridProposal:
    """Symmetric kernel over cuts restricted to a finite grid per attribute.

    Picks an attribute and one of its cuts uniformly and moves it to a
    uniformly chosen grid point.  A move onto a point already holding a cut
    leaves the state unchanged, which keeps the kernel symmetric.
    """

    def __init__(self, grid: Mapping[str, Sequence[float]]):
        self.grid = {name: np.sort(np.asarray(points, dtype=np.float64)) for name, points in grid.items()}

    def __call__(self, g: Granulization, rng) -> Granulization:
        i = int(rng.integers(len(g.schema)))
        attr = g.schema[i]
        points = self.grid[attr.name]
        cv = list(g.cuts[i])
        j = int(rng.integers(len(cv)))
        target = float(points[int(rng.integers(points.size))])
        if target in cv:
            return g
        cv[j] = target
        return g.replace(i, sorted(cv))
