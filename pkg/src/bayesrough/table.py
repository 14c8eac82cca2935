"""Decision tables: schema, CSV ingestion, consistency predicates and cleaning.

A table holds one row per object, one real value per condition attribute and
an optional binary decision.  Missing cells are kept as NaN (values) or
``MISSING_DECISION`` (decisions) until :func:`clean_table` removes them.
"""

from __future__ import annotations

import csv
import io
import json
import math
import operator
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, ParseError, SchemaError

NUMERIC = "numeric"
CATEGORICAL = "categorical"
KINDS = (NUMERIC, CATEGORICAL)

MISSING_DECISION = -1
OUT_OF_RANGE = "out_of_range"


@dataclass(frozen=True)
class AttributeSpec:
    """A condition attribute and its declared closed value range."""

    name: str
    kind: str = NUMERIC
    low: float = 0.0
    high: float = 1.0

    def __post_init__(self):
        if not self.name:
            raise SchemaError("attribute name must be non-empty")
        if self.kind not in KINDS:
            raise SchemaError(f"attribute {self.name!r}: unknown kind {self.kind!r}")
        low, high = float(self.low), float(self.high)
        if not (math.isfinite(low) and math.isfinite(high)) or not low < high:
            raise SchemaError(
                f"attribute {self.name!r}: range lower bound must be below upper "
                f"bound, got [{self.low}, {self.high}]"
            )
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "high", high)

    @property
    def width(self) -> float:
        return self.high - self.low

    def contains(self, value) -> bool:
        return self.low <= value <= self.high

    def to_dict(self) -> dict:
        return {"name": self.name, "kind": self.kind, "range": [self.low, self.high]}

    @classmethod
    def from_dict(cls, data: dict) -> "AttributeSpec":
        try:
            low, high = data["range"]
            return cls(data["name"], data.get("kind", NUMERIC), low, high)
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"malformed attribute definition {data!r}") from exc


def validate_schema(schema: Iterable[AttributeSpec]) -> tuple[AttributeSpec, ...]:
    schema = tuple(schema)
    if not schema:
        raise SchemaError("schema must declare at least one attribute")
    names = [a.name for a in schema]
    dupes = sorted({n for n in names if names.count(n) > 1})
    if dupes:
        raise SchemaError(f"duplicate attribute names: {dupes}")
    return schema


def schema_from_dicts(items: Iterable[dict]) -> tuple[AttributeSpec, ...]:
    return validate_schema(AttributeSpec.from_dict(d) for d in items)


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class InformationTable:
    """Objects x condition attributes plus a binary decision attribute.

    ``values`` has shape ``(n_objects, n_attributes)`` with NaN marking
    missing cells.  ``decisions`` is ``None`` for tables without a decision
    column (prediction queries), otherwise an int8 vector of 0/1 with
    ``MISSING_DECISION`` for missing labels.
    """

    schema: tuple[AttributeSpec, ...]
    values: np.ndarray
    decisions: np.ndarray | None = None
    object_ids: tuple[str, ...] = ()
    decision_name: str | None = "decision"

    def __post_init__(self):
        schema = validate_schema(self.schema)
        values = np.array(self.values, dtype=np.float64).reshape(-1, len(schema))
        n = values.shape[0]
        ids = tuple(self.object_ids) or tuple(str(i + 1) for i in range(n))
        if len(ids) != n:
            raise SchemaError(f"{len(ids)} object ids for {n} rows")
        decisions = self.decisions
        if decisions is not None:
            decisions = np.array(decisions, dtype=np.int8).reshape(-1)
            if decisions.shape[0] != n:
                raise SchemaError(f"{decisions.shape[0]} decisions for {n} rows")
            bad = ~np.isin(decisions, (0, 1, MISSING_DECISION))
            if bad.any():
                row = int(np.flatnonzero(bad)[0]) + 1
                raise DomainError(f"row {row}: decision must be 0 or 1", row=row)
            decisions = _readonly(decisions)
        object.__setattr__(self, "schema", schema)
        object.__setattr__(self, "values", _readonly(values))
        object.__setattr__(self, "decisions", decisions)
        object.__setattr__(self, "object_ids", ids)

    def __len__(self):
        return self.values.shape[0]

    @property
    def n_objects(self) -> int:
        return self.values.shape[0]

    @property
    def n_attributes(self) -> int:
        return len(self.schema)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.schema)

    @property
    def has_decisions(self) -> bool:
        return self.decisions is not None

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise SchemaError(f"unknown attribute {name!r}") from None

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.index(name)]

    def missing_mask(self) -> np.ndarray:
        """Rows with at least one missing condition value or decision."""
        mask = np.isnan(self.values).any(axis=1)
        if self.decisions is not None:
            mask |= self.decisions == MISSING_DECISION
        return mask

    def out_of_range_mask(self) -> np.ndarray:
        low = np.array([a.low for a in self.schema])
        high = np.array([a.high for a in self.schema])
        with np.errstate(invalid="ignore"):
            outside = (self.values < low) | (self.values > high)
        return outside.any(axis=1)

    def is_clean(self) -> bool:
        return not (self.missing_mask().any() or self.out_of_range_mask().any())

    def take(self, rows) -> "InformationTable":
        """Sub-table of the given row indices, in the given order."""
        rows = np.asarray(rows, dtype=np.intp)
        return InformationTable(
            self.schema,
            self.values[rows],
            None if self.decisions is None else self.decisions[rows],
            tuple(self.object_ids[i] for i in rows),
            self.decision_name,
        )


# -- CSV ------------------------------------------------------------------


def _open_text(source):
    if isinstance(source, (str, Path)):
        return open(source, newline="", encoding="utf-8"), True
    return source, False


def load_table(
    source,
    schema: Sequence[AttributeSpec],
    decision_column: str | None = "decision",
    *,
    id_column: str | None = None,
    missing_tokens: Iterable[str] = ("",),
    decision_optional: bool = False,
) -> InformationTable:
    """Read a comma-separated decision table.

    Parameters
    ----------
    source : path or text stream
        UTF-8 CSV with a header row.  Columns not named by the schema are
        ignored.
    schema : sequence of AttributeSpec
        Condition attributes, in the order the table will store them.
    decision_column : str or None
        Name of the binary decision column.  ``None`` reads a table
        without decisions.
    id_column : str, optional
        Column holding object identifiers; row numbers are used otherwise.
    missing_tokens : iterable of str
        Cell contents (after stripping whitespace) treated as missing.
    decision_optional : bool
        When true, a header without ``decision_column`` yields a table
        without decisions instead of a schema error.

    Raises
    ------
    SchemaError
        A schema attribute, the decision column or the id column is absent
        from the header.
    ParseError
        A non-numeric cell, a non-integer cell in a categorical column, or a
        row with the wrong number of cells.  Carries the 1-based data row.
    DomainError
        A decision outside {0, 1}.
    """
    schema = validate_schema(schema)
    missing = {t.strip() for t in missing_tokens}
    stream, owned = _open_text(source)
    try:
        reader = csv.reader(stream)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError("input has no header row") from None
        position = {name: i for i, name in enumerate(header)}
        absent = [a.name for a in schema if a.name not in position]
        if absent:
            raise SchemaError(f"columns missing from header: {absent}")
        if decision_column is not None and decision_column not in position:
            if not decision_optional:
                raise SchemaError(f"decision column {decision_column!r} missing from header")
            decision_column = None
        if id_column is not None and id_column not in position:
            raise SchemaError(f"id column {id_column!r} missing from header")

        rows, decisions, ids = [], [], []
        for row_no, cells in enumerate(reader, start=1):
            if not cells:
                continue
            if len(cells) != len(header):
                raise ParseError(
                    f"row {row_no}: expected {len(header)} cells, got {len(cells)}", row=row_no
                )
            rows.append([_parse_value(cells[position[a.name]], a, row_no, missing) for a in schema])
            if decision_column is not None:
                decisions.append(_parse_decision(cells[position[decision_column]], decision_column, row_no, missing))
            ids.append(cells[position[id_column]].strip() if id_column else str(row_no))
    finally:
        if owned:
            stream.close()

    values = np.array(rows, dtype=np.float64).reshape(len(rows), len(schema))
    return InformationTable(
        schema,
        values,
        None if decision_column is None else np.array(decisions, dtype=np.int8),
        tuple(ids),
        decision_column,
    )


def _parse_value(cell, attr, row_no, missing):
    text = cell.strip()
    if text in missing:
        return math.nan
    try:
        value = float(text)
    except ValueError:
        raise ParseError(
            f"row {row_no}, column {attr.name!r}: {text!r} is not a number",
            row=row_no, column=attr.name,
        ) from None
    if not math.isfinite(value):
        raise ParseError(f"row {row_no}, column {attr.name!r}: non-finite value", row=row_no, column=attr.name)
    if attr.kind == CATEGORICAL and value != int(value):
        raise ParseError(
            f"row {row_no}, column {attr.name!r}: categorical code {text!r} is not an integer",
            row=row_no, column=attr.name,
        )
    return value


def _parse_decision(cell, column, row_no, missing):
    text = cell.strip()
    if text in missing:
        return MISSING_DECISION
    try:
        value = float(text)
    except ValueError:
        raise ParseError(
            f"row {row_no}, column {column!r}: {text!r} is not a number", row=row_no, column=column
        ) from None
    if value not in (0.0, 1.0):
        raise DomainError(f"row {row_no}: decision {text!r} is not 0 or 1", row=row_no)
    return int(value)


def _format_value(value) -> str:
    if math.isnan(value):
        return ""
    if float(value).is_integer():
        return str(int(value))
    return repr(float(value))


def write_table(table: InformationTable, dest, *, id_column: str | None = None) -> None:
    """Write ``table`` in the CSV format :func:`load_table` reads."""
    stream, owned = (open(dest, "w", newline="", encoding="utf-8"), True) if isinstance(dest, (str, Path)) else (dest, False)
    try:
        writer = csv.writer(stream, lineterminator="\n")
        header = ([id_column] if id_column else []) + list(table.names)
        if table.has_decisions:
            header.append(table.decision_name or "decision")
        writer.writerow(header)
        for i in range(table.n_objects):
            row = [table.object_ids[i]] if id_column else []
            row.extend(_format_value(v) for v in table.values[i])
            if table.has_decisions:
                d = int(table.decisions[i])
                row.append("" if d == MISSING_DECISION else str(d))
            writer.writerow(row)
    finally:
        if owned:
            stream.close()


def table_to_csv(table: InformationTable, **kwargs) -> str:
    buf = io.StringIO()
    write_table(table, buf, **kwargs)
    return buf.getvalue()


# -- consistency predicates ------------------------------------------------

_OPS = {
    "==": operator.eq,
    "!=": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}


@dataclass(frozen=True)
class Condition:
    """``attribute <op> value`` or, with ``other`` set, ``attribute <op> other``."""

    attribute: str
    op: str
    value: float | None = None
    other: str | None = None

    def __post_init__(self):
        if self.op not in _OPS:
            raise SchemaError(f"unknown comparison {self.op!r}; use one of {sorted(_OPS)}")
        if (self.value is None) == (self.other is None):
            raise SchemaError("a condition compares against exactly one of a value or another attribute")

    def attributes(self) -> tuple[str, ...]:
        return (self.attribute,) if self.other is None else (self.attribute, self.other)

    def evaluate(self, table: InformationTable) -> np.ndarray:
        left = table.column(self.attribute)
        right = table.column(self.other) if self.other is not None else float(self.value)
        with np.errstate(invalid="ignore"):
            return _OPS[self.op](left, right)

    def to_dict(self) -> dict:
        out = {"attribute": self.attribute, "op": self.op}
        if self.other is None:
            out["value"] = self.value
        else:
            out["other"] = self.other
        return out


@dataclass(frozen=True)
class ConsistencyPredicate:
    """A named conjunction of conditions; rows satisfying it are invalid."""

    name: str
    conditions: tuple[Condition, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "conditions", tuple(self.conditions))
        if not self.conditions:
            raise SchemaError(f"predicate {self.name!r} has no conditions")

    def attributes(self) -> set[str]:
        return {a for c in self.conditions for a in c.attributes()}

    def check_schema(self, names: Iterable[str]) -> None:
        unknown = sorted(self.attributes() - set(names))
        if unknown:
            raise SchemaError(f"predicate {self.name!r} references unknown attributes {unknown}")

    def mask(self, table: InformationTable) -> np.ndarray:
        self.check_schema(table.names)
        out = np.ones(table.n_objects, dtype=bool)
        for cond in self.conditions:
            out &= cond.evaluate(table)
        return out

    def to_dict(self) -> dict:
        return {"name": self.name, "conditions": [c.to_dict() for c in self.conditions]}

    @classmethod
    def from_dict(cls, data: dict) -> "ConsistencyPredicate":
        if "builtin" in data:
            try:
                return BUILTIN_PREDICATES[data["builtin"]]
            except KeyError:
                raise SchemaError(f"unknown built-in predicate {data['builtin']!r}") from None
        try:
            conds = tuple(Condition(**c) for c in data["conditions"])
            return cls(data["name"], conds)
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"malformed predicate {data!r}") from exc


GRAVIDITY_ZERO_PARITY_POSITIVE = ConsistencyPredicate(
    "gravidity_zero_parity_positive",
    (Condition("gravidity", "==", 0.0), Condition("parity", ">=", 1.0)),
)
# Off unless requested: multiple births make parity > gravidity plausible.
PARITY_EXCEEDS_GRAVIDITY = ConsistencyPredicate(
    "parity_exceeds_gravidity",
    (Condition("parity", ">", other="gravidity"),),
)
BUILTIN_PREDICATES = {
    p.name: p for p in (GRAVIDITY_ZERO_PARITY_POSITIVE, PARITY_EXCEEDS_GRAVIDITY)
}


# -- cleaning --------------------------------------------------------------


@dataclass(frozen=True)
class CleanReport:
    total_in: int
    removed_missing: int
    removed_inconsistent: int
    remaining: int
    per_predicate: dict = field(default_factory=dict)

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.total_in, self.removed_missing, self.removed_inconsistent, self.remaining)

    def to_dict(self) -> dict:
        return {
            "total_in": self.total_in,
            "removed_missing": self.removed_missing,
            "removed_inconsistent": self.removed_inconsistent,
            "remaining": self.remaining,
            "per_predicate": dict(self.per_predicate),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "CleanReport":
        return cls(
            data["total_in"], data["removed_missing"], data["removed_inconsistent"],
            data["remaining"], dict(data.get("per_predicate", {})),
        )


def clean_table(
    table: InformationTable, predicates: Sequence[ConsistencyPredicate] = ()
) -> tuple[InformationTable, CleanReport]:
    """Drop incomplete rows, then rows flagged by any predicate.

    Each removed row is counted under exactly one cause, checked in order:
    missing cells first, then the predicates in the given order, then values
    outside their declared range (reported under ``"out_of_range"``).
    Surviving rows keep their relative order.
    """
    for p in predicates:
        p.check_schema(table.names)

    removed = table.missing_mask()
    n_missing = int(removed.sum())
    per_predicate = {}
    for p in predicates:
        hit = p.mask(table) & ~removed
        per_predicate[p.name] = per_predicate.get(p.name, 0) + int(hit.sum())
        removed |= hit
    outside = table.out_of_range_mask() & ~removed
    if outside.any():
        per_predicate[OUT_OF_RANGE] = int(outside.sum())
    removed |= outside

    keep = np.flatnonzero(~removed)
    inconsistent = int(removed.sum()) - n_missing
    report = CleanReport(table.n_objects, n_missing, inconsistent, len(keep), per_predicate)
    return table.take(keep), report
