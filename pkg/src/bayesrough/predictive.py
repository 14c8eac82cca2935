"""Posterior predictive outputs: model-averaged plausibility per query.

Every retained model discretizes the query under its own granulization and
classifies it, giving an output in [-1, 1] or an abstention when no rule
matches.  The predictive mean averages over all retained models with
abstentions counted as 0.
"""

from __future__ import annotations

import json
import logging
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import BayesRoughError, DomainError, SchemaError
from .granulation import discretize_value, granulate_table
from .posterior import predictive_accuracy
from .roughcore import format_rules
from .sampler import Chain, Histogram, chain_diagnostics, histogram
from .table import InformationTable

logger = logging.getLogger(__name__)

OUTPUT_RANGE = (-1.0, 1.0)


def _query_vector(chain: Chain, query) -> list[float]:
    schema = chain.schema
    if isinstance(query, Mapping):
        missing = [a.name for a in schema if a.name not in query]
        if missing:
            raise SchemaError(f"query lacks attributes {missing}")
        values = [query[a.name] for a in schema]
    else:
        values = list(query)
        if len(values) != len(schema):
            raise SchemaError(f"query has {len(values)} values for {len(schema)} attributes")
    out = []
    for attr, v in zip(schema, values):
        v = float(v)
        if not attr.contains(v):
            raise DomainError(f"query value {v} for {attr.name!r} outside [{attr.low}, {attr.high}]")
        out.append(v)
    return out


def model_outputs(chain: Chain, query) -> list[float | None]:
    """Per-model output for one query, ``None`` where the model abstains."""
    if len(chain) == 0:
        raise DomainError("chain has no retained models")
    values = _query_vector(chain, query)
    outputs = []
    for model in chain.retained:
        sig = tuple(discretize_value(v, cv) for v, cv in zip(values, model.granulization.cuts))
        rule = model.rules.get(sig)
        outputs.append(None if rule is None else rule.output)
    return outputs


def _mean(outputs: Sequence[float | None]) -> float:
    return math.fsum(o for o in outputs if o is not None) / len(outputs)


def predict_mean(chain: Chain, query) -> float:
    """Model-averaged output for ``query`` (mapping by name or schema-ordered values)."""
    return _mean(model_outputs(chain, query))


@dataclass(frozen=True)
class PredictiveDistribution:
    query_id: str
    outputs: tuple[float | None, ...]
    mean: float
    coverage: float
    hist: Histogram

    @property
    def n_models(self) -> int:
        return len(self.outputs)

    @property
    def matched(self) -> list[float]:
        return [o for o in self.outputs if o is not None]

    @property
    def abstentions(self) -> int:
        return sum(o is None for o in self.outputs)

    @property
    def no_support(self) -> bool:
        return self.abstentions == len(self.outputs)

    def summary(self) -> dict:
        return {
            "query_id": self.query_id,
            "mean": self.mean,
            "coverage": self.coverage,
            "n_models": self.n_models,
            "abstentions": self.abstentions,
            "no_support": self.no_support,
        }


def predict_distribution(chain: Chain, query, bins: int = 20, query_id: str = "query") -> PredictiveDistribution:
    """Full per-model output list, its histogram over [-1, 1], mean and coverage."""
    outputs = tuple(model_outputs(chain, query))
    matched = [o for o in outputs if o is not None]
    hist = histogram(matched, bins, OUTPUT_RANGE)
    if not matched:
        hist = Histogram(np.zeros(bins, dtype=np.int64), np.linspace(*OUTPUT_RANGE, bins + 1))
    return PredictiveDistribution(str(query_id), outputs, _mean(outputs), len(matched) / len(outputs), hist)


def predict_table(chain: Chain, table: InformationTable, bins: int = 20) -> list[PredictiveDistribution]:
    """Predictive distribution for every row of ``table``, keyed by object id."""
    own = tuple(a.name for a in chain.schema)
    missing = [n for n in own if n not in table.names]
    if missing:
        raise SchemaError(f"query table lacks attributes {missing}")
    cols = [table.index(n) for n in own]
    return [
        predict_distribution(chain, table.values[i, cols], bins, table.object_ids[i])
        for i in range(table.n_objects)
    ]


def chain_accuracy_on(chain: Chain, table: InformationTable) -> float:
    """Mean over retained models of each model's accuracy on ``table``."""
    accs = [predictive_accuracy(m.rules, granulate_table(table, m.granulization)) for m in chain.retained]
    return math.fsum(accs) / len(accs)


# -- report bundle ---------------------------------------------------------

_SAFE = re.compile(r"[^A-Za-z0-9_.-]+")


def query_filename(query_id: str) -> str:
    return f"pred_{_SAFE.sub('_', str(query_id)) or 'query'}.csv"


@dataclass(frozen=True)
class ReportBundle:
    directory: Path
    files: tuple[Path, ...]
    summary: dict


def _write(path: Path, text: str, written: list) -> None:
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise BayesRoughError(f"cannot write {path}: {exc}") from exc
    written.append(path)


def emit_report(
    chain: Chain,
    queries: Sequence[PredictiveDistribution] | InformationTable | None,
    out_dir,
    *,
    bins: int = 20,
    figures: bool = True,
    decision_name: str | None = None,
) -> ReportBundle:
    """Write the plot-ready report files for a finished chain.

    The bundle holds ``hist_rules.csv``, ``hist_accuracy.csv``, one
    ``pred_<id>.csv`` histogram per query, ``rules_map.txt`` (the MAP
    model's rules) and ``summary.json``.  With ``figures`` the matching
    PNG renderings are written next to them.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise BayesRoughError(f"cannot create report directory {out}: {exc}") from exc
    if isinstance(queries, InformationTable):
        queries = predict_table(chain, queries, bins)
    queries = list(queries or [])
    ids = [q.query_id for q in queries]
    if len(set(map(query_filename, ids))) != len(ids):
        raise DomainError("query ids collide after filename sanitizing")

    diag = chain_diagnostics(chain, bins)
    decision_name = decision_name or chain.meta.get("decision_column") or "decision"
    names = [a.name for a in chain.schema]
    written: list[Path] = []

    _write(out / "hist_rules.csv", diag.rule_hist.to_csv(), written)
    _write(out / "hist_accuracy.csv", diag.accuracy_hist.to_csv(), written)
    for q in queries:
        _write(out / query_filename(q.query_id), q.hist.to_csv(), written)
    map_model = chain.map_model
    title = (
        f"MAP model (retained index {chain.map_index}, accuracy {map_model.accuracy:.4f}, "
        f"log posterior {map_model.log_posterior:.6f})"
    )
    _write(out / "rules_map.txt", format_rules(map_model.rules, names, decision_name, title=title), written)

    summary = {
        "retained": len(chain),
        "acceptance_rate": chain.acceptance_rate,
        "mean_accuracy": chain.mean_accuracy(),
        "mean_rule_count": chain.mean_rule_count(),
        "map_index": chain.map_index,
        "map_cuts": map_model.granulization.to_dict(),
        "queries": [q.summary() for q in queries],
    }
    _write(out / "summary.json", json.dumps(summary, indent=2) + "\n", written)

    if figures:
        from . import plotting

        fig_paths = [out / "fig_rules.png", out / "fig_accuracy.png", out / "fig_trace.png"]
        plotting.histogram_figure(diag.rule_hist, fig_paths[0], "Number of rules", "Distribution of number of rules")
        plotting.histogram_figure(diag.accuracy_hist, fig_paths[1], "Accuracy", "Accuracy of retained models")
        plotting.trace_figure(chain, fig_paths[2])
        for q in queries:
            p = out / query_filename(q.query_id).replace(".csv", ".png").replace("pred_", "fig_pred_", 1)
            plotting.histogram_figure(
                q.hist, p, "Plausibility output", f"Plausibility distribution, query {q.query_id}",
                vline=q.mean, vline_label=f"mean = {q.mean:.3f}",
            )
            fig_paths.append(p)
        written.extend(fig_paths)

    return ReportBundle(out, tuple(written), summary)
