"""Metropolis sampling over the granule space.

A chain starts from a random granulization and repeatedly proposes a
perturbed one, scores it and accepts or rejects it.  The first ``burn_in``
emitted states are discarded and the next ``retain`` are kept.

Two rejection semantics are available:

``standard``
    A rejected proposal re-emits the current state.  This is the usual
    Metropolis chain and its stationary law is the model posterior.
``paper-literal``
    A rejected proposal emits nothing and a fresh proposal is drawn from
    the current state, so the chain only records accepted moves.  Its
    stationary law is *not* the posterior in general.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from collections import OrderedDict
from dataclasses import asdict, dataclass, field
from functools import partial
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from .errors import ChainError, ConfigError, DomainError, ParseError, ProposalError
from .granulation import DEFAULT_GRANULES, DEFAULT_STEP_FRACTION, Granulization, perturb, random_granulization
from .posterior import DEFAULT_LAMBDA, ModelScorer, PosteriorConfig, RoughModel
from .table import AttributeSpec, InformationTable, schema_from_dicts

logger = logging.getLogger(__name__)

STANDARD = "standard"
PAPER_LITERAL = "paper-literal"
REJECTION_MODES = (STANDARD, PAPER_LITERAL)
CHAIN_FORMAT = "bayesrough-chain"
CHAIN_VERSION = 1


@dataclass(frozen=True)
class ChainConfig:
    burn_in: int = 500
    retain: int = 500
    step_fraction: float = DEFAULT_STEP_FRACTION
    lam: float = DEFAULT_LAMBDA
    seed: int = 0
    rejection_mode: str = STANDARD
    granules: int | tuple | Mapping = DEFAULT_GRANULES
    holdout: float | None = None
    max_proposals: int | None = None
    cache_size: int = 4096

    def __post_init__(self):
        if isinstance(self.granules, list):
            object.__setattr__(self, "granules", tuple(self.granules))
        if isinstance(self.granules, Mapping):
            object.__setattr__(self, "granules", dict(self.granules))
        if not isinstance(self.burn_in, int) or self.burn_in < 0:
            raise ConfigError(f"burn_in must be a non-negative integer, got {self.burn_in!r}")
        if not isinstance(self.retain, int) or self.retain < 1:
            raise ConfigError(f"retain must be a positive integer, got {self.retain!r}")
        if not 0.0 < self.step_fraction <= 1.0:
            raise ConfigError(f"step_fraction must lie in (0, 1], got {self.step_fraction!r}")
        if self.rejection_mode not in REJECTION_MODES:
            raise ConfigError(f"rejection_mode must be one of {REJECTION_MODES}, got {self.rejection_mode!r}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed!r}")
        if self.max_proposals is not None and self.max_proposals < 1:
            raise ConfigError("max_proposals must be positive")
        PosteriorConfig(self.lam, self.holdout)

    @property
    def posterior(self) -> PosteriorConfig:
        return PosteriorConfig(self.lam, self.holdout)

    @property
    def n_states(self) -> int:
        return self.burn_in + self.retain

    def to_dict(self) -> dict:
        out = asdict(self)
        if isinstance(self.granules, tuple):
            out["granules"] = list(self.granules)
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> "ChainConfig":
        known = cls.__dataclass_fields__
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise ConfigError(f"unknown chain settings {unknown}")
        return cls(**data)


def accept(delta: float, rng) -> bool:
    """Metropolis test on a log-posterior difference.

    Improvements are always accepted.  Otherwise accept when
    ``delta >= log(xi)`` for ``xi`` uniform on (0, 1); a draw of exactly 0
    is redrawn.
    """
    if delta > 0:
        return True
    xi = rng.random()
    while xi == 0.0:
        xi = rng.random()
    return delta >= math.log(xi)


def metropolis_step(current: RoughModel, proposal: RoughModel, rng) -> tuple[RoughModel, bool]:
    """Return ``(next_state, accepted)``; a rejection keeps ``current``."""
    if accept(proposal.log_posterior - current.log_posterior, rng):
        return proposal, True
    return current, False


@dataclass(frozen=True, eq=False)
class Chain:
    """Retained states of one run plus its bookkeeping.

    ``retained_steps[i]`` is the emission index of ``retained[i]``; the
    initial state has index 0, so every entry is ``>= config.burn_in``.
    """

    config: ChainConfig
    schema: tuple[AttributeSpec, ...]
    retained: tuple[RoughModel, ...]
    retained_steps: tuple[int, ...]
    accepted: int
    proposals: int
    proposal_failures: int = 0
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.retained)

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.proposals if self.proposals else 0.0

    @property
    def accuracies(self) -> np.ndarray:
        return np.array([m.accuracy for m in self.retained])

    @property
    def rule_counts(self) -> np.ndarray:
        return np.array([m.rule_count for m in self.retained], dtype=np.int64)

    @property
    def log_posteriors(self) -> np.ndarray:
        return np.array([m.log_posterior for m in self.retained])

    def mean_accuracy(self) -> float:
        return math.fsum(m.accuracy for m in self.retained) / len(self.retained)

    def mean_rule_count(self) -> float:
        return math.fsum(m.rule_count for m in self.retained) / len(self.retained)

    @property
    def map_index(self) -> int:
        """Index of the retained model with the largest log posterior (earliest on ties)."""
        return int(np.argmax(self.log_posteriors))

    @property
    def map_model(self) -> RoughModel:
        return self.retained[self.map_index]

    def trace_columns(self) -> list[str]:
        return self.retained[0].granulization.trace_columns() + ["accuracy", "n_rules", "log_posterior"]

    def trace_rows(self) -> list[list]:
        return [
            [*m.granulization.flat(), m.accuracy, m.rule_count, m.log_posterior]
            for m in self.retained
        ]


def run_chain(
    table: InformationTable,
    config: ChainConfig = ChainConfig(),
    *,
    proposal: Callable | None = None,
    initial: Granulization | None = None,
) -> Chain:
    """Sample rough set models for a clean decision table.

    Parameters
    ----------
    table : InformationTable
        Cleaned, non-empty training table.
    config : ChainConfig
        Chain length, proposal width, prior weight and seed.
    proposal : callable, optional
        ``proposal(g, rng) -> Granulization``.  Must be symmetric for the
        chain to target the posterior.  Defaults to :func:`perturb` with
        ``config.step_fraction``.
    initial : Granulization, optional
        Starting state; drawn by :func:`random_granulization` otherwise.

    Returns
    -------
    Chain
        Exactly ``config.retain`` retained models.
    """
    if table.n_objects == 0:
        raise DomainError("cannot run a chain on an empty table")
    if not table.is_clean():
        raise DomainError("training table must be cleaned first (missing or out-of-range values)")

    init_ss, prop_ss, acc_ss, split_ss = np.random.SeedSequence(config.seed).spawn(4)
    prop_rng = np.random.default_rng(prop_ss)
    acc_rng = np.random.default_rng(acc_ss)
    scorer = ModelScorer(table, config.posterior, np.random.default_rng(split_ss))
    if proposal is None:
        proposal = partial(_perturb_proposal, step_fraction=config.step_fraction)
    if initial is None:
        initial = random_granulization(table.schema, config.granules, np.random.default_rng(init_ss))

    cache: OrderedDict = OrderedDict()

    def score(g: Granulization) -> RoughModel:
        hit = cache.get(g.cuts)
        if hit is not None:
            cache.move_to_end(g.cuts)
            return hit
        model = scorer.score(g)
        cache[g.cuts] = model
        if len(cache) > config.cache_size:
            cache.popitem(last=False)
        return model

    literal = config.rejection_mode == PAPER_LITERAL
    max_proposals = config.max_proposals or 1000 * config.n_states
    retained, steps = [], []
    accepted = proposals = failures = 0
    current = score(initial)
    emitted = 0

    def emit(model):
        nonlocal emitted
        if emitted >= config.burn_in:
            retained.append(model)
            steps.append(emitted)
        emitted += 1

    emit(current)
    while emitted < config.n_states:
        if proposals >= max_proposals:
            raise ChainError(
                f"{proposals} proposals produced only {emitted} of {config.n_states} states"
            )
        proposals += 1
        try:
            candidate = score(proposal(current.granulization, prop_rng))
        except ProposalError as exc:
            failures += 1
            logger.debug("proposal %d treated as rejected: %s", proposals, exc)
            ok = False
        else:
            current, ok = metropolis_step(current, candidate, acc_rng)
        accepted += ok
        if ok or not literal:
            emit(current)

    if failures:
        logger.info("%d of %d proposals could not be generated", failures, proposals)
    return Chain(config, table.schema, tuple(retained), tuple(steps), accepted, proposals, failures)


def _perturb_proposal(g, rng, step_fraction):
    return perturb(g, step_fraction, rng)


# -- diagnostics -----------------------------------------------------------


@dataclass(frozen=True)
class Histogram:
    counts: np.ndarray
    edges: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def rows(self) -> list[tuple[float, float, int]]:
        return [(float(lo), float(hi), int(c)) for lo, hi, c in zip(self.edges[:-1], self.edges[1:], self.counts)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bin_left", "bin_right", "count"])
        for lo, hi, c in self.rows():
            w.writerow([repr(lo), repr(hi), c])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Histogram":
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if header != ["bin_left", "bin_right", "count"]:
            raise ParseError(f"unexpected histogram header {header!r}")
        rows = [r for r in reader if r]
        if not rows:
            return cls(np.zeros(0, dtype=np.int64), np.zeros(0))
        edges = [float(rows[0][0])] + [float(r[1]) for r in rows]
        return cls(np.array([int(r[2]) for r in rows], dtype=np.int64), np.array(edges))


def histogram(values, bins: int, value_range: tuple[float, float] | None = None, *, integer: bool = False) -> Histogram:
    """Fixed-count histogram; identical values collapse into a single bin.

    With ``integer`` set, edges sit on half-integers and there are at most
    as many bins as distinct integers in the range.
    """
    if bins < 1:
        raise DomainError(f"bins must be >= 1, got {bins}")
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return Histogram(np.zeros(0, dtype=np.int64), np.zeros(0))
    lo, hi = value_range if value_range is not None else (float(values.min()), float(values.max()))
    if integer:
        lo, hi = math.floor(lo) - 0.5, math.ceil(hi) + 0.5
        bins = min(bins, int(hi - lo))
    elif lo == hi:
        return Histogram(np.array([values.size], dtype=np.int64), np.array([lo, hi]))
    counts, edges = np.histogram(values, bins=bins, range=(lo, hi))
    return Histogram(counts.astype(np.int64), edges)


@dataclass(frozen=True)
class Diagnostics:
    acceptance_rate: float
    rule_hist: Histogram
    accuracy_hist: Histogram
    summary: dict

    def to_dict(self) -> dict:
        return {
            "acceptance_rate": self.acceptance_rate,
            "summary": self.summary,
            "rule_histogram": [list(r) for r in self.rule_hist.rows()],
            "accuracy_histogram": [list(r) for r in self.accuracy_hist.rows()],
        }


def _stats(values: np.ndarray) -> dict:
    return {
        "mean": math.fsum(values.tolist()) / values.size,
        "std": float(values.std()),
        "min": float(values.min()),
        "max": float(values.max()),
    }


def chain_diagnostics(chain: Chain, bins: int = 20) -> Diagnostics:
    if bins < 1:
        raise DomainError(f"bins must be >= 1, got {bins}")
    if len(chain) == 0:
        raise DomainError("chain has no retained models")
    acc = chain.accuracies
    n = chain.rule_counts
    summary = {
        "retained": len(chain),
        "proposals": chain.proposals,
        "accepted": chain.accepted,
        "proposal_failures": chain.proposal_failures,
        "accuracy": _stats(acc),
        "n_rules": _stats(n.astype(np.float64)),
        "log_posterior": _stats(chain.log_posteriors),
        "map_index": chain.map_index,
    }
    return Diagnostics(
        chain.acceptance_rate,
        histogram(n, bins, integer=True),
        histogram(acc, bins),
        summary,
    )


# -- persistence -----------------------------------------------------------


def trace_csv(chain: Chain) -> str:
    """One row per retained model: cuts in schema order, accuracy, n_rules, log_posterior."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(chain.trace_columns())
    for row in chain.trace_rows():
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def read_trace(text: str) -> tuple[list[str], np.ndarray]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    return header, np.array([[float(v) for v in row] for row in reader if row])


def chain_to_dict(chain: Chain, **extra) -> dict:
    return {
        "format": CHAIN_FORMAT,
        "version": CHAIN_VERSION,
        "schema": [a.to_dict() for a in chain.schema],
        "config": chain.config.to_dict(),
        "seed": chain.config.seed,
        "acceptance_rate": chain.acceptance_rate,
        "accepted": chain.accepted,
        "proposals": chain.proposals,
        "proposal_failures": chain.proposal_failures,
        "retained_steps": list(chain.retained_steps),
        "map_index": chain.map_index,
        **chain.meta,
        **extra,
        "models": [m.to_dict() for m in chain.retained],
    }


def chain_from_dict(data: Mapping) -> Chain:
    try:
        if data.get("format") != CHAIN_FORMAT:
            raise ParseError("not a chain file (format marker missing)")
        if data.get("version") != CHAIN_VERSION:
            raise ParseError(f"unsupported chain version {data.get('version')!r}")
        schema = schema_from_dicts(data["schema"])
        config = ChainConfig.from_dict(data["config"])
        models = tuple(RoughModel.from_dict(schema, m, config.lam) for m in data["models"])
        reserved = {
            "format", "version", "schema", "config", "seed", "acceptance_rate", "accepted",
            "proposals", "proposal_failures", "retained_steps", "map_index", "models",
        }
        meta = {k: v for k, v in data.items() if k not in reserved}
        chain = Chain(
            config, schema, models, tuple(data["retained_steps"]),
            int(data["accepted"]), int(data["proposals"]), int(data.get("proposal_failures", 0)), meta,
        )
    except ParseError:
        raise
    except (KeyError, TypeError, ValueError, ConfigError, DomainError) as exc:
        raise ParseError(f"corrupted chain file: {exc}") from exc
    if not models or len(models) != len(chain.retained_steps):
        raise ParseError("corrupted chain file: model list does not match retained steps")
    return chain


def save_chain(chain: Chain, path, **extra) -> None:
    Path(path).write_text(json.dumps(chain_to_dict(chain, **extra), indent=1) + "\n", encoding="utf-8")


def load_chain(path) -> Chain:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ParseError(f"{path}: not a chain file")
    return chain_from_dict(data)
