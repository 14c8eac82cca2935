"""Command-line entry point: ``bayesrough {train,predict,rules,synth,report}``.

Exit status is 0 on success, 1 on runtime errors (unreadable or malformed
data, I/O failures) and 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import shutil
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import BayesRoughError, ConfigError
from .predictive import chain_accuracy_on, emit_report, predict_table, query_filename
from .roughcore import format_rules
from .sampler import (
    ChainConfig,
    chain_diagnostics,
    load_chain,
    run_chain,
    save_chain,
    trace_csv,
)
from .synth import PRESETS, SynthSpec, generate
from .table import ConsistencyPredicate, clean_table, load_table, schema_from_dicts, write_table

logger = logging.getLogger("bayesrough")

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2
PAPER_MEAN_RULES = 222


@dataclass
class RunConfig:
    data: Path
    schema: tuple
    decision_column: str = "decision"
    id_column: str | None = None
    missing_tokens: tuple = ("",)
    predicates: tuple = ()
    chain: ChainConfig = field(default_factory=ChainConfig)
    output_dir: Path = Path("run")
    n_chains: int = 1

    @classmethod
    def from_dict(cls, data: dict, base: Path = Path(".")) -> "RunConfig":
        known = {"data", "schema", "decision_column", "id_column", "missing_tokens", "predicates",
                 "granules", "chain", "posterior", "output_dir", "chains"}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown configuration keys {unknown}")
        try:
            schema = schema_from_dicts(data["schema"])
            predicates = tuple(ConsistencyPredicate.from_dict(p) for p in data.get("predicates", []))
            chain_settings = dict(data.get("chain", {}))
            posterior = dict(data.get("posterior", {}))
            unknown = sorted(set(posterior) - {"lambda", "holdout"})
            if unknown:
                raise ConfigError(f"unknown posterior settings {unknown}")
            if "lambda" in posterior:
                chain_settings["lam"] = posterior["lambda"]
            if "holdout" in posterior:
                chain_settings["holdout"] = posterior["holdout"]
            if "granules" in data:
                chain_settings["granules"] = data["granules"]
            chain = ChainConfig.from_dict(chain_settings)
            data_path = Path(data["data"])
        except KeyError as exc:
            raise ConfigError(f"missing configuration key {exc}") from None
        except (TypeError, BayesRoughError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"invalid configuration: {exc}") from exc
        for p in predicates:
            try:
                p.check_schema(a.name for a in schema)
            except BayesRoughError as exc:
                raise ConfigError(str(exc)) from None
        n_chains = data.get("chains", 1)
        if not isinstance(n_chains, int) or n_chains < 1:
            raise ConfigError("chains must be a positive integer")
        return cls(
            data=_resolve(data_path, base),
            schema=schema,
            decision_column=data.get("decision_column", "decision"),
            id_column=data.get("id_column"),
            missing_tokens=tuple(data.get("missing_tokens", [""])),
            predicates=predicates,
            chain=chain,
            output_dir=_resolve(Path(data.get("output_dir", "run")), base),
            n_chains=n_chains,
        )


def _resolve(path: Path, base: Path) -> Path:
    return path if path.is_absolute() else base / path


def _read_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must hold a JSON object")
    return data


def _chain_seeds(seed: int, n: int) -> list[int]:
    if n == 1:
        return [seed]
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(n)]


def _run_one(args):
    table, config = args
    return run_chain(table, config)


class _Staging:
    """Write outputs into a scratch directory and move them in on success."""

    def __init__(self, target: Path):
        self.target = target

    def __enter__(self):
        self.target.parent.mkdir(parents=True, exist_ok=True)
        self.path = Path(tempfile.mkdtemp(prefix=".staging-", dir=self.target.parent))
        return self.path

    def __exit__(self, exc_type, exc, tb):
        try:
            if exc_type is None:
                self.target.mkdir(parents=True, exist_ok=True)
                for item in sorted(self.path.iterdir()):
                    dest = self.target / item.name
                    if dest.is_dir():
                        shutil.rmtree(dest)
                    os.replace(item, dest)
        finally:
            shutil.rmtree(self.path, ignore_errors=True)
        return False


def _write_chain_outputs(chain, directory: Path, meta: dict) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "trace.csv").write_text(trace_csv(chain), encoding="utf-8")
    save_chain(chain, directory / "chain.json", **meta)
    diag = chain_diagnostics(chain)
    (directory / "diagnostics.json").write_text(json.dumps(diag.to_dict(), indent=2) + "\n", encoding="utf-8")


def cmd_train(args) -> int:
    raw = _read_json(args.config)
    config = RunConfig.from_dict(raw, Path(args.config).resolve().parent)
    overrides = {}
    for key, attr in (("seed", "seed"), ("retain", "retain"), ("burn_in", "burn_in"), ("lam", "lam"), ("granules", "granules")):
        value = getattr(args, key, None)
        if value is not None:
            overrides[attr] = value
    if overrides:
        try:
            config.chain = replace(config.chain, **overrides)
        except BayesRoughError as exc:
            raise ConfigError(str(exc)) from None
    if args.data:
        config.data = Path(args.data)
    if args.out:
        config.output_dir = Path(args.out)
    if args.chains is not None:
        if args.chains < 1:
            raise ConfigError("--chains must be a positive integer")
        config.n_chains = args.chains

    table = load_table(
        config.data, config.schema, config.decision_column,
        id_column=config.id_column, missing_tokens=config.missing_tokens,
    )
    clean, report = clean_table(table, config.predicates)
    logger.info("cleaning kept %d of %d rows", report.remaining, report.total_in)
    if clean.n_objects == 0:
        raise BayesRoughError("no rows left after cleaning; refusing to train")

    meta = {
        "decision_column": config.decision_column,
        "id_column": config.id_column,
        "missing_tokens": list(config.missing_tokens),
        "predicates": [p.to_dict() for p in config.predicates],
        "clean_report": report.to_dict(),
    }
    seeds = _chain_seeds(config.chain.seed, config.n_chains)
    configs = [replace(config.chain, seed=s) for s in seeds]
    if len(configs) == 1:
        chains = [run_chain(clean, configs[0])]
    else:
        with ProcessPoolExecutor(max_workers=min(len(configs), os.cpu_count() or 1)) as pool:
            chains = list(pool.map(_run_one, [(clean, c) for c in configs]))

    with _Staging(config.output_dir) as stage:
        (stage / "clean_report.json").write_text(report.to_json() + "\n", encoding="utf-8")
        if len(chains) == 1:
            _write_chain_outputs(chains[0], stage, meta)
        else:
            for i, ch in enumerate(chains, start=1):
                _write_chain_outputs(ch, stage / f"chain_{i}", meta)

    for i, ch in enumerate(chains, start=1):
        label = f"chain {i}: " if len(chains) > 1 else ""
        print(
            f"{label}retained {len(ch)} models | mean accuracy {ch.mean_accuracy():.4f} | "
            f"mean rule count {ch.mean_rule_count():.1f} (published comparator {PAPER_MEAN_RULES}) | "
            f"acceptance rate {ch.acceptance_rate:.3f}"
        )
    print(f"cleaning: {report.remaining} of {report.total_in} rows kept; outputs in {config.output_dir}")
    return EXIT_OK


def _load_queries(chain, path, id_column):
    meta = chain.meta
    table = load_table(
        path, chain.schema, meta.get("decision_column", "decision"),
        id_column=id_column if id_column is not None else meta.get("id_column"),
        missing_tokens=meta.get("missing_tokens", [""]),
        decision_optional=True,
    )
    predicates = [ConsistencyPredicate.from_dict(p) for p in meta.get("predicates", [])]
    clean, report = clean_table(table, predicates)
    if report.remaining < report.total_in:
        logger.warning("dropped %d of %d query rows (missing, inconsistent or out of range)",
                       report.total_in - report.remaining, report.total_in)
    return clean, report


def cmd_predict(args) -> int:
    chain = load_chain(args.chain)
    queries, report = _load_queries(chain, args.queries, args.id_column)
    out = Path(args.out)
    with _Staging(out) as stage:
        dists = predict_table(chain, queries, args.bins) if queries.n_objects else []
        if not dists:
            logger.warning("query file %s has no usable rows; writing an empty report", args.queries)
        for d in dists:
            (stage / query_filename(d.query_id)).write_text(d.hist.to_csv(), encoding="utf-8")
        with open(stage / "predictions.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["query_id", "mean", "coverage", "abstentions", "n_models"])
            for d in dists:
                w.writerow([d.query_id, repr(d.mean), repr(d.coverage), d.abstentions, d.n_models])
        summary = {"n_queries": len(dists), "clean_report": report.to_dict(), "queries": [d.summary() for d in dists]}
        if queries.has_decisions and queries.n_objects:
            summary["mean_accuracy"] = chain_accuracy_on(chain, queries)
            summary["chain_mean_accuracy"] = chain.mean_accuracy()
        (stage / "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    for d in dists:
        flag = "  (no support)" if d.no_support else ""
        print(f"{d.query_id}: mean plausibility {d.mean:+.4f}, coverage {d.coverage:.3f}{flag}")
    if "mean_accuracy" in summary:
        print(f"mean accuracy over retained models: {summary['mean_accuracy']:.6f}")
    return EXIT_OK


def cmd_rules(args) -> int:
    chain = load_chain(args.chain)
    model = chain.map_model
    names = [a.name for a in chain.schema]
    title = f"MAP model (retained index {chain.map_index}, accuracy {model.accuracy:.4f})"
    text = format_rules(model.rules, names, args.decision_name or chain.meta.get("decision_column") or "decision", title=title)
    if args.out:
        try:
            Path(args.out).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise BayesRoughError(f"cannot write {args.out}: {exc}") from exc
    sys.stdout.write(text)
    return EXIT_OK


def cmd_synth(args) -> int:
    if args.spec:
        data = _read_json(args.spec)
    elif args.preset:
        data = {"preset": args.preset}
    else:
        raise ConfigError("give a spec file or --preset")
    if args.n is not None:
        data["n_objects"] = args.n
    if args.seed is not None:
        data["seed"] = args.seed
    spec = SynthSpec.from_dict(data)
    table, truth = generate(spec)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_table(table, out)
    truth_path = Path(args.truth) if args.truth else out.with_suffix(".truth.json")
    truth_path.write_text(truth.to_json(), encoding="utf-8")
    print(f"wrote {table.n_objects} rows to {out} and ground truth to {truth_path}")
    return EXIT_OK


def cmd_report(args) -> int:
    chain = load_chain(args.chain)
    queries = None
    if args.queries:
        queries, _ = _load_queries(chain, args.queries, args.id_column)
    with _Staging(Path(args.out)) as stage:
        bundle = emit_report(chain, queries, stage, bins=args.bins, figures=not args.no_figures)
    print(f"report for {bundle.summary['retained']} retained models written to {args.out}")
    print(f"MAP model index {bundle.summary['map_index']}, mean accuracy {bundle.summary['mean_accuracy']:.4f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bayesrough", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="sample rough set models from a decision table")
    p.add_argument("config", help="JSON run configuration")
    p.add_argument("--data", help="override the data path")
    p.add_argument("--out", help="override the output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--retain", type=int)
    p.add_argument("--burn-in", dest="burn_in", type=int)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--granules", "-k", type=int)
    p.add_argument("--chains", type=int, help="independent chains to run in parallel")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="posterior predictive plausibility for query rows")
    p.add_argument("chain", help="chain.json written by train")
    p.add_argument("queries", help="CSV with the training schema's columns")
    p.add_argument("--out", required=True)
    p.add_argument("--bins", type=int, default=20)
    p.add_argument("--id-column")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("rules", help="print the MAP model's rules")
    p.add_argument("chain")
    p.add_argument("--out", help="also save the rules to this file")
    p.add_argument("--decision-name", help="label for the decision attribute")
    p.set_defaults(func=cmd_rules)

    p = sub.add_parser("synth", help="generate a synthetic decision table")
    p.add_argument("spec", nargs="?", help="JSON synthetic spec")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--out", required=True)
    p.add_argument("--truth", help="ground-truth JSON path (default: <out>.truth.json)")
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("report", help="histogram data, figures and MAP rules for a chain")
    p.add_argument("chain")
    p.add_argument("--out", required=True)
    p.add_argument("--queries")
    p.add_argument("--id-column")
    p.add_argument("--bins", type=int, default=20)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BayesRoughError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
