"""Command-line entry point.

Subcommands: ``generate``, ``featurize``, ``experiment``, ``analyze``.
Every command is deterministic given its inputs and ``--seed``; emitted CSV
files carry a hash of the effective configuration in a leading comment line.
Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
Set ``SENSEFOLD_LOG`` to a level name (DEBUG, INFO, ...) for diagnostics.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .analysis import hourly_density, top_features
from .core import ConfigError, Taxonomy, default_taxonomy
from .featurize import (
    DEFAULT_WIDTH_MIN,
    MAX_WIDTH_MIN,
    MIN_WIDTH_MIN,
    dataset_from_csv,
    dataset_to_csv,
    featurize_corpus,
)
from .impute import DROP_THRESHOLD, KNN_K, drop_high_missing, knn_impute, modality_missingness
from .ingestion import IngestError, read_corpus, write_corpus
from .mlp import MlpParams
from .models import (
    AdaBoostParams,
    ForestParams,
    ModelConfig,
    gini_importance,
    load_model,
    save_model,
    train_model,
)
from .registry import FeatureRegistry
from .experiments import (
    ALL_COUNTRIES,
    ExperimentCell,
    agnostic_phase1_cells,
    country_specific_cells,
    format_table,
    results_to_csv,
    run_cells,
    summary_to_json,
)
from .seeding import derive_seed
from . import synthgen

log = logging.getLogger("sensefold")


def _setup_logging() -> None:
    level_name = os.environ.get("SENSEFOLD_LOG", "WARNING").upper()
    level = getattr(logging, level_name, logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _hash_obj(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def _hash_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()[:16]


# ---------------------------------------------------------------------------
# generate


def _cmd_generate(args: argparse.Namespace) -> int:
    if args.dump_default_config:
        cfg = synthgen.default_config()
        synthgen.save_config(cfg, args.dump_default_config)
        print(f"wrote default generator config to {args.dump_default_config}")
        return 0
    if not args.config:
        raise ConfigError("--config is required (or use --dump-default-config)")
    cfg_path = Path(args.config)
    if not cfg_path.exists():
        raise ConfigError(f"config file not found: {cfg_path}")
    try:
        config = synthgen.load_config(cfg_path)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        raise ConfigError(f"invalid generator config: {exc}") from exc
    if args.seed is not None:
        config = synthgen.GeneratorConfig.from_json_obj(
            {**config.to_json_obj(), "master_seed": args.seed}
        )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    corpus = synthgen.generate_corpus(config)
    write_corpus(corpus, out)
    manifest = {
        "config": config.to_json_obj(),
        "config_hash": synthgen.config_hash(config),
        "countries": corpus.countries,
        "participants": len(corpus.participants),
        "reports": corpus.n_reports(),
        "events": corpus.n_events(),
    }
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"generated {manifest['reports']} reports / {manifest['events']} events "
          f"for {len(corpus.countries)} countries into {out}")
    return 0


# ---------------------------------------------------------------------------
# featurize


def _cmd_featurize(args: argparse.Namespace) -> int:
    if not (MIN_WIDTH_MIN <= args.window <= MAX_WIDTH_MIN):
        raise ConfigError(
            f"--window {args.window} outside the overlap guard "
            f"[{MIN_WIDTH_MIN}, {MAX_WIDTH_MIN}] minutes"
        )
    corpus_dir = Path(args.corpus)
    if not corpus_dir.exists():
        raise ConfigError(f"corpus directory not found: {corpus_dir}")
    taxonomy = Taxonomy.from_json(args.taxonomy) if args.taxonomy else default_taxonomy()
    corpus, stats = read_corpus(corpus_dir, max_malformed_fraction=args.max_malformed)
    dataset = featurize_corpus(corpus, taxonomy, width_min=args.window)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg_hash = _hash_obj({
        "window": args.window,
        "taxonomy": taxonomy.to_dict(),
        "corpus": sorted(stats.reports_per_country.items()),
        "reports": stats.n_reports,
        "events": stats.n_events,
    })
    dataset_to_csv(dataset, out / "features.csv", header_comment=f"config={cfg_hash}")
    dataset.registry.save(out / "registry.json")

    report = modality_missingness(dataset)
    with open(out / "missingness.csv", "w", encoding="utf-8") as fh:
        fh.write(f"# config={cfg_hash}\n")
        fh.write("sensor,missing_fraction\n")
        for sensor, frac in report.sensor_fractions.items():
            fh.write(f"{sensor},{frac:.6f}\n")
    print(f"featurized {len(dataset)} of {stats.n_reports} reports "
          f"({stats.n_reports - len(dataset)} dropped by taxonomy) -> {out / 'features.csv'}")
    print(report.formatted())
    return 0


# ---------------------------------------------------------------------------
# experiment


def _load_features(features_path: str, registry_path: str | None):
    fpath = Path(features_path)
    if not fpath.exists():
        raise ConfigError(f"features file not found: {fpath}")
    rpath = Path(registry_path) if registry_path else fpath.with_name("registry.json")
    if not rpath.exists():
        raise ConfigError(f"registry file not found: {rpath}")
    registry = FeatureRegistry.load(rpath)
    return dataset_from_csv(fpath, registry)


def _model_config(args: argparse.Namespace) -> ModelConfig:
    hidden = tuple(int(h) for h in str(args.hidden).split(",") if h)
    return ModelConfig(
        forest=ForestParams(trees=args.trees, n_jobs=1),
        adaboost=AdaBoostParams(rounds=args.rounds, base_depth=args.stump_depth),
        mlp=MlpParams(hidden=hidden, epochs=args.epochs),
    )


def _cmd_experiment(args: argparse.Namespace) -> int:
    dataset = _load_features(args.features, args.registry)
    models = [m.strip() for m in args.model.split(",") if m.strip()]
    personalizations = ["population", "hybrid"] if args.personalization == "both" \
        else [args.personalization]

    if args.impute:
        dataset = drop_high_missing(dataset, threshold=args.drop_threshold,
                                    per_country=args.per_country_drop)
        dataset = knn_impute(dataset, k=args.knn_k)

    cells: list[ExperimentCell] = []
    countries = dataset.country_list()
    if args.approach in ("country-specific", "all"):
        cells += country_specific_cells(dataset, models, personalizations)
    if args.approach in ("agnostic-p1", "all"):
        if args.approach == "agnostic-p1" and args.source_country and args.target_country:
            if args.source_country == args.target_country:
                raise ConfigError("source and target country must differ for agnostic-p1")
            cells += [ExperimentCell("agnostic-p1", pers, m,
                                     (args.source_country,), args.target_country)
                      for pers in personalizations for m in models]
        else:
            cells += agnostic_phase1_cells(dataset, models, personalizations)
    if args.approach in ("agnostic-p2", "all"):
        if len(countries) < 3:
            raise ConfigError("agnostic-p2 needs at least 3 countries")
        held_list = [args.test_country] if args.test_country and args.approach == "agnostic-p2" \
            else countries
        for held in held_list:
            if held not in countries:
                raise ConfigError(f"--test-country {held} not present in the dataset")
            cells += [ExperimentCell("agnostic-p2", pers, m,
                                     tuple(c for c in countries if c != held), held,
                                     downsampled=True)
                      for pers in personalizations for m in models]
    if args.approach in ("multi-country", "all"):
        ds_variants = [args.downsample] if args.approach == "multi-country" else [False, True]
        for ds_flag in ds_variants:
            cells += [ExperimentCell("multi-country", pers, m, tuple(countries),
                                     ALL_COUNTRIES, downsampled=ds_flag)
                      for pers in personalizations for m in models]
    if not cells:
        raise ConfigError("no experiment cells selected")

    config = _model_config(args)
    results = run_cells(dataset, cells, repetitions=args.reps, master_seed=args.seed,
                        config=config, jobs=args.jobs)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg_hash = _hash_obj({
        "features": _hash_file(Path(args.features)),
        "approach": args.approach,
        "models": models,
        "personalizations": personalizations,
        "reps": args.reps,
        "seed": args.seed,
        "impute": args.impute,
        "drop_threshold": args.drop_threshold,
        "per_country_drop": args.per_country_drop,
        "knn_k": args.knn_k,
        "downsample": args.downsample,
        "trees": args.trees,
        "rounds": args.rounds,
        "stump_depth": args.stump_depth,
        "hidden": args.hidden,
        "epochs": args.epochs,
        "source": args.source_country,
        "target": args.target_country,
        "test": args.test_country,
    })
    results_to_csv(results, out / "results.csv", config_hash=cfg_hash)
    summary_to_json(results, out / "summary.json", config_hash=cfg_hash)
    dataset.registry.save(out / "registry.json")

    if args.model_out:
        first = next((r for r in results if not r.skipped), None)
        if first is None:
            raise ConfigError("--model-out requested but every cell was skipped")
        from .experiments import _train_test_indices

        split_seed = derive_seed(args.seed, "split", first.cell.key(), 0)
        model_seed = derive_seed(args.seed, "model", first.cell.key(), 0)
        train, _ = _train_test_indices(dataset, first.cell, split_seed)
        model = train_model(first.cell.model, train, seed=model_seed, config=config)
        save_model(model, args.model_out)
        print(f"saved run-0 model of cell {first.cell.key()} to {args.model_out}")

    print(format_table(results))
    print(f"wrote {out / 'results.csv'} and {out / 'summary.json'}")
    return 0


# ---------------------------------------------------------------------------
# analyze


def _cmd_analyze(args: argparse.Namespace) -> int:
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if args.kind == "anova":
        dataset = _load_features(args.features, args.registry)
        cfg_hash = _hash_obj({"kind": "anova", "k": args.k,
                              "features": _hash_file(Path(args.features))})
        lines = [f"# config={cfg_hash}", "country,activity,rank,feature,f_value,p_value"]
        for country in dataset.country_list():
            ranked = top_features(dataset, country, k=args.k)
            for activity, results in ranked.items():
                for rank, res in enumerate(results, start=1):
                    lines.append(f"{country},{activity},{rank},{res.feature},"
                                 f"{res.f_value:.6f},{res.p_value:.6e}")
        out.write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(f"wrote ANOVA table to {out}")
        return 0

    if args.kind == "importance":
        if not args.model_in:
            raise ConfigError("analyze importance requires --model-in")
        model = load_model(args.model_in)
        registry = FeatureRegistry.load(args.registry) if args.registry else None
        if registry is None:
            raise ConfigError("analyze importance requires --registry")
        if registry.fingerprint() != model.fingerprint:
            raise ConfigError("registry fingerprint does not match the model")
        weights = gini_importance(model)
        cfg_hash = _hash_obj({"kind": "importance",
                              "model": _hash_file(Path(args.model_in))})
        lines = [f"# config={cfg_hash}", "feature,modality,sensor,importance"]
        for desc, w in zip(registry.descriptors, weights):
            lines.append(f"{desc.name},{desc.modality},{desc.sensor},{w:.10f}")
        out.write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(f"wrote importances (sum={weights.sum():.6f}) to {out}")
        return 0

    if args.kind == "density":
        if not args.corpus:
            raise ConfigError("analyze density requires --corpus")
        taxonomy = Taxonomy.from_json(args.taxonomy) if args.taxonomy else default_taxonomy()
        corpus, _ = read_corpus(Path(args.corpus))
        dens = hourly_density(corpus, taxonomy)
        cfg_hash = _hash_obj({"kind": "density", "cells": sorted(map(str, dens))})
        lines = [f"# config={cfg_hash}", "country,activity,hour,density"]
        for (country, activity), hist in dens.items():
            for hour, val in enumerate(hist):
                lines.append(f"{country},{activity},{hour},{val:.10f}")
        out.write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(f"wrote hourly densities to {out}")
        return 0

    raise ConfigError(f"unknown analyze kind {args.kind!r}")


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sensefold",
        description="Synthetic multi-country mobile-sensing pipeline: generate, "
                    "featurize, run generalization experiments, analyze.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate a synthetic corpus")
    g.add_argument("--config", help="generator config JSON")
    g.add_argument("--out", default="data", help="output directory")
    g.add_argument("--seed", type=int, default=None, help="override the config master seed")
    g.add_argument("--dump-default-config", metavar="PATH",
                   help="write the shipped five-country config to PATH and exit")
    g.set_defaults(func=_cmd_generate)

    f = sub.add_parser("featurize", help="extract feature vectors from a corpus")
    f.add_argument("--corpus", required=True, help="corpus directory (from generate)")
    f.add_argument("--out", default="features", help="output directory")
    f.add_argument("--window", type=float, default=DEFAULT_WIDTH_MIN,
                   help="window width in minutes (guard 5..25)")
    f.add_argument("--taxonomy", help="taxonomy JSON (default: shipped taxonomy)")
    f.add_argument("--max-malformed", type=float, default=0.01,
                   help="malformed-line fraction tolerated per file")
    f.set_defaults(func=_cmd_featurize)

    e = sub.add_parser("experiment", help="run the inference experiment matrix")
    e.add_argument("--features", required=True, help="features.csv from featurize")
    e.add_argument("--registry", help="registry.json (default: next to features.csv)")
    e.add_argument("--out", default="results", help="output directory")
    e.add_argument("--approach", required=True,
                   choices=["country-specific", "agnostic-p1", "agnostic-p2",
                            "multi-country", "all"])
    e.add_argument("--model", default="rf",
                   help="comma-separated variants: majority,stratified,rf,adaboost,mlp")
    e.add_argument("--personalization", default="both",
                   choices=["population", "hybrid", "both"])
    e.add_argument("--source-country", help="agnostic-p1 training country")
    e.add_argument("--target-country", help="agnostic-p1 testing country")
    e.add_argument("--test-country", help="agnostic-p2 held-out country")
    e.add_argument("--downsample", action="store_true",
                   help="multi-country: equalize per-country counts before splitting")
    e.add_argument("--reps", type=int, default=10, help="repetitions per cell")
    e.add_argument("--seed", type=int, default=0, help="master seed")
    e.add_argument("--jobs", type=int, default=1, help="concurrent cells")
    e.add_argument("--impute", action=argparse.BooleanOptionalAction, default=True,
                   help="apply the drop rule and kNN imputation before modeling")
    e.add_argument("--drop-threshold", type=float, default=DROP_THRESHOLD)
    e.add_argument("--per-country-drop", action="store_true",
                   help="drop sensors that exceed the threshold in any one country")
    e.add_argument("--knn-k", type=int, default=KNN_K)
    e.add_argument("--trees", type=int, default=100, help="random forest size")
    e.add_argument("--rounds", type=int, default=50, help="AdaBoost rounds")
    e.add_argument("--stump-depth", type=int, default=1, help="AdaBoost base tree depth")
    e.add_argument("--hidden", default="100", help="MLP hidden sizes, comma-separated")
    e.add_argument("--epochs", type=int, default=200, help="MLP max epochs")
    e.add_argument("--model-out", help="save the run-0 model of the first cell")
    e.set_defaults(func=_cmd_experiment)

    a = sub.add_parser("analyze", help="ANOVA tables, forest importances, hourly densities")
    a.add_argument("kind", choices=["anova", "importance", "density"])
    a.add_argument("--features", help="features.csv (anova)")
    a.add_argument("--registry", help="registry.json")
    a.add_argument("--model-in", help="saved model file (importance)")
    a.add_argument("--corpus", help="corpus directory (density)")
    a.add_argument("--taxonomy", help="taxonomy JSON (density)")
    a.add_argument("--k", type=int, default=3, help="top features per activity (anova)")
    a.add_argument("--out", required=True, help="output CSV path")
    a.set_defaults(func=_cmd_analyze)

    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (IngestError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
