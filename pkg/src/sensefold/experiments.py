"""The generalization experiment matrix.

Four approaches (country-specific, country-agnostic phase I and II,
multi-country) crossed with two personalization levels (population-level,
hybrid) and five model variants. Every cell runs a configured number of
repetitions with seeds derived from one master seed, reports mean and
population standard deviation of weighted F1 and AUROC, and is independent of
every other cell, so cells may execute concurrently without changing results.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .featurize import Dataset
from .metrics import MetricSummary, weighted_auroc, weighted_f1
from .models import ModelConfig, predict_labels, predict_proba, train_model
from .seeding import derive_seed
from .splits import downsample_equal, split_hybrid, split_population_level

log = logging.getLogger("sensefold.experiments")

APPROACHES = ("country-specific", "agnostic-p1", "agnostic-p2", "multi-country")
PERSONALIZATIONS = ("population", "hybrid")

ALL_COUNTRIES = "ALL"


@dataclass(frozen=True)
class ExperimentCell:
    approach: str
    personalization: str
    model: str
    train_countries: tuple[str, ...]
    test_country: str
    downsampled: bool = False

    def key(self) -> str:
        return "|".join([
            self.approach, self.personalization, self.model,
            "+".join(self.train_countries), self.test_country,
            "ds" if self.downsampled else "nods",
        ])


@dataclass
class ExperimentResult:
    cell: ExperimentCell
    summary: MetricSummary = field(default_factory=MetricSummary)
    skipped: bool = False
    reason: str = ""


def _train_test_indices(dataset: Dataset, cell: ExperimentCell, seed: int) -> tuple[Dataset, Dataset]:
    """Materialize the train/test datasets for one run of one cell."""
    if cell.approach == "country-specific":
        country = cell.test_country
        sub = dataset.subset(dataset.indices_for_country(country))
        if len(set(sub.pids.tolist())) < 2:
            raise ValueError(f"country {country} has fewer than 2 participants")
        plan = (split_population_level if cell.personalization == "population" else split_hybrid)(
            sub, seed=seed
        )
        return sub.subset(plan.train_idx), sub.subset(plan.test_idx)

    if cell.approach == "agnostic-p1":
        source = cell.train_countries[0]
        target_sub = dataset.subset(dataset.indices_for_country(cell.test_country))
        source_sub = dataset.subset(dataset.indices_for_country(source))
        if len(source_sub) == 0 or len(target_sub) == 0:
            raise ValueError("source or target country absent from the dataset")
        if cell.personalization == "population":
            return source_sub, target_sub
        plan = split_hybrid(target_sub, seed=seed)
        train = Dataset.concat(source_sub, target_sub.subset(plan.train_idx))
        return train, target_sub.subset(plan.test_idx)

    if cell.approach == "agnostic-p2":
        held = cell.test_country
        train_rows = np.flatnonzero(dataset.countries != held)
        held_sub = dataset.subset(dataset.indices_for_country(held))
        if len(held_sub) == 0 or train_rows.size == 0:
            raise ValueError("held-out country or training pool absent")
        pool = downsample_equal(dataset.subset(train_rows), seed=derive_seed(seed, "downsample"))
        if cell.personalization == "population":
            return pool, held_sub
        plan = split_hybrid(held_sub, seed=seed)
        train = Dataset.concat(pool, held_sub.subset(plan.train_idx))
        return train, held_sub.subset(plan.test_idx)

    if cell.approach == "multi-country":
        pool = dataset
        if cell.downsampled:
            pool = downsample_equal(pool, seed=derive_seed(seed, "downsample"))
        plan = (split_population_level if cell.personalization == "population" else split_hybrid)(
            pool, seed=seed
        )
        return pool.subset(plan.train_idx), pool.subset(plan.test_idx)

    raise ValueError(f"unknown approach {cell.approach!r}")


def run_cell(
    dataset: Dataset,
    cell: ExperimentCell,
    repetitions: int = 10,
    master_seed: int = 0,
    config: Optional[ModelConfig] = None,
) -> ExperimentResult:
    config = config or ModelConfig()
    result = ExperimentResult(cell=cell)
    try:
        for run in range(repetitions):
            split_seed = derive_seed(master_seed, "split", cell.key(), run)
            model_seed = derive_seed(master_seed, "model", cell.key(), run)
            train, test = _train_test_indices(dataset, cell, split_seed)
            if len(train) == 0 or len(test) == 0:
                raise ValueError("empty train or test split")
            model = train_model(cell.model, train, seed=model_seed, config=config)
            y_pred = predict_labels(model, test)
            proba = predict_proba(model, test)
            result.summary.add(
                weighted_f1(test.y, y_pred),
                weighted_auroc(test.y, proba, model.classes),
            )
    except ValueError as exc:
        log.warning("cell %s skipped: %s", cell.key(), exc)
        return ExperimentResult(cell=cell, skipped=True, reason=str(exc))
    return result


def run_cells(
    dataset: Dataset,
    cells: list[ExperimentCell],
    repetitions: int = 10,
    master_seed: int = 0,
    config: Optional[ModelConfig] = None,
    jobs: int = 1,
) -> list[ExperimentResult]:
    """Execute independent cells, optionally in a thread pool; output order is
    canonical regardless of scheduling."""
    if jobs > 1 and len(cells) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(
                lambda c: run_cell(dataset, c, repetitions, master_seed, config), cells
            ))
    else:
        results = [run_cell(dataset, c, repetitions, master_seed, config) for c in cells]
    results.sort(key=lambda r: r.cell.key())
    return results


# ---------------------------------------------------------------------------
# Approach-level runners


def country_specific_cells(dataset: Dataset, models: list[str],
                           personalizations: list[str]) -> list[ExperimentCell]:
    return [
        ExperimentCell("country-specific", pers, model, (country,), country)
        for country in dataset.country_list()
        for pers in personalizations
        for model in models
    ]


def run_country_specific(
    dataset: Dataset,
    models: list[str],
    personalizations: list[str],
    repetitions: int = 10,
    master_seed: int = 0,
    config: Optional[ModelConfig] = None,
    jobs: int = 1,
) -> list[ExperimentResult]:
    cells = country_specific_cells(dataset, models, personalizations)
    return run_cells(dataset, cells, repetitions, master_seed, config, jobs)


def run_agnostic_phase1(
    dataset: Dataset,
    source: str,
    target: str,
    personalization: str,
    model: str,
    repetitions: int = 10,
    master_seed: int = 0,
    config: Optional[ModelConfig] = None,
) -> ExperimentResult:
    if source == target:
        raise ValueError("phase-I source and target must differ (same-country "
                         "evaluation is the country-specific approach)")
    cell = ExperimentCell("agnostic-p1", personalization, model, (source,), target)
    return run_cell(dataset, cell, repetitions, master_seed, config)


def agnostic_phase1_cells(dataset: Dataset, models: list[str],
                          personalizations: list[str]) -> list[ExperimentCell]:
    countries = dataset.country_list()
    return [
        ExperimentCell("agnostic-p1", pers, model, (src,), tgt)
        for src in countries
        for tgt in countries
        if src != tgt
        for pers in personalizations
        for model in models
    ]


def run_agnostic_phase2(
    dataset: Dataset,
    test_country: Optional[str],
    personalization: str,
    model: str,
    repetitions: int = 10,
    master_seed: int = 0,
    config: Optional[ModelConfig] = None,
    jobs: int = 1,
) -> list[ExperimentResult]:
    countries = dataset.country_list()
    if len(countries) < 3:
        raise ValueError("phase II needs at least 3 countries")
    held_list = [test_country] if test_country else countries
    cells = [
        ExperimentCell("agnostic-p2", personalization, model,
                       tuple(c for c in countries if c != held), held, downsampled=True)
        for held in held_list
    ]
    return run_cells(dataset, cells, repetitions, master_seed, config, jobs)


def run_multi_country(
    dataset: Dataset,
    downsampled: bool,
    personalization: str,
    model: str,
    repetitions: int = 10,
    master_seed: int = 0,
    config: Optional[ModelConfig] = None,
) -> ExperimentResult:
    cell = ExperimentCell("multi-country", personalization, model,
                          tuple(dataset.country_list()), ALL_COUNTRIES,
                          downsampled=downsampled)
    return run_cell(dataset, cell, repetitions, master_seed, config)


# ---------------------------------------------------------------------------
# Result emission


def results_to_csv(results: list[ExperimentResult], path: str | Path,
                   config_hash: str = "") -> None:
    """One row per run plus mean/std aggregate rows; floats at fixed precision
    so identical runs produce identical bytes."""
    lines: list[str] = []
    if config_hash:
        lines.append(f"# config={config_hash}")
    lines.append("approach,personalization,model,train_countries,test_country,"
                 "downsampled,run,f1,auroc,note")
    for res in sorted(results, key=lambda r: r.cell.key()):
        c = res.cell
        prefix = (f"{c.approach},{c.personalization},{c.model},"
                  f"{'+'.join(c.train_countries)},{c.test_country},"
                  f"{'true' if c.downsampled else 'false'}")
        if res.skipped:
            lines.append(f"{prefix},skipped,,,{res.reason.replace(',', ';')}")
            continue
        s = res.summary
        for run, (f1, auroc) in enumerate(zip(s.f1_runs, s.auroc_runs)):
            lines.append(f"{prefix},{run},{f1:.10f},{auroc:.10f},")
        lines.append(f"{prefix},mean,{s.f1_mean:.10f},{s.auroc_mean:.10f},")
        lines.append(f"{prefix},std,{s.f1_std:.10f},{s.auroc_std:.10f},")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def results_to_summary(results: list[ExperimentResult], config_hash: str = "") -> dict:
    cells = []
    for res in sorted(results, key=lambda r: r.cell.key()):
        c = res.cell
        entry = {
            "approach": c.approach,
            "personalization": c.personalization,
            "model": c.model,
            "train_countries": list(c.train_countries),
            "test_country": c.test_country,
            "downsampled": c.downsampled,
            "skipped": res.skipped,
        }
        if res.skipped:
            entry["reason"] = res.reason
        else:
            entry.update({
                "runs": len(res.summary),
                "f1_mean": round(res.summary.f1_mean, 10),
                "f1_std": round(res.summary.f1_std, 10),
                "auroc_mean": round(res.summary.auroc_mean, 10),
                "auroc_std": round(res.summary.auroc_std, 10),
            })
        cells.append(entry)
    out = {"cells": cells}
    if config_hash:
        out["config"] = config_hash
    return out


def summary_to_json(results: list[ExperimentResult], path: str | Path,
                    config_hash: str = "") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(results_to_summary(results, config_hash), fh, indent=2, sort_keys=True)
        fh.write("\n")


def format_table(results: list[ExperimentResult]) -> str:
    """Human-readable aggregate table (mean (std) per metric)."""
    header = f"{'approach':18s} {'pers.':11s} {'model':10s} {'train':28s} {'test':8s} {'F1':16s} {'AUROC':16s}"
    rows = [header, "-" * len(header)]
    for res in sorted(results, key=lambda r: r.cell.key()):
        c = res.cell
        train = "+".join(c.train_countries)
        if len(train) > 28:
            train = train[:25] + "..."
        if res.skipped:
            rows.append(f"{c.approach:18s} {c.personalization:11s} {c.model:10s} "
                        f"{train:28s} {c.test_country:8s} skipped: {res.reason}")
        else:
            s = res.summary
            rows.append(
                f"{c.approach:18s} {c.personalization:11s} {c.model:10s} {train:28s} "
                f"{c.test_country:8s} {s.f1_mean:.3f} ({s.f1_std:.3f})    "
                f"{s.auroc_mean:.3f} ({s.auroc_std:.3f})"
            )
    return "\n".join(rows)
