"""Train/test split engines and country downsampling.

Two split kinds mirror the two personalization levels:

* population-level (leave-k-participants-out): whole participants are
  assigned greedily, in size-bucketed seeded-shuffle order, until the train
  share of examples first reaches the ratio. Train and test participants are
  disjoint; per-class stratification is approximate because it operates at
  participant granularity.
* hybrid (leave-k-samples-out): each participant's examples are split per
  class at the ratio, so every test participant also appears in training.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .featurize import Dataset

DEFAULT_RATIO = 0.7


@dataclass
class SplitPlan:
    kind: str  # "population" | "hybrid"
    train_idx: np.ndarray
    test_idx: np.ndarray
    seed: int
    ratio: float


def split_population_level(dataset: Dataset, ratio: float = DEFAULT_RATIO, seed: int = 0) -> SplitPlan:
    pids, counts = np.unique(dataset.pids, return_counts=True)
    if pids.size < 2:
        raise ValueError("population-level split needs at least 2 participants")
    rng = np.random.default_rng(seed)

    by_count: dict[int, list[str]] = {}
    for pid, cnt in zip(pids.tolist(), counts.tolist()):
        by_count.setdefault(int(cnt), []).append(pid)
    order: list[str] = []
    for cnt in sorted(by_count, reverse=True):  # larger participants placed first
        bucket = sorted(by_count[cnt])
        rng.shuffle(bucket)
        order.extend(bucket)

    count_of = {pid: int(cnt) for pid, cnt in zip(pids.tolist(), counts.tolist())}
    total = int(len(dataset))
    train_pids: list[str] = []
    cum = 0
    for pid in order:
        train_pids.append(pid)
        cum += count_of[pid]
        if cum / total >= ratio:
            break
    if len(train_pids) == len(order):  # keep at least one test participant
        train_pids.pop()
    train_set = set(train_pids)
    in_train = np.fromiter((p in train_set for p in dataset.pids), dtype=bool, count=total)
    return SplitPlan("population", np.flatnonzero(in_train), np.flatnonzero(~in_train),
                     seed, ratio)


def split_hybrid(dataset: Dataset, ratio: float = DEFAULT_RATIO, seed: int = 0) -> SplitPlan:
    if len(dataset) == 0:
        raise ValueError("cannot split an empty dataset")
    rng = np.random.default_rng(seed)
    in_train = np.zeros(len(dataset), dtype=bool)
    for pid in dataset.participant_list():
        pid_rows = np.flatnonzero(dataset.pids == pid)
        for cls in np.unique(dataset.y[pid_rows]):
            rows = pid_rows[dataset.y[pid_rows] == cls]
            perm = rng.permutation(rows.size)
            n_train = max(1, int(np.floor(ratio * rows.size)))
            in_train[rows[perm[:n_train]]] = True
    return SplitPlan("hybrid", np.flatnonzero(in_train), np.flatnonzero(~in_train),
                     seed, ratio)


def downsample_equal(dataset: Dataset, seed: int = 0) -> Dataset:
    """Uniformly reduce every country to the smallest country's example count."""
    countries = dataset.country_list()
    if len(countries) < 2:
        raise ValueError("downsampling needs at least 2 countries")
    counts = {c: int(dataset.indices_for_country(c).size) for c in countries}
    m = min(counts.values())
    if all(v == m for v in counts.values()):
        return dataset
    rng = np.random.default_rng(seed)
    keep: list[np.ndarray] = []
    for country in countries:
        idx = dataset.indices_for_country(country)
        if idx.size == m:
            keep.append(idx)
        else:
            keep.append(rng.choice(idx, size=m, replace=False))
    merged = np.sort(np.concatenate(keep))
    return dataset.subset(merged)
