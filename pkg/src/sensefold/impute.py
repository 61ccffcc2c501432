"""Missing-data handling: per-sensor missingness, the drop rule, kNN imputation.

The drop rule removes every feature of a sensor whose windows are entirely
missing in more than the threshold fraction of examples (strictly greater).
Imputation then runs within each country separately, filling each missing cell
with the unweighted mean of that feature over the k nearest rows among rows
that observe it. Distances are Euclidean over co-observed features, scaled by
sqrt(total features / co-observed count); rows with no co-observed features
sort last (infinite distance) but remain usable when nothing closer exists.
Neighbor ties are broken by lower row index.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .featurize import Dataset

log = logging.getLogger("sensefold.impute")

DROP_THRESHOLD = 0.70
KNN_K = 5


@dataclass
class MissingnessReport:
    sensor_fractions: dict[str, float]  # examples with the whole sensor missing
    feature_fractions: dict[str, float]

    def formatted(self) -> str:
        lines = ["missing-data proportion per sensor:"]
        for sensor, frac in self.sensor_fractions.items():
            lines.append(f"  {sensor:18s} {frac:6.1%}")
        return "\n".join(lines)


def modality_missingness(dataset: Dataset) -> MissingnessReport:
    """Fraction of examples whose sensor block is entirely missing."""
    if len(dataset) == 0:
        raise ValueError("missingness undefined for an empty dataset")
    miss = dataset.missing
    sensor_fractions: dict[str, float] = {}
    for sensor in dataset.registry.sensors_present():
        cols = dataset.registry.indices_for_sensor(sensor)
        sensor_fractions[sensor] = float(np.mean(np.all(miss[:, cols], axis=1)))
    feature_fractions = {
        name: float(np.mean(miss[:, i])) for i, name in enumerate(dataset.registry.names)
    }
    return MissingnessReport(sensor_fractions, feature_fractions)


def drop_high_missing(
    dataset: Dataset, threshold: float = DROP_THRESHOLD, per_country: bool = False
) -> Dataset:
    """Remove all features of sensors missing in strictly more than ``threshold``
    of examples; the registry is re-issued. With ``per_country`` the fractions
    are evaluated within each country and a sensor is dropped when any single
    country exceeds the threshold."""
    if len(dataset) == 0:
        raise ValueError("cannot apply the drop rule to an empty dataset")
    worst: dict[str, float] = {}
    if per_country:
        for country in dataset.country_list():
            sub = dataset.subset(dataset.indices_for_country(country))
            for sensor, frac in modality_missingness(sub).sensor_fractions.items():
                worst[sensor] = max(worst.get(sensor, 0.0), frac)
    else:
        worst = modality_missingness(dataset).sensor_fractions

    dropped = sorted(s for s, frac in worst.items() if frac > threshold)
    if not dropped:
        return dataset
    for sensor in dropped:
        log.info("dropping sensor %s (missing fraction %.3f)", sensor, worst[sensor])
    keep = [
        i for i, d in enumerate(dataset.registry.descriptors) if d.sensor not in dropped
    ]
    return Dataset(
        dataset.registry.subset(keep),
        dataset.X[:, keep].copy(),
        dataset.y.copy(),
        dataset.pids.copy(),
        dataset.countries.copy(),
        dataset.ts.copy(),
    )


def _nan_euclidean(A: np.ndarray) -> np.ndarray:
    """Pairwise scaled distances; inf where rows share no observed feature."""
    M = (~np.isnan(A)).astype(np.float64)
    X0 = np.where(np.isnan(A), 0.0, A)
    G = X0 @ X0.T
    S = (X0 * X0) @ M.T
    C = M @ M.T
    d2 = S + S.T - 2.0 * G
    n_feat = A.shape[1]
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = np.where(C > 0, d2 * (n_feat / C), np.inf)
    scaled = np.where(scaled < 0, 0.0, scaled)  # numeric guard
    D = np.sqrt(scaled)
    np.fill_diagonal(D, np.inf)
    return D


def _impute_partition(A: np.ndarray, k: int, partition_name: str, names: list[str]) -> np.ndarray:
    out = A.copy()
    miss_mask = np.isnan(A)
    if not miss_mask.any():
        return out
    D = _nan_euclidean(A)
    for j in np.flatnonzero(miss_mask.any(axis=0)):
        observers = np.flatnonzero(~miss_mask[:, j])
        if observers.size == 0:
            raise ValueError(
                f"feature {names[j]!r} is missing in every row of partition {partition_name!r}"
            )
        rows = np.flatnonzero(miss_mask[:, j])
        sub = D[np.ix_(rows, observers)]
        take = min(k, observers.size)
        # stable sort: equal distances resolve to the lower row index
        nearest = np.argsort(sub, axis=1, kind="stable")[:, :take]
        vals = A[observers, j][nearest]
        out[rows, j] = vals.mean(axis=1)
    return out


def knn_impute(dataset: Dataset, k: int = KNN_K) -> Dataset:
    """Impute every missing cell, one country partition at a time."""
    if len(dataset) == 0:
        raise ValueError("cannot impute an empty dataset")
    if k < 1:
        raise ValueError("k must be >= 1")
    X = dataset.X.copy()
    names = dataset.registry.names
    for country in dataset.country_list():
        idx = dataset.indices_for_country(country)
        X[idx] = _impute_partition(X[idx], k, country, names)
    return Dataset(dataset.registry, X, dataset.y.copy(), dataset.pids.copy(),
                   dataset.countries.copy(), dataset.ts.copy())
