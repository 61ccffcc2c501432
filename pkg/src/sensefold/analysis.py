"""Statistical analyses: one-way ANOVA feature ranking and hourly densities.

The ANOVA F compares one activity against the rest of the examples, feature
by feature, within one country. P-values come from the F distribution via an
in-repo regularized incomplete beta (continued-fraction evaluation), so the
runtime package needs no external stats dependency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ACTIVITY_CLASSES, MS_PER_DAY, MS_PER_HOUR, MS_PER_MINUTE, Taxonomy, map_raw_activity
from .featurize import Dataset
from .ingestion import Corpus

_BETA_EPS = 3e-16
_BETA_FPMIN = 1e-300
_BETA_MAXIT = 300


def _betacf(a: float, b: float, x: float) -> float:
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _BETA_FPMIN:
        d = _BETA_FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _BETA_MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETA_FPMIN:
            d = _BETA_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _BETA_FPMIN:
            c = _BETA_FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETA_FPMIN:
            d = _BETA_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _BETA_FPMIN:
            c = _BETA_FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETA_EPS:
            return h
    raise ArithmeticError("incomplete beta continued fraction failed to converge")


def betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if not (a > 0 and b > 0):
        raise ValueError("a and b must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def f_sf(f_value: float, df1: int, df2: int) -> float:
    """Survival function of the F distribution: P(F > f)."""
    if math.isinf(f_value):
        return 0.0
    if f_value <= 0:
        return 1.0
    x = df2 / (df2 + df1 * f_value)
    return betainc_reg(df2 / 2.0, df1 / 2.0, x)


@dataclass(frozen=True)
class AnovaResult:
    feature: str
    f_value: float
    p_value: float


def anova_f(values: np.ndarray, in_group: np.ndarray, feature: str = "") -> AnovaResult:
    """One-way ANOVA between a group and its complement, df (1, n-2)."""
    values = np.asarray(values, dtype=float)
    in_group = np.asarray(in_group, dtype=bool)
    if values.shape != in_group.shape:
        raise ValueError("values and membership must align")
    n = values.size
    n1 = int(in_group.sum())
    n2 = n - n1
    if n1 == 0 or n2 == 0:
        raise ValueError("both groups must be non-empty")
    if n < 3:
        raise ValueError("ANOVA needs at least 3 observations")
    g1, g2 = values[in_group], values[~in_group]
    m1, m2 = float(np.mean(g1)), float(np.mean(g2))
    grand = float(np.mean(values))
    ss_between = n1 * (m1 - grand) ** 2 + n2 * (m2 - grand) ** 2
    ss_within = float(np.sum((g1 - m1) ** 2) + np.sum((g2 - m2) ** 2))
    df2 = n - 2
    if ss_within == 0.0:
        if m1 == m2:
            raise ValueError("zero within-group variance with equal group means")
        return AnovaResult(feature, math.inf, 0.0)
    f_value = ss_between / (ss_within / df2)
    return AnovaResult(feature, f_value, f_sf(f_value, 1, df2))


def top_features(
    dataset: Dataset, country: str, k: int = 3, alpha: float = 0.05
) -> dict[str, list[AnovaResult]]:
    """Per-activity ranked significant features for one country.

    Missing cells are excluded feature-wise; features that cannot produce a
    valid F (constant, or a group with no observed values) are skipped.
    """
    idx = dataset.indices_for_country(country)
    if idx.size == 0:
        raise ValueError(f"country {country!r} not present in the dataset")
    sub = dataset.subset(idx)
    names = dataset.registry.names
    out: dict[str, list[AnovaResult]] = {}
    for code, cls in enumerate(ACTIVITY_CLASSES):
        membership = sub.y == code
        results: list[AnovaResult] = []
        if membership.any() and (~membership).any():
            for j, name in enumerate(names):
                col = sub.X[:, j]
                observed = ~np.isnan(col)
                if not observed.any():
                    continue
                try:
                    res = anova_f(col[observed], membership[observed], feature=name)
                except ValueError:
                    continue
                if res.p_value < alpha:
                    results.append(res)
            results.sort(key=lambda r: (-r.f_value, r.feature))
        out[cls.value] = results[:k]
    return out


def hourly_density(corpus: Corpus, taxonomy: Taxonomy) -> dict[tuple[str, str], np.ndarray]:
    """24-bin local-hour histograms per (country, activity class), each
    normalized to sum to one; empty cells are omitted."""
    counts: dict[tuple[str, str], np.ndarray] = {}
    mapped = [map_raw_activity(raw, taxonomy) for raw in corpus.raw_vocab]
    for pid in corpus.pids:
        country = corpus.participants[pid].country
        d = corpus.data[pid]
        if d.report_t.size == 0:
            continue
        local = d.report_t + d.report_offset.astype(np.int64) * MS_PER_MINUTE
        hours = ((local % MS_PER_DAY) // MS_PER_HOUR).astype(np.intp)
        for hour, raw_code in zip(hours.tolist(), d.report_raw.tolist()):
            cls = mapped[raw_code]
            if cls is None:
                continue
            key = (country, cls.value)
            if key not in counts:
                counts[key] = np.zeros(24)
            counts[key][hour] += 1.0
    return {key: hist / hist.sum() for key, hist in sorted(counts.items())}
