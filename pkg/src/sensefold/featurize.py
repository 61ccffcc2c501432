"""Windowed feature extraction: one 108-dimension vector per self-report.

Events are aggregated in a fixed-width window centered on the report
(half-open, ``[t - w/2, t + w/2)``). Missing values are carried as NaN with
the convention that pure counts (notifications, touches, detected steps,
episode counts) default to zero instead of missing.

The bulk path is vectorized per participant; when a participant's windows do
not overlap (the common case for hourly reports and widths up to 25 minutes),
event-to-window assignment is fully vectorized, otherwise a per-window
fallback is used.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional

import numpy as np

from .core import (
    ACTIVITY_CLASSES,
    MS_PER_DAY,
    MS_PER_HOUR,
    MS_PER_MINUTE,
    ActivityClass,
    ConfigError,
    SelfReport,
    Taxonomy,
    map_raw_activity,
)
from .ingestion import Corpus, SCREEN_ACTIONS
from .registry import APP_CATEGORIES, APP_NOT_FOUND, FeatureRegistry, default_registry

EARTH_RADIUS_KM = 6371.0088

DEFAULT_WIDTH_MIN = 20.0
MIN_WIDTH_MIN = 5.0
MAX_WIDTH_MIN = 25.0

_SCREEN_ON = SCREEN_ACTIONS.index("on")
_SCREEN_OFF = SCREEN_ACTIONS.index("off")
_SCREEN_TOUCH = SCREEN_ACTIONS.index("touch")
_PRESENCE_START = SCREEN_ACTIONS.index("presence_start")
_PRESENCE_END = SCREEN_ACTIONS.index("presence_end")

_N_APP_SLOTS = len(APP_CATEGORIES) + 1  # + not-found


@dataclass(frozen=True)
class TimeWindow:
    start: int  # inclusive, UTC ms
    end: int  # exclusive
    participant: str
    anchor: int  # the report timestamp at the window midpoint

    @property
    def width_ms(self) -> int:
        return self.end - self.start


def window_for(
    report: SelfReport,
    width_min: float = DEFAULT_WIDTH_MIN,
    min_width: float = MIN_WIDTH_MIN,
    max_width: float = MAX_WIDTH_MIN,
) -> TimeWindow:
    """Build the half-open aggregation window centered on a report."""
    if not (min_width <= width_min <= max_width):
        raise ConfigError(
            f"window width {width_min} min outside guard [{min_width}, {max_width}]; "
            "wider windows would overlap adjacent reports"
        )
    half = int(round(width_min * MS_PER_MINUTE / 2))
    return TimeWindow(report.timestamp - half, report.timestamp + half,
                      report.participant, report.timestamp)


def slice_events(corpus: Corpus, pid: str, window: TimeWindow) -> dict[str, dict[str, np.ndarray]]:
    """Materialize per-channel event slices for one window.

    Selection is by event timestamp with half-open semantics; app-usage
    intervals are selected by their start time and must be clipped to the
    window by consumers.
    """
    out: dict[str, dict[str, np.ndarray]] = {}
    d = corpus.data[pid]
    for name, table in d.channels.items():
        t = table["t"]
        lo = int(np.searchsorted(t, window.start, side="left"))
        hi = int(np.searchsorted(t, window.end, side="left"))
        out[name] = {col: arr[lo:hi] for col, arr in table.items()}
    return out


# ---------------------------------------------------------------------------
# Scalar extractors (shared by the bulk path and directly testable)


def haversine_km(lat1, lon1, lat2, lon2):
    """Great-circle distance in km; accepts scalars or numpy arrays."""
    p1, p2 = np.radians(lat1), np.radians(lat2)
    dp = p2 - p1
    dl = np.radians(lon2) - np.radians(lon1)
    a = np.sin(dp / 2.0) ** 2 + np.cos(p1) * np.cos(p2) * np.sin(dl / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0)))


def radius_of_gyration_km(lat: np.ndarray, lon: np.ndarray) -> float:
    """RMS great-circle distance to the centroid (arithmetic lat/lon mean)."""
    if len(lat) == 0:
        raise ValueError("radius of gyration needs at least one point")
    clat, clon = float(np.mean(lat)), float(np.mean(lon))
    d = haversine_km(np.asarray(lat, dtype=float), np.asarray(lon, dtype=float), clat, clon)
    return float(np.sqrt(np.mean(d * d)))


def distance_traveled_km(lat: np.ndarray, lon: np.ndarray) -> float:
    if len(lat) < 2:
        return 0.0
    return float(np.sum(haversine_km(lat[:-1], lon[:-1], lat[1:], lon[1:])))


def rssi_stats(device_codes: np.ndarray, values: np.ndarray) -> Optional[tuple]:
    """(device_count, mean, std, min, max) over a slice; None when empty."""
    if len(values) == 0:
        return None
    v = np.asarray(values, dtype=float)
    return (
        float(len(np.unique(device_codes))),
        float(np.mean(v)),
        float(np.std(v)),
        float(np.min(v)),
        float(np.max(v)),
    )


@dataclass(frozen=True)
class ScreenStats:
    touch_count: int
    presence_time_s: float  # NaN when the slice is empty
    presence_episodes: int
    episode_count: int
    mean_s: float
    min_s: float
    max_s: float
    std_s: float
    total_s: float


def screen_episode_stats(times: np.ndarray, actions: np.ndarray, window: TimeWindow) -> ScreenStats:
    """Episode statistics for one window.

    Episodes are on->off spans; spans open at a window edge are clipped to
    the edge (an off with no preceding on opens at window start, an on with
    no following off closes at window end). User-presence spans follow the
    same clipping. Standard deviation is the population form.
    """
    touch = 0
    episodes: list[float] = []
    presence: list[float] = []
    on_at: Optional[int] = None
    pres_at: Optional[int] = None
    saw_any = len(times) > 0
    first_off_seen = False
    first_pres_end_seen = False
    for t, a in zip(times.tolist(), actions.tolist()):
        if a == _SCREEN_TOUCH:
            touch += 1
        elif a == _SCREEN_ON:
            if on_at is None:
                on_at = t
        elif a == _SCREEN_OFF:
            if on_at is not None:
                episodes.append((t - on_at) / 1000.0)
                on_at = None
            elif not first_off_seen and not episodes:
                episodes.append((t - window.start) / 1000.0)
                first_off_seen = True
        elif a == _PRESENCE_START:
            if pres_at is None:
                pres_at = t
        elif a == _PRESENCE_END:
            if pres_at is not None:
                presence.append((t - pres_at) / 1000.0)
                pres_at = None
            elif not first_pres_end_seen and not presence:
                presence.append((t - window.start) / 1000.0)
                first_pres_end_seen = True
    if on_at is not None:
        episodes.append((window.end - on_at) / 1000.0)
    if pres_at is not None:
        presence.append((window.end - pres_at) / 1000.0)

    if episodes:
        ep = np.asarray(episodes)
        mean, mn, mx = float(np.mean(ep)), float(np.min(ep)), float(np.max(ep))
        std, total = float(np.std(ep)), float(np.sum(ep))
    else:
        mean = mn = mx = std = total = math.nan
    presence_time = float(np.sum(presence)) if saw_any else math.nan
    return ScreenStats(
        touch_count=touch,
        presence_time_s=presence_time,
        presence_episodes=len(presence),
        episode_count=len(episodes),
        mean_s=mean,
        min_s=mn,
        max_s=mx,
        std_s=std,
        total_s=total,
    )


def steps_counter_delta(counts: np.ndarray) -> float:
    """Sum of non-negative consecutive deltas; a reboot reset contributes the
    post-reset value as a fresh delta from zero. NaN with fewer than two
    samples."""
    if len(counts) < 2:
        return math.nan
    c = np.asarray(counts, dtype=np.int64)
    dd = np.diff(c)
    contrib = np.where(dd >= 0, dd, c[1:])
    return float(np.sum(contrib))


def simple_activity_times(times: np.ndarray, labels: np.ndarray, window: TimeWindow) -> Optional[np.ndarray]:
    """Zero-order-hold seconds per simple-activity label; None when empty."""
    if len(times) == 0:
        return None
    out = np.zeros(8, dtype=float)
    t = times.tolist()
    lab = labels.tolist()
    for i, (ti, li) in enumerate(zip(t, lab)):
        until = t[i + 1] if i + 1 < len(t) else window.end
        out[li] += (min(until, window.end) - ti) / 1000.0
    return out


# ---------------------------------------------------------------------------
# Dataset container


@dataclass(frozen=True)
class Example:
    values: np.ndarray
    missing: np.ndarray
    label: ActivityClass
    participant: str
    country: str
    timestamp: int


@dataclass
class Dataset:
    """Feature matrix plus labels and provenance columns; NaN marks missing."""

    registry: FeatureRegistry
    X: np.ndarray  # (n, d) float64
    y: np.ndarray  # (n,) int8 codes into ACTIVITY_CLASSES
    pids: np.ndarray  # (n,) object
    countries: np.ndarray  # (n,) object
    ts: np.ndarray  # (n,) int64

    def __len__(self) -> int:
        return int(self.X.shape[0])

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.X)

    def example(self, i: int) -> Example:
        return Example(
            values=self.X[i].copy(),
            missing=np.isnan(self.X[i]),
            label=ACTIVITY_CLASSES[int(self.y[i])],
            participant=str(self.pids[i]),
            country=str(self.countries[i]),
            timestamp=int(self.ts[i]),
        )

    def __iter__(self) -> Iterator[Example]:
        return (self.example(i) for i in range(len(self)))

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.registry, self.X[idx], self.y[idx], self.pids[idx],
                       self.countries[idx], self.ts[idx])

    def country_list(self) -> list[str]:
        return sorted(set(self.countries.tolist()))

    def indices_for_country(self, country: str) -> np.ndarray:
        return np.flatnonzero(self.countries == country)

    def participant_list(self) -> list[str]:
        return sorted(set(self.pids.tolist()))

    @staticmethod
    def concat(a: "Dataset", b: "Dataset") -> "Dataset":
        if a.registry.fingerprint() != b.registry.fingerprint():
            raise ValueError("cannot concatenate datasets with different registries")
        return Dataset(
            a.registry,
            np.vstack([a.X, b.X]),
            np.concatenate([a.y, b.y]),
            np.concatenate([a.pids, b.pids]),
            np.concatenate([a.countries, b.countries]),
            np.concatenate([a.ts, b.ts]),
        )


# ---------------------------------------------------------------------------
# Bulk featurization

_REGISTRY = default_registry()
_COL = {name: i for i, name in enumerate(_REGISTRY.names)}
_D = len(_REGISTRY)


def _cumsum0(v: np.ndarray) -> np.ndarray:
    out = np.empty(len(v) + 1, dtype=np.float64)
    out[0] = 0.0
    np.cumsum(v, out=out[1:])
    return out


def _range_minmax(v: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-range min and max over [lo_i, hi_i); NaN for empty ranges."""
    n_w = len(lo)
    mn = np.full(n_w, np.nan)
    mx = np.full(n_w, np.nan)
    nonempty = hi > lo
    if not v.size or not np.any(nonempty):
        return mn, mx
    v_ext = np.append(v, 0.0)
    idx = np.empty(2 * n_w, dtype=np.intp)
    idx[0::2] = lo
    idx[1::2] = np.maximum(hi, lo)  # guard: reduceat needs non-decreasing pairs
    mins = np.minimum.reduceat(v_ext, idx)[0::2]
    maxs = np.maximum.reduceat(v_ext, idx)[0::2]
    mn[nonempty] = mins[nonempty]
    mx[nonempty] = maxs[nonempty]
    return mn, mx


def _windows_disjoint(starts: np.ndarray, ends: np.ndarray) -> bool:
    if len(starts) < 2:
        return True
    return bool(np.all(starts[1:] >= ends[:-1]))


def _assign_windows(t: np.ndarray, starts: np.ndarray, ends: np.ndarray) -> np.ndarray:
    """Window index per event for disjoint sorted windows, -1 when outside."""
    idx = np.searchsorted(starts, t, side="right") - 1
    idx_clip = np.clip(idx, 0, len(starts) - 1)
    inside = (idx >= 0) & (t < ends[idx_clip])
    return np.where(inside, idx, -1)


def _fill_stat_block(X, rows, col0, table, starts, ends, id_col, val_col, disjoint):
    """device count + mean/std/min/max for one radio channel."""
    t = table["t"]
    v = table[val_col]
    ids = table[id_col]
    lo = np.searchsorted(t, starts, side="left")
    hi = np.searchsorted(t, ends, side="left")
    n = (hi - lo).astype(np.float64)
    nonempty = hi > lo

    s1 = _cumsum0(v)
    s2 = _cumsum0(v * v)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = np.where(nonempty, (s1[hi] - s1[lo]) / n, np.nan)
        var = np.where(nonempty, (s2[hi] - s2[lo]) / n - mean * mean, np.nan)
    std = np.sqrt(np.clip(var, 0.0, None))
    mn, mx = _range_minmax(v, lo, hi)

    count = np.full(len(starts), np.nan)
    if disjoint:
        w = _assign_windows(t, starts, ends)
        distinct = _distinct_per_window(w, ids, len(starts))
        count = np.where(nonempty, distinct, np.nan)
    else:
        for i in range(len(starts)):
            if nonempty[i]:
                count[i] = float(len(np.unique(ids[lo[i]:hi[i]])))

    X[rows, col0] = count
    X[rows, col0 + 1] = mean
    X[rows, col0 + 2] = std
    X[rows, col0 + 3] = mn
    X[rows, col0 + 4] = mx


def _distinct_per_window(w: np.ndarray, ids: np.ndarray, n_w: int) -> np.ndarray:
    """Count of distinct ids per window (w == -1 entries ignored)."""
    out = np.zeros(n_w, dtype=float)
    sel = w >= 0
    if np.any(sel):
        span = int(ids.max()) + 1 if ids.size else 1
        key = w[sel].astype(np.int64) * span + ids[sel]
        uniq = np.unique(key)
        out = np.bincount((uniq // span).astype(np.intp), minlength=n_w).astype(float)
    return out


def _featurize_participant(
    corpus: Corpus,
    pid: str,
    starts: np.ndarray,
    ends: np.ndarray,
    anchors: np.ndarray,
    offsets: np.ndarray,
    app_slot_map: np.ndarray,
) -> np.ndarray:
    d = corpus.data[pid]
    n_w = len(starts)
    X = np.full((n_w, _D), np.nan)
    disjoint = _windows_disjoint(starts, ends)

    # --- location
    tab = d.channels["location"]
    t = tab["t"]
    lo = np.searchsorted(t, starts, side="left")
    hi = np.searchsorted(t, ends, side="left")
    nonempty = hi > lo
    if np.any(nonempty):
        lat, lon, alt = tab["lat"], tab["lon"], tab["alt"]
        n = (hi - lo).astype(float)
        ca = _cumsum0(alt)
        with np.errstate(invalid="ignore", divide="ignore"):
            X[:, _COL["location_altitude"]] = np.where(nonempty, (ca[hi] - ca[lo]) / n, np.nan)
        step = haversine_km(lat[:-1], lon[:-1], lat[1:], lon[1:]) if len(lat) > 1 else np.empty(0)
        cd = _cumsum0(step)
        dist = np.where(hi - lo >= 2, cd[np.maximum(hi - 1, lo)] - cd[lo], 0.0)
        X[:, _COL["location_distance_traveled"]] = np.where(nonempty, dist, np.nan)
        cl, cn = _cumsum0(lat), _cumsum0(lon)
        with np.errstate(invalid="ignore", divide="ignore"):
            clat = (cl[hi] - cl[lo]) / n
            clon = (cn[hi] - cn[lo]) / n
        if disjoint:
            w = _assign_windows(t, starts, ends)
            sel = w >= 0
            rog = np.full(n_w, np.nan)
            if np.any(sel):
                dd = haversine_km(lat[sel], lon[sel], clat[w[sel]], clon[w[sel]])
                ssum = np.bincount(w[sel], weights=dd * dd, minlength=n_w)
                with np.errstate(invalid="ignore", divide="ignore"):
                    rog = np.where(nonempty, np.sqrt(ssum / np.where(n > 0, n, 1.0)), np.nan)
            X[:, _COL["location_radius_of_gyration"]] = rog
        else:
            for i in range(n_w):
                if nonempty[i]:
                    X[i, _COL["location_radius_of_gyration"]] = radius_of_gyration_km(
                        lat[lo[i]:hi[i]], lon[lo[i]:hi[i]]
                    )

    # --- bluetooth and cellular stat blocks
    _fill_stat_block(X, slice(None), _COL["bt_le_num_of_devices"], d.channels["bt_le"],
                     starts, ends, "dev", "rssi", disjoint)
    _fill_stat_block(X, slice(None), _COL["bt_classic_num_of_devices"], d.channels["bt_classic"],
                     starts, ends, "dev", "rssi", disjoint)
    for tech in ("gsm", "wcdma", "lte"):
        _fill_stat_block(X, slice(None), _COL[f"cellular_{tech}_num_of_devices"],
                         d.channels[f"cell_{tech}"], starts, ends, "cell", "signal", disjoint)

    # --- wifi (stat block + connected indicator)
    tab = d.channels["wifi"]
    _fill_stat_block(X, slice(None), _COL["wifi_num_of_devices"], tab, starts, ends,
                     "dev", "rssi", disjoint)
    t = tab["t"]
    lo = np.searchsorted(t, starts, side="left")
    hi = np.searchsorted(t, ends, side="left")
    nonempty = hi > lo
    conn = _cumsum0(tab["connected"].astype(np.float64))
    X[:, _COL["wifi_connected"]] = np.where(nonempty, (conn[hi] - conn[lo]) > 0, np.nan)

    # --- notifications (counts default to zero)
    tab = d.channels["notification"]
    t = tab["t"]
    lo = np.searchsorted(t, starts, side="left")
    hi = np.searchsorted(t, ends, side="left")
    posted = (tab["action"] == 0).astype(np.float64)
    removed = (tab["action"] == 1).astype(np.float64)
    cp, cr = _cumsum0(posted), _cumsum0(removed)
    X[:, _COL["notifications_posted"]] = cp[hi] - cp[lo]
    X[:, _COL["notifications_removed"]] = cr[hi] - cr[lo]
    if disjoint:
        w = _assign_windows(t, starts, ends)
        for action, col in ((0, "notifications_posted_wo_dups"), (1, "notifications_removed_wo_dups")):
            mask = tab["action"] == action
            X[:, _COL[col]] = _distinct_per_window(
                np.where(mask, w, -1), tab["key"], n_w
            )
    else:
        for action, col in ((0, "notifications_posted_wo_dups"), (1, "notifications_removed_wo_dups")):
            for i in range(n_w):
                seg = slice(lo[i], hi[i])
                keys = tab["key"][seg][tab["action"][seg] == action]
                X[i, _COL[col]] = float(len(np.unique(keys)))

    # --- proximity
    tab = d.channels["proximity"]
    t, v = tab["t"], tab["value"]
    lo = np.searchsorted(t, starts, side="left")
    hi = np.searchsorted(t, ends, side="left")
    nonempty = hi > lo
    n = (hi - lo).astype(float)
    s1, s2 = _cumsum0(v), _cumsum0(v * v)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = np.where(nonempty, (s1[hi] - s1[lo]) / n, np.nan)
        var = np.where(nonempty, (s2[hi] - s2[lo]) / n - mean * mean, np.nan)
    X[:, _COL["proximity_mean"]] = mean
    X[:, _COL["proximity_std"]] = np.sqrt(np.clip(var, 0.0, None))
    mn, mx = _range_minmax(v, lo, hi)
    X[:, _COL["proximity_min"]] = mn
    X[:, _COL["proximity_max"]] = mx

    # --- simple activity hold times
    tab = d.channels["activity"]
    t, lab = tab["t"], tab["label"]
    lo = np.searchsorted(t, starts, side="left")
    hi = np.searchsorted(t, ends, side="left")
    nonempty = hi > lo
    act0 = _COL["activity_still"]
    if np.any(nonempty):
        if disjoint:
            w = _assign_windows(t, starts, ends)
            sel = w >= 0
            wi = w[sel]
            ti = t[sel]
            li = lab[sel].astype(np.int64)
            nxt_t = np.empty(len(ti), dtype=np.int64)
            nxt_t[:-1] = ti[1:]
            nxt_t[-1] = 0
            same = np.zeros(len(ti), dtype=bool)
            if len(ti) > 1:
                same[:-1] = wi[1:] == wi[:-1]
            until = np.where(same, nxt_t, ends[wi])
            span = (np.minimum(until, ends[wi]) - ti) / 1000.0
            key = wi.astype(np.int64) * 8 + li
            sums = np.bincount(key, weights=span, minlength=n_w * 8).reshape(n_w, 8)
            X[nonempty, act0:act0 + 8] = sums[nonempty]
        else:
            for i in range(n_w):
                if nonempty[i]:
                    win = TimeWindow(int(starts[i]), int(ends[i]), pid, int(anchors[i]))
                    X[i, act0:act0 + 8] = simple_activity_times(t[lo[i]:hi[i]], lab[lo[i]:hi[i]], win)

    # --- steps
    tab = d.channels["steps_counter"]
    t, cnt = tab["t"], tab["count"]
    lo = np.searchsorted(t, starts, side="left")
    hi = np.searchsorted(t, ends, side="left")
    dd = np.diff(cnt) if len(cnt) > 1 else np.empty(0, dtype=np.int64)
    contrib = np.where(dd >= 0, dd, cnt[1:]) if len(cnt) > 1 else np.empty(0)
    cc = _cumsum0(contrib)
    counter = np.where(hi - lo >= 2, cc[np.maximum(hi - 1, lo)] - cc[lo], np.nan)
    X[:, _COL["steps_counter"]] = counter
    t = d.channels["steps_detected"]["t"]
    lo = np.searchsorted(t, starts, side="left")
    hi = np.searchsorted(t, ends, side="left")
    X[:, _COL["steps_detected"]] = (hi - lo).astype(float)

    # --- screen episodes (stateful; per-window loop)
    tab = d.channels["screen"]
    t, act = tab["t"], tab["action"]
    lo = np.searchsorted(t, starts, side="left")
    hi = np.searchsorted(t, ends, side="left")
    s0 = _COL["touch_events"]
    for i in range(n_w):
        win = TimeWindow(int(starts[i]), int(ends[i]), pid, int(anchors[i]))
        st = screen_episode_stats(t[lo[i]:hi[i]], act[lo[i]:hi[i]], win)
        X[i, s0] = st.touch_count
        X[i, s0 + 1] = st.presence_time_s
        X[i, s0 + 2] = st.presence_episodes
        X[i, s0 + 3] = st.episode_count
        X[i, s0 + 4] = st.mean_s
        X[i, s0 + 5] = st.min_s
        X[i, s0 + 6] = st.max_s
        X[i, s0 + 7] = st.std_s
        X[i, s0 + 8] = st.total_s

    # --- app usage (selected by interval start; clipped to window end)
    tab = d.channels["app"]
    t, ev_end, cat = tab["t"], tab["end"], tab["cat"]
    lo = np.searchsorted(t, starts, side="left")
    hi = np.searchsorted(t, ends, side="left")
    nonempty = hi > lo
    a0 = _COL["app_" + APP_CATEGORIES[0]]
    if np.any(nonempty):
        slots = app_slot_map[cat] if len(cat) else cat
        if disjoint:
            w = _assign_windows(t, starts, ends)
            sel = w >= 0
            wi = w[sel]
            span = (np.minimum(ev_end[sel], ends[wi]) - t[sel]) / 1000.0
            key = wi.astype(np.int64) * _N_APP_SLOTS + slots[sel]
            sums = np.bincount(key, weights=span, minlength=n_w * _N_APP_SLOTS)
            sums = sums.reshape(n_w, _N_APP_SLOTS)
            X[nonempty, a0:a0 + _N_APP_SLOTS] = sums[nonempty]
        else:
            for i in range(n_w):
                if not nonempty[i]:
                    continue
                acc = np.zeros(_N_APP_SLOTS)
                for j in range(lo[i], hi[i]):
                    acc[slots[j]] += (min(int(ev_end[j]), int(ends[i])) - int(t[j])) / 1000.0
                X[i, a0:a0 + _N_APP_SLOTS] = acc

    # --- time features (always present)
    local = anchors + offsets.astype(np.int64) * MS_PER_MINUTE
    hour = (local % MS_PER_DAY) // MS_PER_HOUR
    X[:, _COL["hour_of_day"]] = hour.astype(float)
    period = np.full(n_w, 4.0)  # night
    period[(hour >= 6) & (hour < 10)] = 0.0
    period[(hour >= 10) & (hour < 14)] = 1.0
    period[(hour >= 14) & (hour < 18)] = 2.0
    period[(hour >= 18) & (hour < 22)] = 3.0
    X[:, _COL["day_period"]] = period
    weekday = ((local // MS_PER_DAY) + 3) % 7
    X[:, _COL["weekend"]] = (weekday >= 5).astype(float)

    return X


def featurize_corpus(
    corpus: Corpus,
    taxonomy: Taxonomy,
    width_min: float = DEFAULT_WIDTH_MIN,
    min_width: float = MIN_WIDTH_MIN,
    max_width: float = MAX_WIDTH_MIN,
) -> Dataset:
    """Extract one example per mapped self-report, in (participant, t) order."""
    if not (min_width <= width_min <= max_width):
        raise ConfigError(
            f"window width {width_min} min outside guard [{min_width}, {max_width}]"
        )
    half = int(round(width_min * MS_PER_MINUTE / 2))

    # Map the raw-label vocabulary once.
    vocab_class = np.full(len(corpus.raw_vocab) or 1, -1, dtype=np.int16)
    for code, raw in enumerate(corpus.raw_vocab):
        cls = map_raw_activity(raw, taxonomy)
        if cls is not None:
            vocab_class[code] = list(ACTIVITY_CLASSES).index(cls)

    app_slot = {cat: i for i, cat in enumerate(APP_CATEGORIES)}
    not_found_slot = len(APP_CATEGORIES)
    app_slot_map = np.fromiter(
        (app_slot.get(cat, not_found_slot) for cat in corpus.app_vocab),
        dtype=np.int64,
        count=len(corpus.app_vocab),
    )

    blocks: list[np.ndarray] = []
    ys: list[np.ndarray] = []
    pid_col: list[str] = []
    country_col: list[str] = []
    t_col: list[np.ndarray] = []

    for pid in corpus.pids:
        d = corpus.data[pid]
        if d.report_t.size == 0:
            continue
        classes = vocab_class[d.report_raw]
        keep = classes >= 0
        if not np.any(keep):
            continue
        anchors = d.report_t[keep]
        offsets = d.report_offset[keep]
        starts = anchors - half
        ends = anchors + half
        X = _featurize_participant(corpus, pid, starts, ends, anchors, offsets, app_slot_map)
        blocks.append(X)
        ys.append(classes[keep].astype(np.int8))
        pid_col.extend([pid] * int(keep.sum()))
        country_col.extend([corpus.participants[pid].country] * int(keep.sum()))
        t_col.append(anchors)

    registry = default_registry()
    if not blocks:
        return Dataset(registry, np.empty((0, _D)), np.empty(0, dtype=np.int8),
                       np.empty(0, dtype=object), np.empty(0, dtype=object),
                       np.empty(0, dtype=np.int64))
    return Dataset(
        registry,
        np.vstack(blocks),
        np.concatenate(ys),
        np.asarray(pid_col, dtype=object),
        np.asarray(country_col, dtype=object),
        np.concatenate(t_col),
    )


def extract_features(
    corpus: Corpus,
    report: SelfReport,
    taxonomy: Taxonomy,
    width_min: float = DEFAULT_WIDTH_MIN,
) -> Optional[Example]:
    """Single-report extraction; None when the label is dropped or unknown."""
    cls = map_raw_activity(report.raw_activity, taxonomy)
    if cls is None:
        return None
    window = window_for(report, width_min)
    app_slot = {cat: i for i, cat in enumerate(APP_CATEGORIES)}
    not_found_slot = len(APP_CATEGORIES)
    app_slot_map = np.fromiter(
        (app_slot.get(cat, not_found_slot) for cat in corpus.app_vocab),
        dtype=np.int64,
        count=len(corpus.app_vocab),
    )
    X = _featurize_participant(
        corpus,
        report.participant,
        np.asarray([window.start], dtype=np.int64),
        np.asarray([window.end], dtype=np.int64),
        np.asarray([report.timestamp], dtype=np.int64),
        np.asarray([report.local_offset], dtype=np.int32),
        app_slot_map,
    )
    values = X[0]
    return Example(
        values=values,
        missing=np.isnan(values),
        label=cls,
        participant=report.participant,
        country=corpus.participants[report.participant].country,
        timestamp=report.timestamp,
    )


# ---------------------------------------------------------------------------
# CSV round-trip

_META_COLS = ("label", "pid", "country", "t")


def dataset_to_csv(dataset: Dataset, path: str | Path, header_comment: Optional[str] = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        writer = csv.writer(fh)
        writer.writerow(dataset.registry.names + list(_META_COLS))
        for i in range(len(dataset)):
            row = [("" if math.isnan(v) else repr(v)) for v in dataset.X[i].tolist()]
            row += [
                ACTIVITY_CLASSES[int(dataset.y[i])].value,
                str(dataset.pids[i]),
                str(dataset.countries[i]),
                str(int(dataset.ts[i])),
            ]
            writer.writerow(row)


def dataset_from_csv(path: str | Path, registry: FeatureRegistry) -> Dataset:
    class_code = {c.value: i for i, c in enumerate(ACTIVITY_CLASSES)}
    with open(path, newline="", encoding="utf-8") as fh:
        first = fh.readline()
        if not first.startswith("#"):
            fh.seek(0)
        reader = csv.reader(fh)
        header = next(reader)
        expected = registry.names + list(_META_COLS)
        if header != expected:
            raise ValueError("feature CSV header does not match the registry")
        d = len(registry)
        xs, ys, pids, countries, ts = [], [], [], [], []
        for row in reader:
            xs.append([math.nan if cell == "" else float(cell) for cell in row[:d]])
            ys.append(class_code[row[d]])
            pids.append(row[d + 1])
            countries.append(row[d + 2])
            ts.append(int(row[d + 3]))
    return Dataset(
        registry,
        np.asarray(xs, dtype=np.float64).reshape(len(xs), d),
        np.asarray(ys, dtype=np.int8),
        np.asarray(pids, dtype=object),
        np.asarray(countries, dtype=object),
        np.asarray(ts, dtype=np.int64),
    )
