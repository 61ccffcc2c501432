"""Deterministic multi-country corpus generator.

Each country is a shifted copy of one base behavioral profile: an
hour-conditioned activity schedule plus per-activity sensor emission
parameters. The shift operator rotates schedules in time and perturbs
emission parameters along a seeded direction, scaled by a distance
``delta``, so countries placed at nearby shift weights form clusters.
Participant idiosyncrasy adds per-participant schedule rotation and
per-channel rate multipliers, scaled by ``sigma_p``.

Emission models are intentionally simple parametric families (Poisson
counts, log-normal durations, Gaussian RSSI): they act as transparent
oracles for the feature extractors rather than as realistic telemetry.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .core import ACTIVITY_CLASSES, MS_PER_DAY, MS_PER_HOUR, MS_PER_MINUTE, Participant
from .ingestion import (
    CHANNELS,
    Corpus,
    ParticipantData,
    SCREEN_ACTIONS,
    SIMPLE_ACTIVITY_LABELS,
    _CHANNEL_COLUMNS,
    _sort_channel,
)
from .seeding import derive_seed

# Local midnight of the first generated day (a Monday).
START_LOCAL_MS = 1_604_275_200_000

_N_CLASSES = len(ACTIVITY_CLASSES)
_CLS = {c.value: i for i, c in enumerate(ACTIVITY_CLASSES)}

# How far (hours) a unit of delta rotates schedules; eating gets an extra
# meal-time drift on top of the common rotation.
ROTATION_H_PER_DELTA = 4.5
MEAL_EXTRA_H_PER_DELTA = 1.0

_EVENT_HALF_WINDOW_MS = int(12.5 * MS_PER_MINUTE)  # covers widths up to 25 min
_REPORT_JITTER_MS = 5 * MS_PER_MINUTE

_SCREEN_ON = SCREEN_ACTIONS.index("on")
_SCREEN_OFF = SCREEN_ACTIONS.index("off")
_SCREEN_TOUCH = SCREEN_ACTIONS.index("touch")
_PRESENCE_START = SCREEN_ACTIONS.index("presence_start")
_PRESENCE_END = SCREEN_ACTIONS.index("presence_end")

_ACT = {label: i for i, label in enumerate(SIMPLE_ACTIVITY_LABELS)}


# ---------------------------------------------------------------------------
# Profiles


@dataclass(frozen=True)
class CountryProfile:
    """Hour-conditioned activity schedule plus emission parameters."""

    weekday: np.ndarray  # (12, 24), columns sum to 1
    weekend: np.ndarray  # (12, 24), columns sum to 1
    emissions: dict[str, float]


def _bump(center: float, width: float, weight: float) -> np.ndarray:
    h = np.arange(24, dtype=float)
    d = np.minimum(np.abs(h - center), 24.0 - np.abs(h - center))
    return weight * np.exp(-0.5 * (d / width) ** 2)


def _normalize_columns(m: np.ndarray) -> np.ndarray:
    return m / m.sum(axis=0, keepdims=True)


_WEEKEND_MULT = {
    "Sleeping": 1.3, "Studying": 0.7, "Eating": 1.0, "WatchingSomething": 1.5,
    "OnlineCommSocialMedia": 1.3, "AttendingClass": 0.08, "Working": 0.3,
    "Resting": 1.5, "Reading": 1.3, "Walking": 1.3, "Sport": 1.4, "Shopping": 2.5,
}

_BASE_FLOOR = 0.06


def _base_rows() -> np.ndarray:
    rows = np.zeros((_N_CLASSES, 24))
    rows[_CLS["Sleeping"]] = _bump(2.5, 3.2, 14.0) + _bump(7.0, 1.5, 4.0)
    rows[_CLS["Studying"]] = _bump(10.0, 2.2, 8.0) + _bump(16.0, 2.2, 7.0) + _bump(21.0, 2.0, 3.0)
    rows[_CLS["Eating"]] = _bump(8.0, 0.9, 5.0) + _bump(12.7, 1.1, 10.0) + _bump(19.8, 1.2, 9.0)
    rows[_CLS["WatchingSomething"]] = _bump(21.5, 1.8, 7.0) + _bump(13.0, 1.5, 2.0)
    rows[_CLS["OnlineCommSocialMedia"]] = _bump(12.3, 1.6, 5.0) + _bump(22.3, 1.8, 7.0)
    rows[_CLS["AttendingClass"]] = _bump(9.5, 1.6, 9.0) + _bump(14.5, 1.6, 7.0)
    rows[_CLS["Working"]] = _bump(10.5, 2.6, 6.0) + _bump(15.5, 2.6, 5.0)
    rows[_CLS["Resting"]] = _bump(15.5, 1.8, 4.0) + _bump(20.5, 1.8, 4.0)
    rows[_CLS["Reading"]] = _bump(21.8, 1.6, 4.0) + _bump(8.5, 1.5, 1.5)
    rows[_CLS["Walking"]] = _bump(8.6, 1.1, 4.0) + _bump(17.6, 1.3, 4.5)
    rows[_CLS["Sport"]] = _bump(7.6, 1.1, 3.0) + _bump(18.3, 1.4, 4.0)
    rows[_CLS["Shopping"]] = _bump(17.2, 1.6, 3.0) + _bump(11.0, 1.5, 1.5)
    return rows + _BASE_FLOOR


def _base_emissions() -> dict[str, float]:
    acts = [c.value for c in ACTIVITY_CLASSES]
    em: dict[str, float] = {}

    def per_act(family: str, values: dict[str, float], default: float) -> None:
        for act in acts:
            em[f"{family}.{act}"] = values.get(act, default)

    # sedentary classes share one step rate so stillness alone cannot
    # separate them; walking stays pinned at 20x the studying rate
    per_act("rate.steps", {"Walking": 20.0, "Sport": 15.0, "Shopping": 8.0,
                           "Sleeping": 0.05}, 1.0)
    per_act("rate.screen_episodes", {"OnlineCommSocialMedia": 2.4, "WatchingSomething": 1.9,
                                     "Resting": 1.7, "Working": 1.6, "Eating": 1.2,
                                     "Studying": 1.3, "Shopping": 1.0, "Reading": 1.0,
                                     "AttendingClass": 1.0, "Walking": 0.8, "Sport": 0.6,
                                     "Sleeping": 0.3}, 1.2)
    per_act("dur.screen_episode", {"WatchingSomething": 260.0, "OnlineCommSocialMedia": 130.0,
                                   "Resting": 110.0, "Working": 90.0, "Studying": 70.0,
                                   "Eating": 55.0, "AttendingClass": 40.0, "Shopping": 35.0,
                                   "Walking": 30.0, "Sport": 25.0, "Reading": 150.0,
                                   "Sleeping": 25.0}, 60.0)
    per_act("rate.touch", {"OnlineCommSocialMedia": 0.05, "WatchingSomething": 0.015}, 0.025)
    # Notification arrival is sender-driven: flat across activities.
    per_act("rate.notif_posted", {"Sleeping": 0.8}, 2.0)
    per_act("p.notif_removed", {"OnlineCommSocialMedia": 0.7, "Working": 0.5}, 0.35)
    # Radio context distinguishes home from away, not one activity from another.
    away = {"AttendingClass", "Shopping", "Walking", "Sport"}

    def home_away(family: str, home_val: float, away_val: float) -> None:
        for act in acts:
            em[f"{family}.{act}"] = away_val if act in away else home_val

    home_away("count.bt_le", 1.2, 3.0)
    home_away("count.bt_classic", 0.5, 1.2)
    home_away("count.wifi", 4.0, 7.0)
    home_away("p.wifi_connected", 0.9, 0.18)
    home_away("rssi.wifi", -52.0, -66.0)
    # Per-window probability that the participant actually interacted with
    # the phone; idle windows show only generic low-level phone behavior.
    # engagement barely separates waking activities; which class a window
    # belongs to must come from when it happens and how the phone is used
    per_act("p.engaged", {"OnlineCommSocialMedia": 0.62, "WatchingSomething": 0.55,
                          "Eating": 0.45, "AttendingClass": 0.45, "Shopping": 0.45,
                          "Sport": 0.45, "Sleeping": 0.05}, 0.5)
    home_away("rssi.bt", -62.0, -70.0)
    home_away("count.cell", 1.4, 2.2)
    home_away("signal.cell", -95.0, -86.0)
    per_act("p.prox_near", {"Sleeping": 0.9, "Walking": 0.85, "Sport": 0.8,
                            "Shopping": 0.7}, 0.3)
    per_act("rate.loc_move_km", {"Walking": 1.2, "Sport": 1.8, "Shopping": 0.45}, 0.02)

    em["p.cell.gsm"] = 0.07
    em["p.cell.wcdma"] = 0.45
    em["p.cell.lte"] = 0.92
    em["app_background.not-found"] = 25.0

    # Idle-window behavior, shared by every activity class.
    em["rate.screen_episodes.__idle"] = 0.35
    em["dur.screen_episode.__idle"] = 30.0
    em["rate.touch.__idle"] = 0.015
    em["p.notif_removed.__idle"] = 0.1
    em["app.__idle.not-found"] = 15.0

    # Deliberately overlapping mixtures with comparable magnitudes: country
    # factors in [1/2, 2] can then reorder a class's app signature (e.g. an
    # unclassifiable "not-found" app displacing entertainment), and sedentary
    # classes share social / communication mass so no channel is decisive.
    app_secs = {
        "Studying": {"education": 80.0, "productivity": 50.0, "social": 35.0, "not-found": 40.0},
        "Eating": {"social": 45.0, "food & drink": 35.0, "communication": 30.0, "not-found": 30.0},
        "WatchingSomething": {"entertainment": 110.0, "video players & editors": 70.0,
                              "social": 40.0, "not-found": 55.0},
        "OnlineCommSocialMedia": {"social": 120.0, "communication": 90.0,
                                  "entertainment": 35.0, "not-found": 40.0},
        "AttendingClass": {"communication": 40.0, "education": 45.0, "social": 30.0, "not-found": 25.0},
        "Working": {"productivity": 90.0, "communication": 55.0, "business": 40.0,
                    "tools": 35.0, "not-found": 30.0},
        "Resting": {"casual": 50.0, "social": 45.0, "music": 45.0, "puzzle": 35.0, "not-found": 30.0},
        "Reading": {"books & reference": 90.0, "news & magazines": 55.0, "social": 25.0, "not-found": 35.0},
        "Walking": {"maps & navigation": 50.0, "music": 55.0, "social": 30.0, "not-found": 25.0},
        "Sport": {"health & fitness": 80.0, "music": 45.0, "not-found": 30.0},
        "Shopping": {"shopping": 70.0, "maps & navigation": 40.0, "social": 30.0, "not-found": 30.0},
    }
    for act, table in app_secs.items():
        for cat, secs in table.items():
            em[f"app.{act}.{cat}"] = secs
    return em


_BASE_PROFILE: Optional[CountryProfile] = None


def base_profile() -> CountryProfile:
    global _BASE_PROFILE
    if _BASE_PROFILE is None:
        rows = _base_rows()
        weekend = rows.copy()
        for act, mult in _WEEKEND_MULT.items():
            weekend[_CLS[act]] *= mult
        weekend = weekend + _BASE_FLOOR
        _BASE_PROFILE = CountryProfile(
            weekday=_normalize_columns(rows),
            weekend=_normalize_columns(weekend),
            emissions=_base_emissions(),
        )
    return _BASE_PROFILE


def _rotate_row(row: np.ndarray, hours: float) -> np.ndarray:
    """Circularly shift a 24-hour curve later by a fractional hour offset."""
    k = int(math.floor(hours))
    f = hours - k
    shifted = np.roll(row, k)
    if f:
        shifted = (1.0 - f) * shifted + f * np.roll(row, k + 1)
    return shifted


def _rotate_schedule(schedule: np.ndarray, hours: float, meal_extra: float) -> np.ndarray:
    out = np.empty_like(schedule)
    for i in range(schedule.shape[0]):
        extra = meal_extra if i == _CLS["Eating"] else 0.0
        out[i] = _rotate_row(schedule[i], hours + extra)
    return _normalize_columns(out)


def shift_profile(profile: CountryProfile, delta: float, seed: int) -> CountryProfile:
    """Move a profile ``delta`` along a seeded shift direction.

    Schedules rotate later by ``delta`` * 2.5 h (eating drifts a further
    ``delta`` * 0.75 h); rate-like emissions scale by factors in
    [1/(1+delta), 1+delta]; RSSI/signal means shift additively and
    probability parameters shift in logit space. ``delta`` = 0 is the
    identity for any seed.
    """
    if delta < 0:
        raise ValueError("delta must be non-negative")
    rot = delta * ROTATION_H_PER_DELTA
    weekday = _rotate_schedule(profile.weekday, rot, delta * MEAL_EXTRA_H_PER_DELTA)
    weekend = _rotate_schedule(profile.weekend, rot, delta * MEAL_EXTRA_H_PER_DELTA)

    class_names = {c.value for c in ACTIVITY_CLASSES}
    rng = np.random.default_rng(seed)
    emissions: dict[str, float] = {}
    for key in sorted(profile.emissions):
        u = rng.uniform(-1.0, 1.0)
        val = profile.emissions[key]
        # Only class-conditional parameters move: the shift changes how
        # activities express themselves, not the class-independent context,
        # so a pooled model gets no free country fingerprint.
        # The emission rescale is kept weak relative to the schedule
        # rotation: strong marginal emission differences would let a pooled
        # model identify the country outright, which is not how the shift is
        # meant to bite (it must conflict the hour-to-activity mapping).
        if not any(part in class_names for part in key.split(".")):
            emissions[key] = val
        elif key.startswith(("rssi.", "signal.")):
            emissions[key] = val + delta * u * 1.0
        elif key.startswith("p."):
            logit = math.log(val / (1.0 - val))
            shifted = 1.0 / (1.0 + math.exp(-(logit + delta * u * 0.25)))
            emissions[key] = min(0.98, max(0.02, shifted))
        elif key.startswith("app."):
            # app repertoires differ the most between countries
            emissions[key] = val * (1.0 + delta) ** (0.25 * u)
        else:  # rates, durations, counts: milder rescale
            emissions[key] = val * (1.0 + delta) ** (0.1 * u)
    return CountryProfile(weekday=weekday, weekend=weekend, emissions=emissions)


def schedule_kl(a: CountryProfile, b: CountryProfile) -> float:
    """Mean over hours of KL(a || b) between hourly activity distributions."""
    eps = 1e-12
    p = a.weekday + eps
    q = b.weekday + eps
    return float(np.mean(np.sum(p * np.log(p / q), axis=0)))


# ---------------------------------------------------------------------------
# Configuration


@dataclass(frozen=True)
class CountrySpec:
    code: str
    shift_weight: float
    tz_offset_min: int
    participants: int
    days: int
    reports_per_day: int


@dataclass(frozen=True)
class GeneratorConfig:
    master_seed: int
    delta: float
    sigma_p: float
    countries: tuple[CountrySpec, ...]
    dropped_label_rate: float = 0.04

    def to_json_obj(self) -> dict:
        return {
            "master_seed": self.master_seed,
            "delta": self.delta,
            "sigma_p": self.sigma_p,
            "dropped_label_rate": self.dropped_label_rate,
            "countries": [
                {
                    "code": c.code,
                    "shift_weight": c.shift_weight,
                    "tz_offset_min": c.tz_offset_min,
                    "participants": c.participants,
                    "days": c.days,
                    "reports_per_day": c.reports_per_day,
                }
                for c in self.countries
            ],
        }

    @staticmethod
    def from_json_obj(obj: dict) -> "GeneratorConfig":
        defaults = {
            "participants": obj.get("participants", 20),
            "days": obj.get("days", 14),
            "reports_per_day": obj.get("reports_per_day", 12),
        }
        countries = []
        for c in obj["countries"]:
            countries.append(CountrySpec(
                code=c["code"],
                shift_weight=float(c.get("shift_weight", 0.0)),
                tz_offset_min=int(c.get("tz_offset_min", 0)),
                participants=int(c.get("participants", defaults["participants"])),
                days=int(c.get("days", defaults["days"])),
                reports_per_day=int(c.get("reports_per_day", defaults["reports_per_day"])),
            ))
        if not countries:
            raise ValueError("generator config must define at least one country")
        for c in countries:
            if c.participants <= 0 or c.days <= 0 or not 1 <= c.reports_per_day <= 24:
                raise ValueError(f"invalid counts for country {c.code}")
        return GeneratorConfig(
            master_seed=int(obj.get("master_seed", 0)),
            delta=float(obj.get("delta", 0.0)),
            sigma_p=float(obj.get("sigma_p", 0.0)),
            countries=tuple(countries),
            dropped_label_rate=float(obj.get("dropped_label_rate", 0.04)),
        )


def config_hash(config: GeneratorConfig) -> str:
    blob = json.dumps(config.to_json_obj(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def load_config(path: str | Path) -> GeneratorConfig:
    with open(path, encoding="utf-8") as fh:
        return GeneratorConfig.from_json_obj(json.load(fh))


def save_config(config: GeneratorConfig, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config.to_json_obj(), fh, indent=2)
        fh.write("\n")


# Two shift clusters: {A, B, C} near the base profile, {D, E} far from it.
_DEFAULT_COUNTRIES = (
    ("SYN_A", 0.0, 60),
    ("SYN_B", 0.08, 0),
    ("SYN_C", 0.16, 120),
    ("SYN_D", 1.0, 480),
    ("SYN_E", 1.08, -180),
)


def default_config(
    participants: int = 20,
    days: int = 14,
    reports_per_day: int = 12,
    delta: float = 1.0,
    sigma_p: float = 0.5,
    master_seed: int = 7,
) -> GeneratorConfig:
    return GeneratorConfig(
        master_seed=master_seed,
        delta=delta,
        sigma_p=sigma_p,
        countries=tuple(
            CountrySpec(code, w, tz, participants, days, reports_per_day)
            for code, w, tz in _DEFAULT_COUNTRIES
        ),
    )


# ---------------------------------------------------------------------------
# Generation

_RAW_FOR_CLASS = {
    "Sleeping": ("sleeping",),
    "Studying": ("studying",),
    "Eating": ("eating", "eating", "cooking"),
    "WatchingSomething": ("watching something",),
    "OnlineCommSocialMedia": ("social media", "social media", "internet chatting"),
    "AttendingClass": ("attending class",),
    "Working": ("working",),
    "Resting": ("resting",),
    "Reading": ("reading",),
    "Walking": ("walking",),
    "Sport": ("sport",),
    "Shopping": ("shopping",),
}

_DROPPED_LABELS = ("personal care", "household care", "games", "hobbies",
                   "listening to music", "nothing special", "other")

# Sedentary classes share one still/tilting mix: the platform activity API
# separates moving from sitting, not which sedentary activity it is.
_SIMPLE_FOR_CLASS = {
    "Sleeping": ("still", "still", 0.97),
    "Studying": ("still", "tilting", 0.9),
    "Eating": ("still", "tilting", 0.9),
    "WatchingSomething": ("still", "tilting", 0.9),
    "OnlineCommSocialMedia": ("still", "tilting", 0.9),
    "AttendingClass": ("still", "tilting", 0.9),
    "Working": ("still", "tilting", 0.9),
    "Resting": ("still", "tilting", 0.9),
    "Reading": ("still", "tilting", 0.9),
    "Walking": ("walking", "on_foot", 0.55),
    "Sport": ("running", "on_foot", 0.6),
    "Shopping": ("on_foot", "walking", 0.5),
}

_HOME_ACTS = {"Sleeping", "Studying", "Eating", "WatchingSomething",
              "OnlineCommSocialMedia", "Resting", "Reading", "Working"}

_PARTICIPANT_CHANNEL_GROUPS = ("steps", "screen", "app", "notif", "bt", "wifi", "cell",
                               "prox", "loc")


class _Builder:
    """Per-participant event accumulator; string ids resolved to codes later."""

    def __init__(self) -> None:
        self.cols: dict[str, list[list]] = {
            name: [[] for _ in _CHANNEL_COLUMNS[name]] for name in CHANNELS
        }

    def push(self, channel: str, *values) -> None:
        for slot, value in zip(self.cols[channel], values):
            slot.append(value)


def _deg_per_km_lat() -> float:
    return 1.0 / 111.195


@dataclass
class _ParticipantCtx:
    pid: str
    rng: np.random.Generator
    schedule_shift_h: float
    group_mult: dict[str, float]
    act_mult: dict[str, float]  # per-(channel, activity) interaction idiosyncrasy
    app_pref: dict[str, float]  # multiplier keyed "<activity>.<category>"
    app_extra: dict[str, list[tuple[str, float]]]  # personal cross-class app habits
    rssi_shift: float  # device/home fingerprint on radio strengths
    home: tuple[float, float]
    campus: tuple[float, float]
    mall: tuple[float, float]
    base_alt: float
    home_wifi: list[str]
    home_bt: list[str]
    notif_keys: list[str]
    counter: int


def _emission(profile: CountryProfile, ctx: _ParticipantCtx, key: str, group: str) -> float:
    return profile.emissions[key] * ctx.group_mult[group]


def _gen_report_events(
    b: _Builder,
    profile: CountryProfile,
    ctx: _ParticipantCtx,
    country_pools: dict[str, list[str]],
    act_name: str,
    t_report: int,
) -> None:
    rng = ctx.rng
    em = profile.emissions
    w_start = t_report - _EVENT_HALF_WINDOW_MS
    w_end = t_report + _EVENT_HALF_WINDOW_MS
    w_min = (w_end - w_start) / MS_PER_MINUTE

    p_eng = em[f"p.engaged.{act_name}"]
    logit = math.log(p_eng / (1.0 - p_eng)) + ctx.act_mult[f"eng.{act_name}"]
    engaged = rng.random() < 1.0 / (1.0 + math.exp(-logit))

    def t_at(frac: float) -> int:
        return int(w_start + frac * (w_end - w_start))

    def rand_t() -> int:
        return int(rng.integers(w_start, w_end))

    # -- location
    n_loc = 4 + int(rng.integers(0, 3))
    move_km = _emission(profile, ctx, f"rate.loc_move_km.{act_name}", "loc")
    if act_name in _HOME_ACTS:
        anchor = ctx.home
    elif act_name == "AttendingClass":
        anchor = ctx.campus
    elif act_name == "Shopping":
        anchor = ctx.mall
    else:
        anchor = (ctx.home[0] + rng.normal(0.0, 0.004), ctx.home[1] + rng.normal(0.0, 0.004))
    step_deg = (move_km / max(n_loc - 1, 1)) * _deg_per_km_lat()
    lat, lon = anchor
    for i in range(n_loc):
        b.push("location", t_at(i / n_loc), lat, lon, ctx.base_alt + rng.normal(0.0, 4.0))
        lat += rng.normal(0.0, step_deg) + step_deg * 0.6
        lon += rng.normal(0.0, step_deg * 0.4)

    # -- bluetooth
    for channel, fam in (("bt_le", "count.bt_le"), ("bt_classic", "count.bt_classic")):
        n = rng.poisson(_emission(profile, ctx, f"{fam}.{act_name}", "bt"))
        for _ in range(n):
            if act_name in _HOME_ACTS and ctx.home_bt and rng.random() < 0.7:
                dev = ctx.home_bt[int(rng.integers(0, len(ctx.home_bt)))]
            else:
                pool = country_pools["bt"]
                dev = pool[int(rng.integers(0, len(pool)))]
            rssi = min(0.0, em[f"rssi.bt.{act_name}"] + ctx.rssi_shift + rng.normal(0.0, 8.0))
            b.push(channel, rand_t(), dev, rssi)

    # -- wifi
    n = rng.poisson(_emission(profile, ctx, f"count.wifi.{act_name}", "wifi"))
    connected = rng.random() < em[f"p.wifi_connected.{act_name}"]
    for i in range(n):
        if act_name in _HOME_ACTS and rng.random() < 0.75:
            dev = ctx.home_wifi[int(rng.integers(0, len(ctx.home_wifi)))]
        else:
            pool = country_pools["wifi"]
            dev = pool[int(rng.integers(0, len(pool)))]
        rssi = min(0.0, em[f"rssi.wifi.{act_name}"] + ctx.rssi_shift + rng.normal(0.0, 5.0))
        b.push("wifi", rand_t(), int(connected and i == 0), dev, rssi)

    # -- cellular
    for tech in ("gsm", "wcdma", "lte"):
        if rng.random() >= em[f"p.cell.{tech}"]:
            continue
        n = 1 + rng.poisson(max(_emission(profile, ctx, f"count.cell.{act_name}", "cell") - 1.0, 0.0))
        pool = country_pools[f"cell_{tech}"]
        for _ in range(n):
            cell = pool[int(rng.integers(0, len(pool)))]
            sig = min(0.0, em[f"signal.cell.{act_name}"] + rng.normal(0.0, 6.0))
            b.push(f"cell_{tech}", rand_t(), cell, sig)

    # -- notifications: arrivals are sender-driven, removals need engagement
    n_posted = rng.poisson(_emission(profile, ctx, f"rate.notif_posted.{act_name}", "notif"))
    seen: set[str] = set()
    posted_keys: list[str] = []
    for _ in range(n_posted):
        key = ctx.notif_keys[int(rng.integers(0, len(ctx.notif_keys)))]
        b.push("notification", rand_t(), 0, key, int(key in seen))
        seen.add(key)
        posted_keys.append(key)
    if engaged:
        base_rm = em[f"p.notif_removed.{act_name}"]
        rm_logit = math.log(base_rm / (1.0 - base_rm)) + ctx.act_mult[f"rm.{act_name}"]
        p_rm = 1.0 / (1.0 + math.exp(-rm_logit))
    else:
        p_rm = em["p.notif_removed.__idle"]
    rm_seen: set[str] = set()
    for key in posted_keys:
        if rng.random() < p_rm:
            b.push("notification", rand_t(), 1, key, int(key in rm_seen))
            rm_seen.add(key)

    # -- proximity
    near = rng.random() < em[f"p.prox_near.{act_name}"]
    for _ in range(4):
        if near:
            value = abs(rng.normal(0.0, 0.6))
        else:
            value = max(0.0, 5.0 + rng.normal(0.0, 0.6) * ctx.group_mult["prox"])
        b.push("proximity", rand_t(), value)

    # -- simple activity samples (every ~150 s)
    primary, secondary, p_primary = _SIMPLE_FOR_CLASS[act_name]
    n_samples = max(2, int(w_min * 60 // 150))
    for i in range(n_samples):
        label = primary if rng.random() < p_primary else secondary
        b.push("activity", t_at((i + 0.1) / n_samples), _ACT[label])

    # -- steps: counter samples sit at 20/50/80% of the emission span so at
    # least two fall inside any feature window of width >= 15 min.
    rate = _emission(profile, ctx, f"rate.steps.{act_name}", "steps")
    reboot = rng.random() < 0.01
    inc1 = int(rng.poisson(rate * w_min * 0.3))
    inc2 = int(rng.poisson(rate * w_min * 0.3))
    b.push("steps_counter", t_at(0.2), ctx.counter)
    ctx.counter = int(rng.integers(0, 30)) if reboot else ctx.counter + inc1
    b.push("steps_counter", t_at(0.5), ctx.counter)
    ctx.counter += inc2
    b.push("steps_counter", t_at(0.8), ctx.counter)
    for _ in range(rng.poisson(rate * w_min * 0.1)):
        b.push("steps_detected", rand_t())

    # -- screen episodes with presence spans and touches
    if engaged:
        ep_rate = (_emission(profile, ctx, f"rate.screen_episodes.{act_name}", "screen")
                   * ctx.act_mult[f"ep.{act_name}"])
        dur_mean = (_emission(profile, ctx, f"dur.screen_episode.{act_name}", "screen")
                    * ctx.act_mult[f"dur.{act_name}"])
        touch_rate = em[f"rate.touch.{act_name}"] * ctx.act_mult[f"touch.{act_name}"]
    else:
        ep_rate = em["rate.screen_episodes.__idle"]
        dur_mean = em["dur.screen_episode.__idle"]
        touch_rate = em["rate.touch.__idle"]
    n_ep = rng.poisson(ep_rate)
    cursor = w_start + int(rng.integers(0, MS_PER_MINUTE))
    for _ in range(n_ep):
        if cursor >= w_end - 2000:
            break
        dur_ms = int(min(np.exp(rng.normal(np.log(dur_mean), 0.6)) * 1000.0,
                         w_end - cursor - 1000))
        if dur_ms < 1000:
            dur_ms = 1000
        on_t = cursor
        off_t = on_t + dur_ms
        b.push("screen", on_t, _SCREEN_ON)
        b.push("screen", off_t, _SCREEN_OFF)
        pres_frac = rng.uniform(0.5, 0.9)
        pres_start = on_t + int(rng.uniform(0.0, 0.1) * dur_ms)
        pres_end = min(off_t, pres_start + int(pres_frac * dur_ms))
        b.push("screen", pres_start, _PRESENCE_START)
        b.push("screen", pres_end, _PRESENCE_END)
        for _ in range(rng.poisson(touch_rate * dur_ms / 1000.0 * ctx.group_mult["screen"])):
            b.push("screen", on_t + int(rng.integers(0, dur_ms)), _SCREEN_TOUCH)
        cursor = off_t + int(rng.integers(10_000, 120_000))

    # -- app usage intervals
    def push_app(cat: str, secs: float) -> None:
        if rng.random() >= 1.0 - math.exp(-secs / 90.0):
            return
        dur_ms = int(min(rng.exponential(secs), w_min * 60.0) * 1000.0)
        if dur_ms < 1000:
            return
        start = int(rng.integers(w_start, max(w_end - dur_ms, w_start + 1)))
        b.push("app", start, start + dur_ms, cat)

    if engaged:
        for key in profile.emissions:
            if not key.startswith(f"app.{act_name}."):
                continue
            cat = key.split(".", 2)[2]
            pref = ctx.app_pref.get(f"{act_name}.{cat}", 1.0)
            push_app(cat, profile.emissions[key] * ctx.group_mult["app"] * pref)
        for cat, secs in ctx.app_extra.get(act_name, ()):
            push_app(cat, secs * ctx.group_mult["app"])
        if rng.random() < 0.35:
            push_app("not-found", em["app_background.not-found"] * ctx.group_mult["app"])
    else:
        push_app("not-found", em["app.__idle.not-found"])


def generate_corpus(config: GeneratorConfig) -> Corpus:
    """Generate a corpus directly in the ingestion schema (pure in config)."""
    master = config.master_seed
    shift_seed = derive_seed(master, "shift-direction")
    base = base_profile()

    participants: dict[str, Participant] = {}
    builders: dict[str, _Builder] = {}
    reports: dict[str, list[tuple[int, int, str]]] = {}

    for spec in config.countries:
        profile = shift_profile(base, config.delta * spec.shift_weight, shift_seed)
        c_rng = np.random.default_rng(derive_seed(master, "country", spec.code))
        center = (45.0 + c_rng.uniform(-4.0, 4.0), 9.0 + c_rng.uniform(-30.0, 30.0))
        # identical altitude distribution everywhere: participants must be
        # distinguished by their own fingerprints, never by their country
        base_alt = 110.0
        campus = (center[0] + 0.02, center[1] + 0.015)
        pools = {
            "bt": [f"{spec.code}-bt-{i:04d}" for i in range(800)],
            "wifi": [f"{spec.code}-ap-{i:04d}" for i in range(1200)],
            "cell_gsm": [f"{spec.code}-gsm-{i:03d}" for i in range(24)],
            "cell_wcdma": [f"{spec.code}-wcdma-{i:03d}" for i in range(32)],
            "cell_lte": [f"{spec.code}-lte-{i:03d}" for i in range(48)],
        }

        app_keys = sorted(key[4:] for key in profile.emissions
                          if key.startswith("app.") and not key.startswith("app.__idle"))
        app_cat_pool = sorted({key.split(".", 1)[1] for key in app_keys})
        for p_idx in range(spec.participants):
            pid = f"{spec.code}_p{p_idx:03d}"
            participants[pid] = Participant(pid, spec.code)
            rng = np.random.default_rng(derive_seed(master, "participant", spec.code, p_idx))
            ctx = _ParticipantCtx(
                pid=pid,
                rng=rng,
                schedule_shift_h=float(rng.normal(0.0, config.sigma_p * 1.6)),
                group_mult={
                    g: float(np.exp(rng.normal(0.0, config.sigma_p * 1.2)))
                    for g in _PARTICIPANT_CHANNEL_GROUPS
                },
                act_mult={
                    f"{family}.{act.value}": (
                        float(rng.normal(0.0, config.sigma_p * sd))
                        if family in ("eng", "rm")
                        else float(np.exp(rng.normal(0.0, config.sigma_p * sd)))
                    )
                    for family, sd in (("eng", 2.0), ("rm", 1.6), ("ep", 1.0),
                                       ("dur", 1.4), ("touch", 1.2))
                    for act in ACTIVITY_CLASSES
                },
                # a personal app code per activity: much of the shared
                # repertoire is dropped or reweighted, and personal habits
                # borrow categories from other activities' signatures
                app_pref={key: (0.05 if rng.random() < min(0.9, config.sigma_p)
                                else float(np.exp(rng.normal(0.0, config.sigma_p * 2.5))))
                          for key in app_keys},
                app_extra={
                    act.value: [
                        (app_cat_pool[int(rng.integers(0, len(app_cat_pool)))],
                         float(np.exp(rng.normal(np.log(60.0), 0.5))))
                        for _ in range(rng.poisson(min(1.5, 1.6 * config.sigma_p)))
                    ]
                    for act in ACTIVITY_CLASSES
                },
                rssi_shift=float(rng.normal(0.0, config.sigma_p * 6.0)),
                home=(center[0] + rng.normal(0.0, 0.03), center[1] + rng.normal(0.0, 0.03)),
                campus=campus,
                mall=(center[0] - 0.015, center[1] + rng.normal(0.0, 0.01)),
                base_alt=base_alt + rng.normal(0.0, config.sigma_p * 25.0 + 3.0),
                home_wifi=[f"{pid}-ap-{i}" for i in range(int(rng.integers(2, 6)))],
                home_bt=[f"{pid}-bt-{i}" for i in range(int(rng.integers(1, 5)))],
                notif_keys=[f"{pid}-key-{i}" for i in range(int(rng.integers(12, 40)))],
                counter=int(rng.integers(500, 5000)),
            )
            weekday = profile.weekday
            weekend = profile.weekend
            if ctx.schedule_shift_h:
                weekday = _rotate_schedule(weekday, ctx.schedule_shift_h, 0.0)
                weekend = _rotate_schedule(weekend, ctx.schedule_shift_h, 0.0)

            b = _Builder()
            rep_list: list[tuple[int, int, str]] = []
            last_report_local = None
            for day in range(spec.days):
                is_we = day % 7 >= 5
                schedule = weekend if is_we else weekday
                hours = np.sort(rng.choice(24, size=spec.reports_per_day, replace=False))
                for hour in hours.tolist():
                    act_idx = int(rng.choice(_N_CLASSES, p=schedule[:, hour]))
                    act_name = ACTIVITY_CLASSES[act_idx].value
                    jitter = int(rng.integers(-_REPORT_JITTER_MS, _REPORT_JITTER_MS + 1))
                    local_t = START_LOCAL_MS + day * MS_PER_DAY + hour * MS_PER_HOUR + jitter
                    t_utc = local_t - spec.tz_offset_min * MS_PER_MINUTE

                    if last_report_local is not None:
                        gap_h = (local_t - last_report_local) / MS_PER_HOUR
                        ctx.counter += int(rng.poisson(40.0 * max(gap_h, 0.0)))
                    last_report_local = local_t

                    if rng.random() < config.dropped_label_rate:
                        raw = _DROPPED_LABELS[int(rng.integers(0, len(_DROPPED_LABELS)))]
                    else:
                        options = _RAW_FOR_CLASS[act_name]
                        raw = options[int(rng.integers(0, len(options)))]
                    rep_list.append((t_utc, spec.tz_offset_min, raw))
                    _gen_report_events(b, profile, ctx, pools, act_name, t_utc)
            builders[pid] = b
            reports[pid] = rep_list

    # Resolve string vocabularies and build the columnar corpus.
    id_strings: set[str] = set()
    app_strings: set[str] = set()
    raw_strings: set[str] = set()
    for pid, b in builders.items():
        for channel in ("bt_le", "bt_classic", "wifi"):
            col = 2 if channel == "wifi" else 1
            id_strings.update(b.cols[channel][col])
        for channel in ("cell_gsm", "cell_wcdma", "cell_lte"):
            id_strings.update(b.cols[channel][1])
        id_strings.update(b.cols["notification"][2])
        app_strings.update(b.cols["app"][2])
    for rep_list in reports.values():
        raw_strings.update(raw for _, _, raw in rep_list)

    id_vocab = sorted(id_strings)
    app_vocab = sorted(app_strings)
    raw_vocab = sorted(raw_strings)
    id_code = {s: i for i, s in enumerate(id_vocab)}
    app_code = {s: i for i, s in enumerate(app_vocab)}
    raw_code = {s: i for i, s in enumerate(raw_vocab)}

    data: dict[str, ParticipantData] = {}
    for pid in sorted(participants):
        b = builders[pid]
        channels: dict[str, dict[str, np.ndarray]] = {}
        for name in CHANNELS:
            cols = _CHANNEL_COLUMNS[name]
            lists = b.cols[name]
            table: dict[str, np.ndarray] = {}
            for i, (col, dt) in enumerate(cols):
                values = lists[i]
                if col in ("dev", "cell", "key"):
                    values = [id_code[s] for s in values]
                elif col == "cat":
                    values = [app_code[s] for s in values]
                table[col] = np.asarray(values, dtype=dt)
            channels[name] = _sort_channel(name, table)
        rep_list = sorted(reports[pid])
        data[pid] = ParticipantData(
            channels=channels,
            report_t=np.asarray([r[0] for r in rep_list], dtype=np.int64),
            report_offset=np.asarray([r[1] for r in rep_list], dtype=np.int32),
            report_raw=np.asarray([raw_code[r[2]] for r in rep_list], dtype=np.int32),
        )

    return Corpus(
        participants=dict(sorted(participants.items())),
        data=data,
        id_vocab=id_vocab,
        app_vocab=app_vocab,
        raw_vocab=raw_vocab,
    )
