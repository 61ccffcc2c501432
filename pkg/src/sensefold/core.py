"""Shared domain types: countries, participants, activity taxonomy, local-time calendar.

Timestamps are UTC epoch milliseconds everywhere; each self-report carries an
explicit local-time offset in minutes, and all calendar-derived values (hour of
day, day period, weekend) are computed in local time.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Optional

MS_PER_MINUTE = 60_000
MS_PER_HOUR = 3_600_000
MS_PER_DAY = 86_400_000


class ConfigError(Exception):
    """Invalid configuration or usage; maps to CLI exit code 2."""

# Local offsets are bounded by the real-world UTC-14:00 .. UTC+14:00 range.
MAX_OFFSET_MIN = 840


class ActivityClass(Enum):
    """The 12 target activity classes, in canonical order."""

    SLEEPING = "Sleeping"
    STUDYING = "Studying"
    EATING = "Eating"
    WATCHING_SOMETHING = "WatchingSomething"
    ONLINE_COMM_SOCIAL_MEDIA = "OnlineCommSocialMedia"
    ATTENDING_CLASS = "AttendingClass"
    WORKING = "Working"
    RESTING = "Resting"
    READING = "Reading"
    WALKING = "Walking"
    SPORT = "Sport"
    SHOPPING = "Shopping"


ACTIVITY_CLASSES: tuple[ActivityClass, ...] = tuple(ActivityClass)
CLASS_CODES: dict[ActivityClass, int] = {c: i for i, c in enumerate(ACTIVITY_CLASSES)}
CLASS_NAMES: tuple[str, ...] = tuple(c.value for c in ACTIVITY_CLASSES)


class DayPeriod(Enum):
    MORNING = 0  # [06:00, 10:00)
    NOON = 1  # [10:00, 14:00)
    AFTERNOON = 2  # [14:00, 18:00)
    EVENING = 3  # [18:00, 22:00)
    NIGHT = 4  # [22:00, 24:00) and [00:00, 06:00)


_COUNTRY_RE = re.compile(r"^[A-Z][A-Z0-9_]*$")


def validate_country_code(code: str) -> str:
    if not code or not _COUNTRY_RE.match(code):
        raise ValueError(f"invalid country code: {code!r} (uppercase ASCII required)")
    return code


@dataclass(frozen=True)
class Participant:
    id: str
    country: str

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("participant id must be non-empty")
        validate_country_code(self.country)


@dataclass(frozen=True)
class SelfReport:
    """One hourly time-diary entry: what the participant said they were doing."""

    participant: str
    timestamp: int  # UTC epoch ms
    local_offset: int  # minutes east of UTC
    raw_activity: str

    def __post_init__(self) -> None:
        if self.timestamp <= 0:
            raise ValueError("report timestamp must be positive")
        if not -MAX_OFFSET_MIN <= self.local_offset <= MAX_OFFSET_MIN:
            raise ValueError(f"local offset out of range: {self.local_offset}")
        if not self.raw_activity:
            raise ValueError("raw activity label must be non-empty")


def normalize_label(raw: str) -> str:
    """Canonical form used for taxonomy matching: trimmed, lower-case."""
    return raw.strip().lower()


@dataclass(frozen=True)
class Taxonomy:
    """Mapping from the raw self-report vocabulary to the 12-class target set.

    Labels in ``merge_map`` are coalesced into a target class; labels in
    ``drop_set`` are excluded; anything else is unknown and also excluded
    (but counted separately by corpus statistics).
    """

    merge_map: dict[str, ActivityClass]
    drop_set: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        overlap = set(self.merge_map) & set(self.drop_set)
        if overlap:
            raise ValueError(f"labels both merged and dropped: {sorted(overlap)}")
        reachable = set(self.merge_map.values())
        missing = [c.value for c in ACTIVITY_CLASSES if c not in reachable]
        if missing:
            raise ValueError(f"classes unreachable from any raw label: {missing}")

    @staticmethod
    def from_json(path: str | Path) -> "Taxonomy":
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
        return Taxonomy.from_dict(obj)

    @staticmethod
    def from_dict(obj: dict) -> "Taxonomy":
        merge = {
            normalize_label(raw): ActivityClass(target)
            for raw, target in obj.get("merge", {}).items()
        }
        drop = frozenset(normalize_label(raw) for raw in obj.get("drop", []))
        return Taxonomy(merge_map=merge, drop_set=drop)

    def to_dict(self) -> dict:
        return {
            "merge": {raw: cls.value for raw, cls in sorted(self.merge_map.items())},
            "drop": sorted(self.drop_set),
        }


def default_taxonomy() -> Taxonomy:
    """The shipped default taxonomy (also available as packaged JSON)."""
    ref = resources.files("sensefold").joinpath("data/default_taxonomy.json")
    return Taxonomy.from_dict(json.loads(ref.read_text(encoding="utf-8")))


def map_raw_activity(raw: str, taxonomy: Taxonomy) -> Optional[ActivityClass]:
    """Map a raw label to its target class; None when dropped or unknown."""
    return taxonomy.merge_map.get(normalize_label(raw))


def local_ms(timestamp: int, local_offset: int) -> int:
    return timestamp + local_offset * MS_PER_MINUTE


def local_hour(timestamp: int, local_offset: int) -> int:
    """Local hour of day, 0-23."""
    return (local_ms(timestamp, local_offset) % MS_PER_DAY) // MS_PER_HOUR


def day_period(timestamp: int, local_offset: int) -> DayPeriod:
    h = local_hour(timestamp, local_offset)
    if 6 <= h < 10:
        return DayPeriod.MORNING
    if 10 <= h < 14:
        return DayPeriod.NOON
    if 14 <= h < 18:
        return DayPeriod.AFTERNOON
    if 18 <= h < 22:
        return DayPeriod.EVENING
    return DayPeriod.NIGHT


def is_weekend(timestamp: int, local_offset: int) -> bool:
    """True iff the local calendar day is Saturday or Sunday."""
    days = local_ms(timestamp, local_offset) // MS_PER_DAY
    # 1970-01-01 was a Thursday; Monday == 0 in this scheme.
    weekday = (days + 3) % 7
    return weekday >= 5
