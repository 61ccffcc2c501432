"""The 108-feature registry: names, modality grouping, and ordering.

Two groupings coexist:

* ``modality`` — the coarse feature-table row a feature belongs to
  (location, bluetooth, wifi, cellular, notifications, proximity, activity,
  steps, screen, app, time).
* ``sensor`` — the finer unit used for missing-data accounting and the
  drop rule (bluetooth split by kind, cellular split by technology).

The default registry is ordered and stable; models store its fingerprint and
refuse to predict against a different registry.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

APP_CATEGORIES: tuple[str, ...] = (
    "action",
    "adventure",
    "arcade",
    "art & design",
    "auto & vehicles",
    "beauty",
    "board",
    "books & reference",
    "business",
    "card",
    "casino",
    "casual",
    "comics",
    "communication",
    "dating",
    "education",
    "entertainment",
    "finance",
    "food & drink",
    "health & fitness",
    "lifestyle",
    "maps & navigation",
    "medical",
    "music",
    "news & magazines",
    "parenting",
    "personalization",
    "photography",
    "productivity",
    "puzzle",
    "racing",
    "role-playing",
    "shopping",
    "simulation",
    "social",
    "sports",
    "strategy",
    "tools",
    "travel",
    "trivia",
    "video players & editors",
    "weather",
    "word",
)
APP_NOT_FOUND = "not-found"

MODALITIES = (
    "location",
    "bluetooth",
    "wifi",
    "cellular",
    "notifications",
    "proximity",
    "activity",
    "steps",
    "screen",
    "app",
    "time",
)

SENSORS = (
    "location",
    "bluetooth_le",
    "bluetooth_classic",
    "wifi",
    "cellular_gsm",
    "cellular_wcdma",
    "cellular_lte",
    "notifications",
    "proximity",
    "activity",
    "steps",
    "screen",
    "apps",
    "time",
)


@dataclass(frozen=True)
class FeatureDescriptor:
    name: str
    modality: str
    sensor: str
    unit: str
    categorical: Optional[int] = None  # cardinality for integer-coded categories


@dataclass(frozen=True)
class FeatureRegistry:
    descriptors: tuple[FeatureDescriptor, ...]
    _index: dict[str, int] = field(init=False, repr=False, compare=False, hash=False, default=None)

    def __post_init__(self) -> None:
        names = [d.name for d in self.descriptors]
        if len(set(names)) != len(names):
            raise ValueError("duplicate feature names in registry")
        object.__setattr__(self, "_index", {n: i for i, n in enumerate(names)})

    def __len__(self) -> int:
        return len(self.descriptors)

    @property
    def names(self) -> list[str]:
        return [d.name for d in self.descriptors]

    def index_of(self, name: str) -> int:
        return self._index[name]

    def fingerprint(self) -> str:
        digest = hashlib.sha256("\n".join(self.names).encode("utf-8")).hexdigest()
        return digest[:16]

    def indices_for_sensor(self, sensor: str) -> list[int]:
        return [i for i, d in enumerate(self.descriptors) if d.sensor == sensor]

    def indices_for_modality(self, modality: str) -> list[int]:
        return [i for i, d in enumerate(self.descriptors) if d.modality == modality]

    def sensors_present(self) -> list[str]:
        return [s for s in SENSORS if any(d.sensor == s for d in self.descriptors)]

    def subset(self, keep: Iterable[int]) -> "FeatureRegistry":
        keep = sorted(set(keep))
        return FeatureRegistry(tuple(self.descriptors[i] for i in keep))

    def to_json_obj(self) -> dict:
        return {
            "fingerprint": self.fingerprint(),
            "features": [
                {
                    "index": i,
                    "name": d.name,
                    "modality": d.modality,
                    "sensor": d.sensor,
                    "unit": d.unit,
                    **({"categorical": d.categorical} if d.categorical else {}),
                }
                for i, d in enumerate(self.descriptors)
            ],
        }

    @staticmethod
    def from_json_obj(obj: dict) -> "FeatureRegistry":
        feats = sorted(obj["features"], key=lambda f: f["index"])
        return FeatureRegistry(
            tuple(
                FeatureDescriptor(
                    f["name"], f["modality"], f["sensor"], f["unit"], f.get("categorical")
                )
                for f in feats
            )
        )

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_obj(), fh, indent=2)
            fh.write("\n")

    @staticmethod
    def load(path: str | Path) -> "FeatureRegistry":
        with open(path, encoding="utf-8") as fh:
            return FeatureRegistry.from_json_obj(json.load(fh))


def _stat_block(prefix: str, modality: str, sensor: str, unit: str) -> list[FeatureDescriptor]:
    return [
        FeatureDescriptor(f"{prefix}_num_of_devices", modality, sensor, "count"),
        FeatureDescriptor(f"{prefix}_mean_rssi", modality, sensor, unit),
        FeatureDescriptor(f"{prefix}_std_rssi", modality, sensor, unit),
        FeatureDescriptor(f"{prefix}_min_rssi", modality, sensor, unit),
        FeatureDescriptor(f"{prefix}_max_rssi", modality, sensor, unit),
    ]


def default_registry() -> FeatureRegistry:
    """Build the default 108-feature registry."""
    feats: list[FeatureDescriptor] = []

    feats.append(FeatureDescriptor("location_radius_of_gyration", "location", "location", "km"))
    feats.append(FeatureDescriptor("location_distance_traveled", "location", "location", "km"))
    feats.append(FeatureDescriptor("location_altitude", "location", "location", "m"))

    feats += _stat_block("bt_le", "bluetooth", "bluetooth_le", "dbm")
    feats += _stat_block("bt_classic", "bluetooth", "bluetooth_classic", "dbm")

    feats.append(FeatureDescriptor("wifi_connected", "wifi", "wifi", "bool"))
    feats += _stat_block("wifi", "wifi", "wifi", "dbm")

    for tech in ("gsm", "wcdma", "lte"):
        feats.append(FeatureDescriptor(f"cellular_{tech}_num_of_devices", "cellular", f"cellular_{tech}", "count"))
        for stat in ("mean", "std", "min", "max"):
            feats.append(FeatureDescriptor(f"cellular_{tech}_{stat}", "cellular", f"cellular_{tech}", "dbm"))

    feats.append(FeatureDescriptor("notifications_posted", "notifications", "notifications", "count"))
    feats.append(FeatureDescriptor("notifications_posted_wo_dups", "notifications", "notifications", "count"))
    feats.append(FeatureDescriptor("notifications_removed", "notifications", "notifications", "count"))
    feats.append(FeatureDescriptor("notifications_removed_wo_dups", "notifications", "notifications", "count"))

    for stat in ("mean", "std", "min", "max"):
        feats.append(FeatureDescriptor(f"proximity_{stat}", "proximity", "proximity", "cm"))

    for label in ("still", "invehicle", "onbicycle", "onfoot", "running", "tilting", "walking", "other"):
        feats.append(FeatureDescriptor(f"activity_{label}", "activity", "activity", "s"))

    feats.append(FeatureDescriptor("steps_counter", "steps", "steps", "count"))
    feats.append(FeatureDescriptor("steps_detected", "steps", "steps", "count"))

    feats.append(FeatureDescriptor("touch_events", "screen", "screen", "count"))
    feats.append(FeatureDescriptor("user_presence_time", "screen", "screen", "s"))
    feats.append(FeatureDescriptor("user_presence_episodes", "screen", "screen", "count"))
    feats.append(FeatureDescriptor("screen_num_of_episodes", "screen", "screen", "count"))
    feats.append(FeatureDescriptor("screen_time_per_episode", "screen", "screen", "s"))
    feats.append(FeatureDescriptor("screen_min_episode", "screen", "screen", "s"))
    feats.append(FeatureDescriptor("screen_max_episode", "screen", "screen", "s"))
    feats.append(FeatureDescriptor("screen_std_episode", "screen", "screen", "s"))
    feats.append(FeatureDescriptor("screen_time_total", "screen", "screen", "s"))

    for cat in APP_CATEGORIES:
        feats.append(FeatureDescriptor(f"app_{cat}", "app", "apps", "s"))
    feats.append(FeatureDescriptor(f"app_{APP_NOT_FOUND}", "app", "apps", "s"))

    feats.append(FeatureDescriptor("hour_of_day", "time", "time", "hour"))
    feats.append(FeatureDescriptor("day_period", "time", "time", "category", categorical=5))
    feats.append(FeatureDescriptor("weekend", "time", "time", "bool"))

    registry = FeatureRegistry(tuple(feats))
    assert len(registry) == 108, f"default registry has {len(registry)} features"
    return registry
