"""Parsing, validation, and indexing of sensor-event and self-report logs.

Interchange format is JSONL: one JSON object per line. Event records carry
``{"pid", "t", "kind", ...payload}``; report records carry
``{"pid", "t", "offset_min", "activity"}``. Files ending in ``.gz`` are
transparently decompressed.

Internally a :class:`Corpus` stores events in columnar numpy tables per
participant and per channel, sorted by time, which is what makes windowed
featurization fast. The object-level :class:`SensorEvent` API is retained for
parsing and round-trip serialization.
"""

from __future__ import annotations

import gzip
import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Union

import numpy as np

from .core import MAX_OFFSET_MIN, Participant, SelfReport

log = logging.getLogger("sensefold.ingestion")

SIMPLE_ACTIVITY_LABELS = (
    "still",
    "in_vehicle",
    "on_bicycle",
    "on_foot",
    "running",
    "tilting",
    "walking",
    "other",
)
SCREEN_ACTIONS = ("on", "off", "touch", "presence_start", "presence_end")
NOTIFICATION_ACTIONS = ("posted", "removed")
BLUETOOTH_KINDS = ("le", "classic")
CELLULAR_TECHS = ("gsm", "wcdma", "lte")

# Columnar channels. Bluetooth kinds and cellular technologies are split into
# separate channels up front because features are computed per sub-channel.
CHANNELS = (
    "location",
    "bt_le",
    "bt_classic",
    "wifi",
    "cell_gsm",
    "cell_wcdma",
    "cell_lte",
    "notification",
    "proximity",
    "activity",
    "steps_counter",
    "steps_detected",
    "screen",
    "app",
)


class IngestError(Exception):
    """Raised for unrecoverable ingestion problems."""


# ---------------------------------------------------------------------------
# Event payload types


@dataclass(frozen=True)
class LocationSample:
    lat: float
    lon: float
    alt: float


@dataclass(frozen=True)
class BluetoothScan:
    kind: str  # "le" | "classic"
    device_hash: str
    rssi: float


@dataclass(frozen=True)
class WifiScan:
    connected: bool
    device_hash: str
    rssi: float


@dataclass(frozen=True)
class CellularScan:
    tech: str  # "gsm" | "wcdma" | "lte"
    cell_hash: str
    signal: float


@dataclass(frozen=True)
class NotificationEvent:
    action: str  # "posted" | "removed"
    key_hash: str
    is_duplicate: bool


@dataclass(frozen=True)
class ProximitySample:
    value: float


@dataclass(frozen=True)
class SimpleActivitySample:
    label: str


@dataclass(frozen=True)
class StepsCounterSample:
    count: int


@dataclass(frozen=True)
class StepsDetectedEvent:
    pass


@dataclass(frozen=True)
class ScreenEvent:
    action: str  # "on" | "off" | "touch" | "presence_start" | "presence_end"


@dataclass(frozen=True)
class AppUsageInterval:
    category: str
    start: int
    end: int


Payload = Union[
    LocationSample,
    BluetoothScan,
    WifiScan,
    CellularScan,
    NotificationEvent,
    ProximitySample,
    SimpleActivitySample,
    StepsCounterSample,
    StepsDetectedEvent,
    ScreenEvent,
    AppUsageInterval,
]


@dataclass(frozen=True)
class SensorEvent:
    participant: str
    timestamp: int  # UTC epoch ms
    payload: Payload


@dataclass
class Malformed:
    line_no: int
    reason: str


@dataclass
class ParseResult:
    items: list
    malformed: list[Malformed]
    n_lines: int
    duplicates_dropped: int = 0


# ---------------------------------------------------------------------------
# Line-level parsing


def _open_stream(source) -> io.TextIOBase:
    if isinstance(source, (str, Path)):
        p = Path(source)
        if p.suffix == ".gz":
            return io.TextIOWrapper(gzip.open(p, "rb"), encoding="utf-8")
        return open(p, encoding="utf-8")
    return source


def _require(obj: dict, key: str, kinds) -> object:
    if key not in obj:
        raise ValueError(f"missing field {key!r}")
    val = obj[key]
    if not isinstance(val, kinds) or isinstance(val, bool) and bool not in (
        kinds if isinstance(kinds, tuple) else (kinds,)
    ):
        raise ValueError(f"field {key!r} has wrong type")
    return val


def _req_str(obj: dict, key: str) -> str:
    val = _require(obj, key, str)
    if not val:
        raise ValueError(f"field {key!r} must be non-empty")
    return val


def _req_num(obj: dict, key: str) -> float:
    val = _require(obj, key, (int, float))
    return float(val)


def _req_int(obj: dict, key: str) -> int:
    val = _require(obj, key, int)
    return int(val)


def _req_bool(obj: dict, key: str) -> bool:
    val = obj.get(key)
    if not isinstance(val, bool):
        raise ValueError(f"field {key!r} must be a boolean")
    return val


def _parse_event_obj(obj: dict) -> SensorEvent:
    pid = _req_str(obj, "pid")
    t = _req_int(obj, "t")
    if t <= 0:
        raise ValueError("timestamp must be positive")
    kind = _req_str(obj, "kind")

    payload: Payload
    if kind == "location":
        payload = LocationSample(_req_num(obj, "lat"), _req_num(obj, "lon"), _req_num(obj, "alt"))
    elif kind == "bluetooth":
        bt_kind = _req_str(obj, "bt_kind")
        if bt_kind not in BLUETOOTH_KINDS:
            raise ValueError(f"unknown bluetooth kind {bt_kind!r}")
        rssi = _req_num(obj, "rssi")
        if rssi > 0:
            raise ValueError("rssi must be <= 0 dBm")
        payload = BluetoothScan(bt_kind, _req_str(obj, "device_hash"), rssi)
    elif kind == "wifi":
        rssi = _req_num(obj, "rssi")
        if rssi > 0:
            raise ValueError("rssi must be <= 0 dBm")
        payload = WifiScan(_req_bool(obj, "connected"), _req_str(obj, "device_hash"), rssi)
    elif kind == "cellular":
        tech = _req_str(obj, "tech")
        if tech not in CELLULAR_TECHS:
            raise ValueError(f"unknown cellular tech {tech!r}")
        signal = _req_num(obj, "signal")
        if signal > 0:
            raise ValueError("signal must be <= 0 dBm")
        payload = CellularScan(tech, _req_str(obj, "cell_hash"), signal)
    elif kind == "notification":
        action = _req_str(obj, "action")
        if action not in NOTIFICATION_ACTIONS:
            raise ValueError(f"unknown notification action {action!r}")
        payload = NotificationEvent(action, _req_str(obj, "key_hash"), _req_bool(obj, "is_duplicate"))
    elif kind == "proximity":
        payload = ProximitySample(_req_num(obj, "value"))
    elif kind == "simple_activity":
        label = _req_str(obj, "label")
        if label not in SIMPLE_ACTIVITY_LABELS:
            raise ValueError(f"unknown simple-activity label {label!r}")
        payload = SimpleActivitySample(label)
    elif kind == "steps_counter":
        count = _req_int(obj, "count")
        if count < 0:
            raise ValueError("steps counter must be non-negative")
        payload = StepsCounterSample(count)
    elif kind == "steps_detected":
        payload = StepsDetectedEvent()
    elif kind == "screen":
        action = _req_str(obj, "action")
        if action not in SCREEN_ACTIONS:
            raise ValueError(f"unknown screen action {action!r}")
        payload = ScreenEvent(action)
    elif kind == "app_usage":
        end = _req_int(obj, "end")
        if end < t:
            raise ValueError("app usage interval end before start")
        payload = AppUsageInterval(_req_str(obj, "category"), t, end)
    else:
        raise ValueError(f"unknown event kind {kind!r}")
    return SensorEvent(pid, t, payload)


def _parse_lines(source, parse_obj, max_malformed_fraction: float) -> ParseResult:
    items: list = []
    malformed: list[Malformed] = []
    n_lines = 0
    stream = _open_stream(source)
    try:
        for line_no, line in enumerate(stream, start=1):
            line = line.strip()
            if not line:
                continue
            n_lines += 1
            try:
                obj = json.loads(line)
                if not isinstance(obj, dict):
                    raise ValueError("record is not a JSON object")
                items.append(parse_obj(obj))
            except (ValueError, TypeError) as exc:
                malformed.append(Malformed(line_no, str(exc)))
    finally:
        if stream is not source:
            stream.close()
    if n_lines and len(malformed) / n_lines > max_malformed_fraction:
        raise IngestError(
            f"{len(malformed)} of {n_lines} lines malformed "
            f"(limit {max_malformed_fraction:.1%}); first: "
            f"line {malformed[0].line_no}: {malformed[0].reason}"
        )
    for m in malformed:
        log.warning("malformed line %d: %s", m.line_no, m.reason)
    return ParseResult(items, malformed, n_lines)


def parse_event_log(source, max_malformed_fraction: float = 0.01) -> ParseResult:
    """Parse a JSONL sensor-event stream; see module docstring for the schema."""
    return _parse_lines(source, _parse_event_obj, max_malformed_fraction)


def _parse_report_obj(obj: dict) -> SelfReport:
    pid = _req_str(obj, "pid")
    t = _req_int(obj, "t")
    offset = _req_int(obj, "offset_min")
    if not -MAX_OFFSET_MIN <= offset <= MAX_OFFSET_MIN:
        raise ValueError(f"offset_min out of range: {offset}")
    activity = _req_str(obj, "activity")
    return SelfReport(pid, t, offset, activity)


def parse_self_reports(source, max_malformed_fraction: float = 0.01) -> ParseResult:
    """Parse a JSONL self-report stream, dropping duplicate (pid, t) records."""
    result = _parse_lines(source, _parse_report_obj, max_malformed_fraction)
    seen: set[tuple[str, int]] = set()
    unique: list[SelfReport] = []
    dropped = 0
    for rep in result.items:
        key = (rep.participant, rep.timestamp)
        if key in seen:
            dropped += 1
            continue
        seen.add(key)
        unique.append(rep)
    if dropped:
        log.warning("dropped %d duplicate self-reports", dropped)
    result.items = unique
    result.duplicates_dropped = dropped
    return result


# ---------------------------------------------------------------------------
# Columnar corpus

_CHANNEL_COLUMNS: dict[str, tuple[tuple[str, object], ...]] = {
    "location": (("t", np.int64), ("lat", np.float64), ("lon", np.float64), ("alt", np.float64)),
    "bt_le": (("t", np.int64), ("dev", np.int32), ("rssi", np.float64)),
    "bt_classic": (("t", np.int64), ("dev", np.int32), ("rssi", np.float64)),
    "wifi": (("t", np.int64), ("connected", np.uint8), ("dev", np.int32), ("rssi", np.float64)),
    "cell_gsm": (("t", np.int64), ("cell", np.int32), ("signal", np.float64)),
    "cell_wcdma": (("t", np.int64), ("cell", np.int32), ("signal", np.float64)),
    "cell_lte": (("t", np.int64), ("cell", np.int32), ("signal", np.float64)),
    "notification": (("t", np.int64), ("action", np.uint8), ("key", np.int32), ("dup", np.uint8)),
    "proximity": (("t", np.int64), ("value", np.float64)),
    "activity": (("t", np.int64), ("label", np.uint8)),
    "steps_counter": (("t", np.int64), ("count", np.int64)),
    "steps_detected": (("t", np.int64),),
    "screen": (("t", np.int64), ("action", np.uint8)),
    "app": (("t", np.int64), ("end", np.int64), ("cat", np.int32)),
}


def _empty_channel(name: str) -> dict[str, np.ndarray]:
    return {col: np.empty(0, dtype=dt) for col, dt in _CHANNEL_COLUMNS[name]}


def _sort_channel(name: str, table: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    """Canonical total order: time first, remaining columns as tie-breakers."""
    cols = [col for col, _ in _CHANNEL_COLUMNS[name]]
    if table[cols[0]].size == 0:
        return table
    keys = [table[c] for c in reversed(cols)]  # np.lexsort: last key is primary
    order = np.lexsort(keys)
    return {c: table[c][order] for c in cols}


@dataclass
class ParticipantData:
    channels: dict[str, dict[str, np.ndarray]]
    report_t: np.ndarray  # int64, sorted
    report_offset: np.ndarray  # int32
    report_raw: np.ndarray  # int32 codes into Corpus.raw_vocab


@dataclass
class Corpus:
    """Immutable, per-participant indexed view of events and self-reports."""

    participants: dict[str, Participant]
    data: dict[str, ParticipantData]
    id_vocab: list[str]  # device / cell / notification-key hashes
    app_vocab: list[str]  # app categories as ingested
    raw_vocab: list[str]  # raw activity labels as ingested

    @property
    def pids(self) -> list[str]:
        return sorted(self.participants)

    @property
    def countries(self) -> list[str]:
        return sorted({p.country for p in self.participants.values()})

    def n_reports(self) -> int:
        return sum(int(d.report_t.size) for d in self.data.values())

    def n_events(self) -> int:
        return sum(
            int(tab["t"].size) for d in self.data.values() for tab in d.channels.values()
        )

    def events_per_channel(self) -> dict[str, int]:
        counts = {name: 0 for name in CHANNELS}
        for d in self.data.values():
            for name, tab in d.channels.items():
                counts[name] += int(tab["t"].size)
        return counts

    def reports_for(self, pid: str) -> list[SelfReport]:
        d = self.data[pid]
        return [
            SelfReport(pid, int(t), int(off), self.raw_vocab[raw])
            for t, off, raw in zip(d.report_t, d.report_offset, d.report_raw)
        ]

    def iter_reports(self) -> Iterable[SelfReport]:
        for pid in self.pids:
            yield from self.reports_for(pid)


def _vocab_codes(values: list[str]) -> tuple[list[str], dict[str, int]]:
    vocab = sorted(set(values))
    return vocab, {v: i for i, v in enumerate(vocab)}


def build_corpus(
    events: Iterable[SensorEvent],
    reports: Iterable[SelfReport],
    participants: Iterable[Participant],
) -> Corpus:
    """Assemble a sorted, indexed corpus; deterministic for any input order."""
    part_map: dict[str, Participant] = {}
    for p in participants:
        if p.id in part_map and part_map[p.id] != p:
            raise IngestError(f"conflicting definitions for participant {p.id!r}")
        part_map[p.id] = p

    events = list(events)
    reports = list(reports)

    id_strings: list[str] = []
    app_strings: list[str] = []
    raw_strings: list[str] = []
    for ev in events:
        pl = ev.payload
        if isinstance(pl, (BluetoothScan, WifiScan)):
            id_strings.append(pl.device_hash)
        elif isinstance(pl, CellularScan):
            id_strings.append(pl.cell_hash)
        elif isinstance(pl, NotificationEvent):
            id_strings.append(pl.key_hash)
        elif isinstance(pl, AppUsageInterval):
            app_strings.append(pl.category)
    for rep in reports:
        raw_strings.append(rep.raw_activity)

    id_vocab, id_code = _vocab_codes(id_strings)
    app_vocab, app_code = _vocab_codes(app_strings)
    raw_vocab, raw_code = _vocab_codes(raw_strings)

    rows: dict[str, dict[str, list[list]]] = {
        pid: {name: [[] for _ in _CHANNEL_COLUMNS[name]] for name in CHANNELS}
        for pid in part_map
    }

    def _push(pid: str, channel: str, *values) -> None:
        target = rows[pid][channel]
        for slot, value in zip(target, values):
            slot.append(value)

    for ev in events:
        if ev.participant not in part_map:
            raise IngestError(f"event references unknown participant {ev.participant!r}")
        pl = ev.payload
        t = ev.timestamp
        if isinstance(pl, LocationSample):
            _push(ev.participant, "location", t, pl.lat, pl.lon, pl.alt)
        elif isinstance(pl, BluetoothScan):
            channel = "bt_le" if pl.kind == "le" else "bt_classic"
            _push(ev.participant, channel, t, id_code[pl.device_hash], pl.rssi)
        elif isinstance(pl, WifiScan):
            _push(ev.participant, "wifi", t, int(pl.connected), id_code[pl.device_hash], pl.rssi)
        elif isinstance(pl, CellularScan):
            _push(ev.participant, f"cell_{pl.tech}", t, id_code[pl.cell_hash], pl.signal)
        elif isinstance(pl, NotificationEvent):
            action = NOTIFICATION_ACTIONS.index(pl.action)
            _push(ev.participant, "notification", t, action, id_code[pl.key_hash], int(pl.is_duplicate))
        elif isinstance(pl, ProximitySample):
            _push(ev.participant, "proximity", t, pl.value)
        elif isinstance(pl, SimpleActivitySample):
            _push(ev.participant, "activity", t, SIMPLE_ACTIVITY_LABELS.index(pl.label))
        elif isinstance(pl, StepsCounterSample):
            _push(ev.participant, "steps_counter", t, pl.count)
        elif isinstance(pl, StepsDetectedEvent):
            _push(ev.participant, "steps_detected", t)
        elif isinstance(pl, ScreenEvent):
            _push(ev.participant, "screen", t, SCREEN_ACTIONS.index(pl.action))
        elif isinstance(pl, AppUsageInterval):
            _push(ev.participant, "app", t, pl.end, app_code[pl.category])
        else:  # pragma: no cover - payload union is closed
            raise IngestError(f"unhandled payload type {type(pl).__name__}")

    rep_rows: dict[str, list[tuple[int, int, int]]] = {pid: [] for pid in part_map}
    for rep in reports:
        if rep.participant not in part_map:
            raise IngestError(f"report references unknown participant {rep.participant!r}")
        rep_rows[rep.participant].append((rep.timestamp, rep.local_offset, raw_code[rep.raw_activity]))

    data: dict[str, ParticipantData] = {}
    for pid in part_map:
        channels: dict[str, dict[str, np.ndarray]] = {}
        for name in CHANNELS:
            cols = _CHANNEL_COLUMNS[name]
            raw_lists = rows[pid][name]
            table = {
                col: np.asarray(raw_lists[i], dtype=dt) for i, (col, dt) in enumerate(cols)
            }
            channels[name] = _sort_channel(name, table)
        # Canonical dedup: identical (t) pairs keep the smallest remaining tuple.
        reps = sorted(set(rep_rows[pid]))
        dedup: list[tuple[int, int, int]] = []
        for row in reps:
            if dedup and dedup[-1][0] == row[0]:
                continue
            dedup.append(row)
        data[pid] = ParticipantData(
            channels=channels,
            report_t=np.asarray([r[0] for r in dedup], dtype=np.int64),
            report_offset=np.asarray([r[1] for r in dedup], dtype=np.int32),
            report_raw=np.asarray([r[2] for r in dedup], dtype=np.int32),
        )

    return Corpus(
        participants=dict(sorted(part_map.items())),
        data=data,
        id_vocab=id_vocab,
        app_vocab=app_vocab,
        raw_vocab=raw_vocab,
    )


def corpus_equal(a: Corpus, b: Corpus) -> bool:
    if a.participants != b.participants:
        return False
    if a.id_vocab != b.id_vocab or a.app_vocab != b.app_vocab or a.raw_vocab != b.raw_vocab:
        return False
    for pid in a.participants:
        da, db = a.data[pid], b.data[pid]
        if not (
            np.array_equal(da.report_t, db.report_t)
            and np.array_equal(da.report_offset, db.report_offset)
            and np.array_equal(da.report_raw, db.report_raw)
        ):
            return False
        for name in CHANNELS:
            ta, tb = da.channels[name], db.channels[name]
            for col, _ in _CHANNEL_COLUMNS[name]:
                if not np.array_equal(ta[col], tb[col]):
                    return False
    return True


# ---------------------------------------------------------------------------
# Statistics


@dataclass
class CorpusStats:
    n_events: int
    n_reports: int
    events_per_country: dict[str, int]
    reports_per_country: dict[str, int]
    events_per_channel: dict[str, int]
    reports_per_raw_label: dict[str, int]
    dropped_label_reports: int = 0  # taxonomy-dropped or unknown labels
    malformed_events: int = 0
    malformed_reports: int = 0
    duplicate_reports: int = 0


def corpus_stats(
    corpus: Corpus,
    taxonomy=None,
    malformed_events: int = 0,
    malformed_reports: int = 0,
    duplicate_reports: int = 0,
) -> CorpusStats:
    from .core import map_raw_activity

    ev_country: dict[str, int] = {c: 0 for c in corpus.countries}
    rep_country: dict[str, int] = {c: 0 for c in corpus.countries}
    per_label: dict[str, int] = {}
    dropped = 0

    mapped_vocab = None
    if taxonomy is not None:
        mapped_vocab = [map_raw_activity(raw, taxonomy) for raw in corpus.raw_vocab]

    for pid, d in corpus.data.items():
        country = corpus.participants[pid].country
        ev_country[country] += sum(int(tab["t"].size) for tab in d.channels.values())
        rep_country[country] += int(d.report_t.size)
        codes, counts = np.unique(d.report_raw, return_counts=True)
        for code, count in zip(codes, counts):
            label = corpus.raw_vocab[int(code)]
            per_label[label] = per_label.get(label, 0) + int(count)
            if mapped_vocab is not None and mapped_vocab[int(code)] is None:
                dropped += int(count)

    return CorpusStats(
        n_events=corpus.n_events(),
        n_reports=corpus.n_reports(),
        events_per_country=ev_country,
        reports_per_country=rep_country,
        events_per_channel=corpus.events_per_channel(),
        reports_per_raw_label=dict(sorted(per_label.items())),
        dropped_label_reports=dropped,
        malformed_events=malformed_events,
        malformed_reports=malformed_reports,
        duplicate_reports=duplicate_reports,
    )


# ---------------------------------------------------------------------------
# Serialization (canonical order, exact float round-trip via repr)


def _event_lines(corpus: Corpus, pid: str) -> Iterable[str]:
    d = corpus.data[pid]

    def f(x: float) -> float:
        return float(x)

    emitted: list[tuple[int, int, str]] = []  # (t, channel order, line)
    for order, name in enumerate(CHANNELS):
        tab = d.channels[name]
        n = tab["t"].size
        for i in range(n):
            t = int(tab["t"][i])
            if name == "location":
                obj = {"pid": pid, "t": t, "kind": "location", "lat": f(tab["lat"][i]),
                       "lon": f(tab["lon"][i]), "alt": f(tab["alt"][i])}
            elif name in ("bt_le", "bt_classic"):
                obj = {"pid": pid, "t": t, "kind": "bluetooth",
                       "bt_kind": "le" if name == "bt_le" else "classic",
                       "device_hash": corpus.id_vocab[int(tab["dev"][i])],
                       "rssi": f(tab["rssi"][i])}
            elif name == "wifi":
                obj = {"pid": pid, "t": t, "kind": "wifi", "connected": bool(tab["connected"][i]),
                       "device_hash": corpus.id_vocab[int(tab["dev"][i])], "rssi": f(tab["rssi"][i])}
            elif name.startswith("cell_"):
                obj = {"pid": pid, "t": t, "kind": "cellular", "tech": name[5:],
                       "cell_hash": corpus.id_vocab[int(tab["cell"][i])],
                       "signal": f(tab["signal"][i])}
            elif name == "notification":
                obj = {"pid": pid, "t": t, "kind": "notification",
                       "action": NOTIFICATION_ACTIONS[int(tab["action"][i])],
                       "key_hash": corpus.id_vocab[int(tab["key"][i])],
                       "is_duplicate": bool(tab["dup"][i])}
            elif name == "proximity":
                obj = {"pid": pid, "t": t, "kind": "proximity", "value": f(tab["value"][i])}
            elif name == "activity":
                obj = {"pid": pid, "t": t, "kind": "simple_activity",
                       "label": SIMPLE_ACTIVITY_LABELS[int(tab["label"][i])]}
            elif name == "steps_counter":
                obj = {"pid": pid, "t": t, "kind": "steps_counter", "count": int(tab["count"][i])}
            elif name == "steps_detected":
                obj = {"pid": pid, "t": t, "kind": "steps_detected"}
            elif name == "screen":
                obj = {"pid": pid, "t": t, "kind": "screen",
                       "action": SCREEN_ACTIONS[int(tab["action"][i])]}
            else:  # app
                obj = {"pid": pid, "t": t, "kind": "app_usage",
                       "category": corpus.app_vocab[int(tab["cat"][i])],
                       "end": int(tab["end"][i])}
            emitted.append((t, order, json.dumps(obj, separators=(",", ":"))))
    emitted.sort(key=lambda row: (row[0], row[1], row[2]))
    for _, _, line in emitted:
        yield line


def write_corpus(corpus: Corpus, out_dir: str | Path) -> None:
    """Write one subdirectory per country with participants/events/reports JSONL."""
    out = Path(out_dir)
    by_country: dict[str, list[str]] = {}
    for pid in corpus.pids:
        by_country.setdefault(corpus.participants[pid].country, []).append(pid)
    for country, pids in sorted(by_country.items()):
        cdir = out / country
        cdir.mkdir(parents=True, exist_ok=True)
        with open(cdir / "participants.jsonl", "w", encoding="utf-8") as fh:
            for pid in pids:
                fh.write(json.dumps({"pid": pid, "country": country}, separators=(",", ":")) + "\n")
        with open(cdir / "events.jsonl", "w", encoding="utf-8") as fh:
            for pid in pids:
                for line in _event_lines(corpus, pid):
                    fh.write(line + "\n")
        with open(cdir / "reports.jsonl", "w", encoding="utf-8") as fh:
            for pid in pids:
                for rep in corpus.reports_for(pid):
                    fh.write(json.dumps(
                        {"pid": pid, "t": rep.timestamp, "offset_min": rep.local_offset,
                         "activity": rep.raw_activity},
                        separators=(",", ":")) + "\n")


def read_corpus(
    in_dir: str | Path, max_malformed_fraction: float = 0.01
) -> tuple[Corpus, CorpusStats]:
    """Read every country subdirectory written by :func:`write_corpus`."""
    root = Path(in_dir)
    country_dirs = sorted(p for p in root.iterdir() if p.is_dir())
    if not country_dirs:
        raise IngestError(f"no country subdirectories under {root}")
    participants: list[Participant] = []
    events: list[SensorEvent] = []
    reports: list[SelfReport] = []
    malformed_events = 0
    malformed_reports = 0
    duplicates = 0
    for cdir in country_dirs:
        pfile = _first_existing(cdir, "participants.jsonl")
        with open(pfile, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                obj = json.loads(line)
                participants.append(Participant(obj["pid"], obj["country"]))
        ev_res = parse_event_log(_first_existing(cdir, "events.jsonl"), max_malformed_fraction)
        events.extend(ev_res.items)
        malformed_events += len(ev_res.malformed)
        rep_res = parse_self_reports(_first_existing(cdir, "reports.jsonl"), max_malformed_fraction)
        reports.extend(rep_res.items)
        malformed_reports += len(rep_res.malformed)
        duplicates += rep_res.duplicates_dropped
    corpus = build_corpus(events, reports, participants)
    stats = corpus_stats(
        corpus,
        malformed_events=malformed_events,
        malformed_reports=malformed_reports,
        duplicate_reports=duplicates,
    )
    return corpus, stats


def _first_existing(directory: Path, name: str) -> Path:
    for candidate in (directory / name, directory / (name + ".gz")):
        if candidate.exists():
            return candidate
    raise IngestError(f"missing {name} in {directory}")
