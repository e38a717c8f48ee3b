"""Dataset manifest and segments-file formats.

Manifest (JSON)::

    {"fs": 64, "subjects": [{"id": "S01", "signal": "S01_signal.txt",
                             "events": "S01_events.csv"}, ...]}

Paths are relative to the manifest.  A signal file holds one sample per line;
an events file holds ``start_s,end_s,label`` rows (``#`` comments and a
header line starting with a letter are skipped).

Segments file: one JSON header line ``{"count", "window", "fs"}`` followed by
``count`` records of ``<u2 id length><id utf-8><u1 label><u1 degenerate>``
and ``window`` little-endian float32 samples.
"""

import json
import os
import struct
from dataclasses import dataclass

import numpy as np

from teanet.errors import DataError
from teanet.preprocessing import Event, Recording, Segment

SEGMENTS_FORMAT = "teanet-segments"


@dataclass
class SubjectEntry:
    id: str
    signal: str
    events: str


@dataclass
class Manifest:
    fs: float
    subjects: list
    root: str = "."


def read_manifest(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except ValueError as exc:
        raise DataError(f"{path}: manifest is not valid JSON ({exc})") from exc
    if not isinstance(data, dict) or "fs" not in data or "subjects" not in data:
        raise DataError(f"{path}: manifest needs 'fs' and 'subjects'")
    fs = data["fs"]
    if not isinstance(fs, (int, float)) or fs <= 0:
        raise DataError(f"{path}: fs must be a positive number")
    entries, seen = [], set()
    for i, s in enumerate(data["subjects"]):
        try:
            entry = SubjectEntry(str(s["id"]), s["signal"], s["events"])
        except (KeyError, TypeError) as exc:
            raise DataError(f"{path}: subject entry {i} needs id, signal, events") from exc
        if entry.id in seen:
            raise DataError(f"{path}: duplicate subject id {entry.id!r}")
        seen.add(entry.id)
        entries.append(entry)
    return Manifest(float(fs), entries, os.path.dirname(os.path.abspath(path)))


def write_manifest(path, manifest):
    data = {"fs": manifest.fs,
            "subjects": [{"id": s.id, "signal": s.signal, "events": s.events}
                         for s in manifest.subjects]}
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2)
        fh.write("\n")


def read_signal(path):
    values = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            try:
                values.append(float(text))
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric sample {text!r}") from None
    return np.array(values, dtype=np.float64)


def read_events(path):
    events = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#") or text[0].isalpha():
                continue
            parts = [p.strip() for p in text.split(",")]
            if len(parts) != 3:
                raise DataError(f"{path}:{lineno}: expected start_s,end_s,label")
            try:
                start, end = float(parts[0]), float(parts[1])
                label = int(parts[2])
            except ValueError:
                raise DataError(f"{path}:{lineno}: malformed row {text!r}") from None
            if label not in (0, 1):
                raise DataError(f"{path}:{lineno}: label must be 0 or 1, got {label}")
            if not end > start:
                raise DataError(f"{path}:{lineno}: end must be after start")
            events.append((lineno, Event(start, end, label)))
    ordered = sorted(events, key=lambda t: t[1].start)
    for (la, a), (lb, b) in zip(ordered, ordered[1:]):
        if b.start < a.end:
            raise DataError(f"{path}: events on lines {la} and {lb} overlap")
    return [e for _, e in events]


def load_dataset(manifest_path):
    """Read every subject of a manifest into :class:`Recording` objects."""
    manifest = read_manifest(manifest_path)
    recordings = []
    for s in manifest.subjects:
        sig = os.path.join(manifest.root, s.signal)
        ev = os.path.join(manifest.root, s.events)
        for p in (sig, ev):
            if not os.path.exists(p):
                raise DataError(f"subject {s.id}: missing file {p}")
        recordings.append(Recording(s.id, read_signal(sig), manifest.fs, read_events(ev)))
    return recordings


def write_segments(path, segments, fs):
    window = len(segments[0].values) if segments else 0
    header = {"format": SEGMENTS_FORMAT, "count": len(segments), "window": window, "fs": fs}
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        for s in segments:
            if len(s.values) != window:
                raise DataError("all segments in a file must share one window length")
            sid = s.subject.encode()
            fh.write(struct.pack("<H", len(sid)) + sid)
            fh.write(struct.pack("<BB", s.label, int(s.degenerate)))
            fh.write(np.asarray(s.values, dtype="<f4").tobytes())


def read_segments(path):
    """Return ``(segments, fs)``; values come back as float64 copies of the float32 data."""
    with open(path, "rb") as fh:
        try:
            header = json.loads(fh.readline())
        except ValueError as exc:
            raise DataError(f"{path}: unreadable segments header") from exc
        if header.get("format") != SEGMENTS_FORMAT:
            raise DataError(f"{path}: not a segments file")
        window, segments = header["window"], []
        for i in range(header["count"]):
            raw = fh.read(2)
            if len(raw) < 2:
                raise DataError(f"{path}: truncated at record {i}")
            (n,) = struct.unpack("<H", raw)
            sid = fh.read(n).decode()
            label, degenerate = struct.unpack("<BB", fh.read(2))
            buf = fh.read(4 * window)
            if len(buf) < 4 * window:
                raise DataError(f"{path}: truncated at record {i}")
            values = np.frombuffer(buf, dtype="<f4").astype(np.float64)
            segments.append(Segment(sid, label, values, bool(degenerate)))
    return segments, header["fs"]
