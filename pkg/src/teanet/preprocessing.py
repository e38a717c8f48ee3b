"""Segmentation of labeled recordings into fixed windows, and per-window z-scoring."""

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from teanet.errors import ConfigError, DataError

log = logging.getLogger(__name__)

NORMAL, STRESSED = 0, 1
DEGENERATE_STD = 1e-8


@dataclass(frozen=True)
class Event:
    start: float
    end: float
    label: int


@dataclass
class Recording:
    subject: str
    samples: np.ndarray
    fs: float
    events: list = field(default_factory=list)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if not self.fs > 0:
            raise DataError(f"{self.subject}: sampling rate must be positive, got {self.fs}")
        duration = len(self.samples) / self.fs
        ordered = sorted(self.events, key=lambda e: e.start)
        for e in ordered:
            if e.label not in (NORMAL, STRESSED):
                raise DataError(f"{self.subject}: label must be 0 or 1, got {e.label}")
            if not 0 <= e.start < e.end <= duration + 1e-9:
                raise DataError(
                    f"{self.subject}: event [{e.start}, {e.end}) outside recording of {duration} s")
        for a, b in zip(ordered, ordered[1:]):
            if b.start < a.end:
                raise DataError(f"{self.subject}: events [{a.start}, {a.end}) and "
                                f"[{b.start}, {b.end}) overlap")


@dataclass
class Segment:
    subject: str
    label: int
    values: np.ndarray
    degenerate: bool = False


def segment(rec, t_window=30.0):
    """Cut each labeled event into consecutive non-overlapping windows.

    The tail of an event shorter than one window is dropped.
    """
    if not t_window > 0:
        raise ConfigError(f"window length must be positive, got {t_window}")
    win = int(round(t_window * rec.fs))
    out = []
    for e in rec.events:
        start = int(round(e.start * rec.fs))
        stop = int(round(e.end * rec.fs))
        count = (stop - start) // win
        if count == 0:
            log.info("%s: event [%g, %g) shorter than one %g s window, skipped",
                     rec.subject, e.start, e.end, t_window)
        for i in range(count):
            a = start + i * win
            out.append(Segment(rec.subject, e.label, rec.samples[a:a + win].copy()))
    return out


def zscore(values):
    """Return ``(normalized, degenerate)`` using the population standard deviation."""
    values = np.asarray(values, dtype=np.float64)
    std = values.std()
    if std < DEGENERATE_STD:
        return np.zeros_like(values), True
    return (values - values.mean()) / std, False


def normalize(seg):
    values, degenerate = zscore(seg.values)
    return replace(seg, values=values, degenerate=degenerate)


def preprocess(recordings, t_window=30.0):
    """Segment and normalize every recording, keeping recording order."""
    return [normalize(s) for rec in recordings for s in segment(rec, t_window)]
