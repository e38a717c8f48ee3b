"""Minority-class oversampling with overlapping sliding windows.

The minority windows are joined end to end into one signal and ``n_majority``
windows are cut from it at a constant stride, so both classes end up with the
same count.
"""

import math
from dataclasses import dataclass

import numpy as np

from teanet.errors import DataError
from teanet.preprocessing import Segment, zscore


@dataclass(frozen=True)
class AugmentPlan:
    t_minority: float
    t_window: float
    fs: float
    n_majority: int
    step: int


def step_size(t_minority, t_window, fs, n_majority):
    """Stride in whole samples: ``floor((t_minority - t_window) * fs / (n_majority - 1))``."""
    if n_majority < 2:
        raise DataError(f"need at least 2 majority samples to space windows, got {n_majority}")
    if t_minority < t_window:
        raise DataError(f"minority signal ({t_minority} s) is shorter than one window "
                        f"({t_window} s)")
    # rounding guard so e.g. 270 * 64 / 9 does not floor to 1919
    return int(math.floor((t_minority - t_window) * fs / (n_majority - 1) + 1e-9))


def plan(n_minority_samples, window, fs, n_majority):
    """Plan over sample counts; times are derived from them."""
    t_min, t_win = n_minority_samples / fs, window / fs
    return AugmentPlan(t_min, t_win, fs, n_majority, step_size(t_min, t_win, fs, n_majority))


def augment_minority(minority_segments, n_majority, fs=64.0, renormalize=True):
    """Return ``n_majority`` windows sliced from the concatenated minority signal.

    Window ``i`` starts at ``i * d``.  Each window carries the minority label
    and the subject of the segment its first sample came from.
    """
    if not minority_segments:
        raise DataError("no minority segments to augment")
    labels = {s.label for s in minority_segments}
    lengths = {len(s.values) for s in minority_segments}
    if len(labels) != 1 or len(lengths) != 1:
        raise DataError("minority segments must share one label and one window length")
    label, window = labels.pop(), lengths.pop()
    signal = np.concatenate([s.values for s in minority_segments])
    owners = np.repeat(np.arange(len(minority_segments)), window)
    p = plan(len(signal), window, fs, n_majority)
    out = []
    for i in range(n_majority):
        a = i * p.step
        values = signal[a:a + window].copy()
        degenerate = False
        if renormalize:
            values, degenerate = zscore(values)
        out.append(Segment(minority_segments[owners[a]].subject, label, values, degenerate))
    return out


def window_starts(n_samples, window, fs, n_majority):
    p = plan(n_samples, window, fs, n_majority)
    return [i * p.step for i in range(n_majority)]


def balance(segments, fs=64.0):
    """Oversample the smaller class so both classes have equal counts.

    Returns ``(balanced_segments, plan)``.  Majority segments come first, in
    input order.  Equal classes are returned unchanged: the step then equals
    one window, so augmenting would only reproduce the originals.
    """
    by_label = {0: [], 1: []}
    for s in segments:
        by_label[s.label].append(s)
    if not by_label[0] or not by_label[1]:
        raise DataError("balancing needs segments of both classes")
    major, minor = (0, 1) if len(by_label[0]) >= len(by_label[1]) else (1, 0)
    n_major = len(by_label[major])
    window = len(by_label[minor][0].values)
    if len(by_label[minor]) == n_major:
        t_min, t_win = window * n_major / fs, window / fs
        return list(segments), AugmentPlan(t_min, t_win, fs, n_major, window)
    p = plan(window * len(by_label[minor]), window, fs, n_major)
    return by_label[major] + augment_minority(by_label[minor], n_major, fs), p
