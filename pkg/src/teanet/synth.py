"""Synthetic pulse-like recordings for desk-scale end-to-end runs.

Each trial is a fundamental at a class-specific heart-rate frequency plus two
harmonics and Gaussian noise.  Trials are separated by unlabeled gaps.
"""

import os
from dataclasses import asdict, dataclass

import numpy as np

from teanet.errors import ConfigError
from teanet.io import Manifest, SubjectEntry, write_manifest
from teanet.rng import stream


@dataclass
class SynthSpec:
    subjects: int = 8
    fs: float = 64.0
    normal_band: tuple = (1.0, 1.2)
    stressed_band: tuple = (1.6, 1.8)
    noise: float = 0.1
    normal_trials: int = 1
    normal_trial_s: float = 180.0
    stressed_trials: int = 1
    stressed_trial_s: float = 60.0
    gap_s: float = 30.0
    harmonics: bool = True
    allow_overlap: bool = False
    seed: int = 42

    def __post_init__(self):
        self.normal_band = tuple(self.normal_band)
        self.stressed_band = tuple(self.stressed_band)
        if self.subjects < 1:
            raise ConfigError("need at least one subject")
        for band in (self.normal_band, self.stressed_band):
            if len(band) != 2 or not 0 < band[0] <= band[1]:
                raise ConfigError(f"band must be (low, high) with 0 < low <= high, got {band}")
        lo, hi = sorted([self.normal_band, self.stressed_band])
        if not self.allow_overlap and lo[1] >= hi[0]:
            raise ConfigError("class bands overlap; set allow_overlap for hard mode")
        if self.noise < 0:
            raise ConfigError("noise must be >= 0")

    def segments_per_subject(self, t_window=30.0):
        return (self.normal_trials * int(self.normal_trial_s // t_window),
                self.stressed_trials * int(self.stressed_trial_s // t_window))


def pulse(freq, duration, fs, rng, harmonics=True):
    """Unit-amplitude pulse wave at ``freq`` Hz with random phases."""
    t = np.arange(int(round(duration * fs))) / fs
    phases = rng.uniform(0, 2 * np.pi, size=3)
    wave = np.sin(2 * np.pi * freq * t + phases[0])
    if harmonics:
        wave += 0.5 * np.sin(4 * np.pi * freq * t + phases[1])
        wave += 0.25 * np.sin(6 * np.pi * freq * t + phases[2])
    return wave


def subject_recording(spec, index):
    """``(samples, events)`` for one subject; events are ``(start_s, end_s, label)``."""
    rng = stream(spec.seed, "synth", index)
    amplitude = rng.uniform(15.0, 30.0)
    offset = rng.uniform(-5.0, 5.0)
    trials = [(0, spec.normal_trial_s)] * spec.normal_trials
    trials += [(1, spec.stressed_trial_s)] * spec.stressed_trials
    parts, events, t = [], [], 0.0
    for label, duration in trials:
        gap_freq = rng.uniform(*spec.normal_band)
        parts.append(pulse(gap_freq, spec.gap_s, spec.fs, rng, spec.harmonics))
        t += spec.gap_s
        band = spec.stressed_band if label == 1 else spec.normal_band
        parts.append(pulse(rng.uniform(*band), duration, spec.fs, rng, spec.harmonics))
        events.append((t, t + duration, label))
        t += duration
    clean = np.concatenate(parts)
    samples = amplitude * (clean + spec.noise * rng.standard_normal(clean.shape)) + offset
    return samples, events


def synth_generate(spec, out_dir):
    """Write a manifest-format dataset to ``out_dir``; returns the manifest path."""
    os.makedirs(out_dir, exist_ok=True)
    entries = []
    for i in range(spec.subjects):
        sid = f"S{i + 1:02d}"
        samples, events = subject_recording(spec, i)
        sig_name, ev_name = f"{sid}_signal.txt", f"{sid}_events.csv"
        with open(os.path.join(out_dir, sig_name), "w") as fh:
            fh.write("\n".join(f"{v:.6f}" for v in samples))
            fh.write("\n")
        with open(os.path.join(out_dir, ev_name), "w") as fh:
            fh.write("start_s,end_s,label\n")
            for start, end, label in events:
                fh.write(f"{start:g},{end:g},{label}\n")
        entries.append(SubjectEntry(sid, sig_name, ev_name))
    path = os.path.join(out_dir, "manifest.json")
    write_manifest(path, Manifest(spec.fs, entries))
    return path


def spec_dict(spec):
    d = asdict(spec)
    d["normal_band"] = list(spec.normal_band)
    d["stressed_band"] = list(spec.stressed_band)
    return d
