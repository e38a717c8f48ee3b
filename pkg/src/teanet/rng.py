"""Named random streams derived from one root seed."""

import zlib

import numpy as np


def stream(seed, name, *extra):
    """Independent generator for ``name`` (e.g. "init", "shuffle", "dropout", "synth")."""
    key = [int(seed), zlib.crc32(name.encode())] + [int(e) for e in extra]
    return np.random.default_rng(np.random.SeedSequence(key))
