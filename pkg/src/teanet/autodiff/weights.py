"""Weights file: one JSON header line, then little-endian float32 payload.

The header lists every tensor as ``{"name", "shape", "offset"}`` with byte
offsets relative to the start of the payload, in declaration order.  An
optional ``meta`` object rides along (the model stores its config there).
"""

import json

import numpy as np

from teanet.errors import DataError

MAGIC = "TEANET-WEIGHTS"
VERSION = 1
_DTYPE = np.dtype("<f4")


def save_weights(path, tensors, meta=None):
    """Write ``tensors`` (an ordered name -> array mapping) to ``path``."""
    entries, offset = [], 0
    arrays = []
    for name, arr in tensors.items():
        a = np.ascontiguousarray(arr, dtype=_DTYPE)
        entries.append({"name": name, "shape": list(a.shape), "offset": offset})
        offset += a.nbytes
        arrays.append(a)
    header = {"format": MAGIC, "version": VERSION, "dtype": "float32-le",
              "tensors": entries, "meta": meta or {}}
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True, separators=(",", ":")).encode() + b"\n")
        for a in arrays:
            fh.write(a.tobytes())


def load_weights(path):
    """Return ``(tensors, meta)`` with tensors as float64 arrays in file order."""
    with open(path, "rb") as fh:
        line = fh.readline()
        payload = fh.read()
    try:
        header = json.loads(line)
    except ValueError as exc:
        raise DataError(f"{path}: unreadable weights header") from exc
    if header.get("format") != MAGIC:
        raise DataError(f"{path}: not a weights file")
    tensors = {}
    for e in header["tensors"]:
        shape = tuple(e["shape"])
        count = int(np.prod(shape, dtype=np.int64))
        end = e["offset"] + count * _DTYPE.itemsize
        if end > len(payload):
            raise DataError(f"{path}: payload truncated at tensor {e['name']!r}")
        a = np.frombuffer(payload, dtype=_DTYPE, count=count, offset=e["offset"])
        tensors[e["name"]] = a.reshape(shape).astype(np.float64)
    return tensors, header.get("meta", {})
