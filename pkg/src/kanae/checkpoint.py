"""Bit-exact single-file checkpoint format.

Layout:
    line 1:  ``KANAE1 <json-metadata-length>\\n`` (ASCII)
    bytes:   JSON metadata block of exactly that length
    bytes:   raw little-endian tensor payloads, in declared order

The metadata block records arbitrary caller context (model spec,
effective config) plus a ``tensors`` list with name, shape, dtype and
byte offset of every payload.
"""

from __future__ import annotations

import json

import numpy as np

MAGIC = "KANAE1"

_DTYPES = {"<f8": "<f8", "<f4": "<f4", "<i8": "<i8"}


def _le_dtype(arr):
    kind = {"f8": "<f8", "f4": "<f4", "i8": "<i8"}.get(
        f"{arr.dtype.kind}{arr.dtype.itemsize}"
    )
    if kind is None:
        raise ValueError(f"unsupported checkpoint dtype {arr.dtype}")
    return kind


def save_checkpoint(path, tensors, metadata=None):
    """Write named arrays plus metadata; round-trips bit-exactly.

    tensors: iterable of (name, ndarray) in the order they should be
    declared and stored.
    """
    tensors = list(tensors)
    entries = []
    offset = 0
    for name, arr in tensors:
        dt = _le_dtype(arr)
        nbytes = arr.size * arr.dtype.itemsize
        entries.append({
            "name": name,
            "shape": list(arr.shape),
            "dtype": dt,
            "offset": offset,
            "nbytes": nbytes,
        })
        offset += nbytes
    meta = dict(metadata or {})
    meta["tensors"] = entries
    blob = json.dumps(meta).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(f"{MAGIC} {len(blob)}\n".encode("ascii"))
        fh.write(blob)
        for _, arr in tensors:
            fh.write(np.ascontiguousarray(arr).astype(_le_dtype(arr), copy=False).tobytes())


def read_header(path):
    """Metadata dict only (cheap; skips payloads)."""
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").strip()
        parts = header.split()
        if len(parts) != 2 or parts[0] != MAGIC:
            raise ValueError(f"not a {MAGIC} checkpoint: {path}")
        return json.loads(fh.read(int(parts[1])).decode("utf-8"))


def load_checkpoint(path):
    """Returns (metadata, dict of name -> ndarray)."""
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").strip()
        parts = header.split()
        if len(parts) != 2 or parts[0] != MAGIC:
            raise ValueError(f"not a {MAGIC} checkpoint: {path}")
        meta = json.loads(fh.read(int(parts[1])).decode("utf-8"))
        payload = fh.read()
    tensors = {}
    for entry in meta["tensors"]:
        dt = np.dtype(_DTYPES[entry["dtype"]])
        start = entry["offset"]
        raw = payload[start:start + entry["nbytes"]]
        tensors[entry["name"]] = np.frombuffer(raw, dtype=dt).reshape(entry["shape"]).copy()
    return meta, tensors
