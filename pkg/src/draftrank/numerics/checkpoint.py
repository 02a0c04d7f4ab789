"""Versioned binary checkpoint: named float64 tensors plus a JSON header.

The byte layout is fully deterministic (sorted JSON keys, listed tensor
order, little-endian raw buffers) so save -> load -> save round-trips
bit-exactly.
"""

from __future__ import annotations

import json
import struct

import numpy as np

MAGIC = b"DRNK"
VERSION = 1


class CheckpointError(ValueError):
    pass


def save_tensors(path, tensors: dict[str, np.ndarray], meta: dict, step: int = 0) -> None:
    header = {
        "meta": meta,
        "step": step,
        "tensors": [{"name": n, "shape": list(t.shape)} for n, t in tensors.items()],
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(blob)))
        fh.write(blob)
        for t in tensors.values():
            fh.write(np.ascontiguousarray(t, dtype="<f8").tobytes())


def load_tensors(path) -> tuple[dict[str, np.ndarray], dict, int]:
    with open(path, "rb") as fh:
        if fh.read(4) != MAGIC:
            raise CheckpointError(f"{path}: not a checkpoint file")
        version, header_len = struct.unpack("<II", fh.read(8))
        if version != VERSION:
            raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
        header = json.loads(fh.read(header_len).decode("utf-8"))
        tensors = {}
        for entry in header["tensors"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            buf = fh.read(count * 8)
            if len(buf) != count * 8:
                raise CheckpointError(f"{path}: truncated tensor {entry['name']!r}")
            tensors[entry["name"]] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()
    return tensors, header["meta"], header["step"]
