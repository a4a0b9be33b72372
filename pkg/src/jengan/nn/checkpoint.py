"""Flat binary parameter checkpoints.

Layout, all little-endian:

    magic   4 bytes  b"JGN1"
    count   u64      number of tensors
    per tensor:
        name_len  u32
        name      UTF-8, name_len bytes
        rank      u32
        dims      u64 * rank
        values    f64 * prod(dims), C order
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"JGN1"


class CheckpointFormatError(ValueError):
    """File is not a valid parameter checkpoint."""


def save_checkpoint(path, tensors: dict[str, np.ndarray]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<Q", len(tensors)))
        for name, arr in tensors.items():
            arr = np.asarray(arr, dtype=np.float64)  # ascontiguousarray would promote 0-d to 1-d
            name_bytes = name.encode("utf-8")
            f.write(struct.pack("<I", len(name_bytes)))
            f.write(name_bytes)
            f.write(struct.pack("<I", arr.ndim))
            for d in arr.shape:
                f.write(struct.pack("<Q", d))
            f.write(arr.astype("<f8").tobytes(order="C"))


def load_checkpoint(path) -> dict[str, np.ndarray]:
    data = Path(path).read_bytes()
    if len(data) < len(MAGIC) + 8 or data[:4] != MAGIC:
        raise CheckpointFormatError(f"{path}: missing {MAGIC!r} magic")
    pos = 4
    (count,) = struct.unpack_from("<Q", data, pos)
    pos += 8
    out: dict[str, np.ndarray] = {}
    try:
        for _ in range(count):
            (name_len,) = struct.unpack_from("<I", data, pos)
            pos += 4
            name = data[pos:pos + name_len].decode("utf-8")
            if len(data) < pos + name_len:
                raise CheckpointFormatError(f"{path}: truncated tensor name")
            pos += name_len
            (rank,) = struct.unpack_from("<I", data, pos)
            pos += 4
            dims = struct.unpack_from(f"<{rank}Q", data, pos)
            pos += 8 * rank
            n = int(np.prod(dims)) if rank else 1
            end = pos + 8 * n
            if end > len(data):
                raise CheckpointFormatError(f"{path}: truncated tensor values for {name!r}")
            out[name] = np.frombuffer(data[pos:end], dtype="<f8").reshape(dims).copy()
            pos = end
    except struct.error as e:
        raise CheckpointFormatError(f"{path}: truncated header ({e})") from e
    if pos != len(data):
        raise CheckpointFormatError(f"{path}: {len(data) - pos} trailing bytes")
    return out
