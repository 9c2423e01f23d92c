"""Binary parameter checkpoints.

Layout: magic ``ECGW``, version u16, then one entry per array in order:
name length u32, utf-8 name, rank u32, dims as u32 each, float64
little-endian payload. Round trips are bit-exact.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

_MAGIC = b"ECGW"
_VERSION = 1


class CheckpointError(ValueError):
    pass


def save_params(path: str | Path, params: dict[str, np.ndarray]) -> None:
    blob = bytearray(_MAGIC + struct.pack("<H", _VERSION))
    for name, arr in params.items():
        arr = np.asarray(arr, dtype=np.float64)
        nb = name.encode("utf-8")
        blob += struct.pack("<I", len(nb))
        blob += nb
        blob += struct.pack("<I", arr.ndim)
        blob += struct.pack(f"<{arr.ndim}I", *arr.shape)
        blob += arr.astype("<f8").tobytes()
    Path(path).write_bytes(bytes(blob))


def load_params(path: str | Path) -> dict[str, np.ndarray]:
    blob = Path(path).read_bytes()
    if len(blob) < 6:
        raise CheckpointError("file shorter than checkpoint header")
    if blob[:4] != _MAGIC:
        raise CheckpointError(f"expected magic {_MAGIC!r}, found {blob[:4]!r}")
    (version,) = struct.unpack_from("<H", blob, 4)
    if version != _VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    out: dict[str, np.ndarray] = {}
    off = 6
    while off < len(blob):
        try:
            (name_len,) = struct.unpack_from("<I", blob, off)
            off += 4
            name = blob[off : off + name_len].decode("utf-8")
            off += name_len
            (rank,) = struct.unpack_from("<I", blob, off)
            off += 4
            shape = struct.unpack_from(f"<{rank}I", blob, off)
            off += 4 * rank
            count = int(np.prod(shape, dtype=np.int64)) if rank else 1
            arr = np.frombuffer(blob, dtype="<f8", count=count, offset=off)
            off += count * 8
        except (struct.error, ValueError) as exc:
            raise CheckpointError(f"truncated checkpoint entry at byte {off}") from exc
        if arr.size != count:
            raise CheckpointError(f"truncated payload for entry {name!r}")
        out[name] = arr.reshape(shape).copy()
    return out
