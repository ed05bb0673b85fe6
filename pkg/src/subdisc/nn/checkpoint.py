"""Model checkpoint codec ("SDM1").

Layout, all little-endian:

    magic "SDM1"
    u32 metadata length, then that many bytes of UTF-8 "key=value" lines
    u32 tensor count
    per tensor: u16 name length, name UTF-8, u8 ndim, u32 * ndim shape,
                float32 payload, row-major

Tensors round-trip bit-exactly; metadata values are strings.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import CodecError

CHECKPOINT_MAGIC = b"SDM1"


def write_checkpoint(path: str | Path, meta: dict[str, str],
                     tensors: dict[str, np.ndarray]) -> None:
    meta_lines = []
    for key in sorted(meta):
        if "=" in key or "\n" in key or "\n" in str(meta[key]):
            raise CodecError(f"metadata key/value must not contain '=' or newline: {key!r}")
        meta_lines.append(f"{key}={meta[key]}")
    meta_blob = "\n".join(meta_lines).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", len(meta_blob)))
        fh.write(meta_blob)
        fh.write(struct.pack("<I", len(tensors)))
        for name in sorted(tensors):
            arr = np.ascontiguousarray(tensors[name], dtype="<f4")
            name_b = name.encode("utf-8")
            fh.write(struct.pack("<H", len(name_b)))
            fh.write(name_b)
            fh.write(struct.pack("<B", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.tobytes())


def read_checkpoint(path: str | Path) -> tuple[dict[str, str], dict[str, np.ndarray]]:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise CodecError(f"cannot read checkpoint {path}: {exc}") from exc
    if len(raw) < 8 or raw[:4] != CHECKPOINT_MAGIC:
        raise CodecError(f"{path}: bad magic")
    pos = 4

    def take(n: int) -> bytes:
        nonlocal pos
        if pos + n > len(raw):
            raise CodecError(f"{path}: truncated checkpoint")
        chunk = raw[pos: pos + n]
        pos += n
        return chunk

    (meta_len,) = struct.unpack("<I", take(4))
    meta_blob = take(meta_len).decode("utf-8")
    meta = {}
    for line in meta_blob.splitlines():
        if line:
            key, _, value = line.partition("=")
            meta[key] = value
    (n_tensors,) = struct.unpack("<I", take(4))
    tensors: dict[str, np.ndarray] = {}
    for _ in range(n_tensors):
        (name_len,) = struct.unpack("<H", take(2))
        name = take(name_len).decode("utf-8")
        (ndim,) = struct.unpack("<B", take(1))
        shape = struct.unpack(f"<{ndim}I", take(4 * ndim)) if ndim else ()
        count = int(np.prod(shape, dtype=np.int64)) if ndim else 1
        data = np.frombuffer(take(4 * count), dtype="<f4").reshape(shape).copy()
        tensors[name] = data
    if pos != len(raw):
        raise CodecError(f"{path}: trailing bytes after last tensor")
    return meta, tensors
