"""Weight file container.

Layout, all integers little-endian u32:

    magic "CBUW" | version | config length | config UTF-8 JSON |
    repeated { name length | name UTF-8 | rank | dims... | float32 LE data }

Records are written sorted by name so identical state yields identical
bytes. Round-trips are bit-exact.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import FormatError

MAGIC = b"CBUW"
VERSION = 1


def write_weight_file(path: str | Path, config_json: str, tensors: dict[str, np.ndarray]) -> None:
    blob = bytearray()
    blob += MAGIC
    blob += struct.pack("<I", VERSION)
    cfg = config_json.encode("utf-8")
    blob += struct.pack("<I", len(cfg))
    blob += cfg
    for name in sorted(tensors):
        arr = np.asarray(tensors[name], dtype=np.float32)
        encoded = name.encode("utf-8")
        blob += struct.pack("<I", len(encoded))
        blob += encoded
        blob += struct.pack("<I", arr.ndim)
        blob += struct.pack(f"<{arr.ndim}I", *arr.shape)
        blob += arr.astype("<f4").tobytes()
    Path(path).write_bytes(bytes(blob))


class _Reader:
    def __init__(self, buf: bytes, path):
        self.buf = buf
        self.pos = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise FormatError(f"{self.path}: truncated weight file at byte {self.pos}")
        chunk = self.buf[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    @property
    def exhausted(self) -> bool:
        return self.pos >= len(self.buf)


def read_weight_file(path: str | Path) -> tuple[str, dict[str, np.ndarray]]:
    """Returns (config JSON string, name -> float32 array). All-or-nothing."""
    r = _Reader(Path(path).read_bytes(), path)
    magic = r.take(4)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    version = r.u32()
    if version != VERSION:
        raise FormatError(f"{path}: unsupported weight format version {version}")
    config_json = r.take(r.u32()).decode("utf-8")
    tensors: dict[str, np.ndarray] = {}
    while not r.exhausted:
        name = r.take(r.u32()).decode("utf-8")
        rank = r.u32()
        if rank > 8:
            raise FormatError(f"{path}: implausible rank {rank} for {name!r}")
        dims = struct.unpack(f"<{rank}I", r.take(4 * rank))
        count = 1
        for d in dims:
            count *= d
        data = np.frombuffer(r.take(4 * count), dtype="<f4").reshape(dims)
        tensors[name] = data.astype(np.float32)
    return config_json, tensors
