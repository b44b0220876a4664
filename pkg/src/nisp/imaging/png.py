"""Minimal PNG codec for 8-bit display output and the 16-bit intermediate.

Writes truecolor PNGs with filter type 0 and a fixed zlib level, so identical
pixels always produce identical bytes. The reader handles non-interlaced
grayscale/RGB/RGBA at 8 or 16 bits, which covers everything this toolkit and
its tests produce.
"""
from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from ..errors import FormatError

_SIGNATURE = b"\x89PNG\r\n\x1a\n"


def _chunk(tag: bytes, payload: bytes) -> bytes:
    return (
        struct.pack(">I", len(payload))
        + tag
        + payload
        + struct.pack(">I", zlib.crc32(tag + payload) & 0xFFFFFFFF)
    )


def encode_png(planes: np.ndarray, text: dict[str, str] | None = None) -> bytes:
    """Encode (3, H, W) uint8 or uint16 planes as PNG bytes."""
    p = np.asarray(planes)
    if p.ndim != 3 or p.shape[0] != 3:
        raise FormatError(f"PNG encoder expects (3,H,W), got {p.shape}")
    if p.dtype == np.uint8:
        depth = 8
    elif p.dtype == np.uint16:
        depth = 16
    else:
        raise FormatError(f"PNG encoder expects uint8 or uint16, got {p.dtype}")
    h, w = p.shape[1:]
    ihdr = struct.pack(">IIBBBBB", w, h, depth, 2, 0, 0, 0)  # truecolor
    interleaved = np.transpose(p, (1, 2, 0))
    if depth == 16:
        interleaved = interleaved.astype(">u2")
    raw = b"".join(b"\x00" + interleaved[row].tobytes() for row in range(h))
    out = [_SIGNATURE, _chunk(b"IHDR", ihdr)]
    for key in sorted(text or {}):
        out.append(_chunk(b"tEXt", key.encode("latin-1") + b"\x00" + text[key].encode("latin-1")))
    out.append(_chunk(b"IDAT", zlib.compress(raw, 6)))
    out.append(_chunk(b"IEND", b""))
    return b"".join(out)


def write_png(path: str | Path, planes: np.ndarray, text: dict[str, str] | None = None) -> None:
    Path(path).write_bytes(encode_png(planes, text))


def _unfilter(raw: bytes, height: int, stride: int, bpp: int) -> bytearray:
    out = bytearray(height * stride)
    pos = 0
    prev_start = None
    for row in range(height):
        ftype = raw[pos]
        pos += 1
        line = bytearray(raw[pos : pos + stride])
        pos += stride
        start = row * stride
        if ftype == 0:
            pass
        elif ftype == 1:  # sub
            for i in range(bpp, stride):
                line[i] = (line[i] + line[i - bpp]) & 0xFF
        elif ftype == 2:  # up
            if prev_start is not None:
                for i in range(stride):
                    line[i] = (line[i] + out[prev_start + i]) & 0xFF
        elif ftype == 3:  # average
            for i in range(stride):
                left = line[i - bpp] if i >= bpp else 0
                up = out[prev_start + i] if prev_start is not None else 0
                line[i] = (line[i] + ((left + up) >> 1)) & 0xFF
        elif ftype == 4:  # paeth
            for i in range(stride):
                a = line[i - bpp] if i >= bpp else 0
                b = out[prev_start + i] if prev_start is not None else 0
                c = out[prev_start + i - bpp] if (prev_start is not None and i >= bpp) else 0
                pa, pb, pc = abs(b - c), abs(a - c), abs(a + b - 2 * c)
                pred = a if (pa <= pb and pa <= pc) else (b if pb <= pc else c)
                line[i] = (line[i] + pred) & 0xFF
        else:
            raise FormatError(f"unsupported PNG filter type {ftype}")
        out[start : start + stride] = line
        prev_start = start
    return out


def decode_png(buf: bytes) -> tuple[np.ndarray, dict[str, str]]:
    """Decode PNG bytes to ((3, H, W) uint8|uint16 planes, text chunks)."""
    if buf[:8] != _SIGNATURE:
        raise FormatError("not a PNG file")
    pos = 8
    ihdr = None
    idat = bytearray()
    text: dict[str, str] = {}
    while pos < len(buf):
        if pos + 8 > len(buf):
            raise FormatError("truncated PNG chunk header")
        length, = struct.unpack(">I", buf[pos : pos + 4])
        tag = buf[pos + 4 : pos + 8]
        payload = buf[pos + 8 : pos + 8 + length]
        if len(payload) != length:
            raise FormatError("truncated PNG chunk payload")
        pos += 12 + length
        if tag == b"IHDR":
            ihdr = struct.unpack(">IIBBBBB", payload)
        elif tag == b"IDAT":
            idat.extend(payload)
        elif tag == b"tEXt":
            key, _, val = payload.partition(b"\x00")
            text[key.decode("latin-1")] = val.decode("latin-1")
        elif tag == b"IEND":
            break
    if ihdr is None:
        raise FormatError("PNG missing IHDR")
    w, h, depth, color, _comp, _filt, interlace = ihdr
    if interlace:
        raise FormatError("interlaced PNG not supported")
    channels = {0: 1, 2: 3, 4: 2, 6: 4}.get(color)
    if channels is None or depth not in (8, 16):
        raise FormatError(f"unsupported PNG color type {color} / depth {depth}")
    sample_bytes = depth // 8
    bpp = channels * sample_bytes
    stride = w * bpp
    raw = zlib.decompress(bytes(idat))
    if len(raw) != h * (stride + 1):
        raise FormatError("PNG pixel payload has wrong size")
    flat = _unfilter(raw, h, stride, bpp)
    dtype = np.dtype(">u2") if depth == 16 else np.dtype("u1")
    arr = np.frombuffer(bytes(flat), dtype=dtype).reshape(h, w, channels)
    arr = arr.astype(np.uint16 if depth == 16 else np.uint8)
    if channels == 1:
        arr = np.repeat(arr, 3, axis=2)
    elif channels == 2:
        arr = np.repeat(arr[:, :, :1], 3, axis=2)
    elif channels == 4:
        arr = arr[:, :, :3]
    return np.transpose(arr, (2, 0, 1)), text


def read_png(path: str | Path) -> tuple[np.ndarray, dict[str, str]]:
    return decode_png(Path(path).read_bytes())
