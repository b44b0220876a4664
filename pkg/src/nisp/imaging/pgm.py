"""16-bit binary PGM (P5) container for RAW mosaics, plus the JSON sidecar.

The sidecar `<name>.meta.json` carries {cfa, black_level, white_level, ccm}.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import FormatError
from .ops import normalize_raw
from .types import CFA_PATTERNS, BayerImage, CameraMeta, ColorMatrix


def _read_pgm_token(buf: bytes, pos: int) -> tuple[bytes, int]:
    # skip whitespace and '#' comments
    n = len(buf)
    while pos < n:
        c = buf[pos : pos + 1]
        if c == b"#":
            while pos < n and buf[pos : pos + 1] != b"\n":
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not buf[pos : pos + 1].isspace():
        pos += 1
    if start == pos:
        raise FormatError("truncated PGM header")
    return buf[start:pos], pos


def read_pgm(path: str | Path) -> np.ndarray:
    """Read a binary PGM. Returns uint16 (H, W); 8-bit files are widened."""
    buf = Path(path).read_bytes()
    if buf[:2] != b"P5":
        raise FormatError(f"{path}: not a binary PGM (magic {buf[:2]!r})")
    pos = 2
    fields = []
    for _ in range(3):
        tok, pos = _read_pgm_token(buf, pos)
        try:
            fields.append(int(tok))
        except ValueError as exc:
            raise FormatError(f"{path}: bad PGM header token {tok!r}") from exc
    width, height, maxval = fields
    if width <= 0 or height <= 0:
        raise FormatError(f"{path}: bad PGM dimensions {width}x{height}")
    if not 0 < maxval < 65536:
        raise FormatError(f"{path}: bad PGM maxval {maxval}")
    pos += 1  # single whitespace after maxval
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    need = width * height * dtype.itemsize
    data = buf[pos : pos + need]
    if len(data) != need:
        raise FormatError(f"{path}: PGM payload truncated ({len(data)} of {need} bytes)")
    arr = np.frombuffer(data, dtype=dtype).reshape(height, width)
    return arr.astype(np.uint16)


def write_pgm(path: str | Path, samples: np.ndarray) -> None:
    """Write a 16-bit binary PGM (big-endian samples, maxval 65535)."""
    arr = np.asarray(samples)
    if arr.ndim != 2:
        raise FormatError(f"PGM payload must be 2-D, got shape {arr.shape}")
    if arr.dtype != np.uint16:
        if np.issubdtype(arr.dtype, np.integer) and arr.min() >= 0 and arr.max() <= 65535:
            arr = arr.astype(np.uint16)
        else:
            raise FormatError(f"PGM payload must be uint16, got {arr.dtype}")
    h, w = arr.shape
    header = f"P5\n{w} {h}\n65535\n".encode("ascii")
    Path(path).write_bytes(header + arr.astype(">u2").tobytes())


def meta_sidecar_path(pgm_path: str | Path) -> Path:
    p = Path(pgm_path)
    return p.with_name(p.stem + ".meta.json")


def load_camera_meta(path: str | Path) -> CameraMeta:
    """Read a sidecar. `path` may be the RAW .pgm (sidecar derived) or the .json itself."""
    p = Path(path)
    if p.suffix != ".json":
        p = meta_sidecar_path(p)
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON sidecar: {exc}") from exc
    try:
        cfa = doc["cfa"]
        black = int(doc["black_level"])
        white = int(doc["white_level"])
        ccm = ColorMatrix(np.asarray(doc["ccm"], dtype=np.float64))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: sidecar missing or malformed field: {exc}") from exc
    if cfa not in CFA_PATTERNS:
        raise FormatError(f"{path}: unknown CFA pattern {cfa!r}")
    return CameraMeta(black_level=black, white_level=white, ccm=ccm, cfa=cfa)


def save_camera_meta(path: str | Path, meta: CameraMeta) -> None:
    """Write a sidecar. `path` may be the RAW .pgm (sidecar derived) or the .json itself."""
    p = Path(path)
    if p.suffix != ".json":
        p = meta_sidecar_path(p)
    doc = {
        "cfa": meta.cfa,
        "black_level": meta.black_level,
        "white_level": meta.white_level,
        "ccm": meta.ccm.values.tolist(),
    }
    p.write_text(json.dumps(doc, indent=2) + "\n")


def load_bayer(pgm_path: str | Path, meta_path: str | Path | None = None) -> BayerImage:
    """Load a mosaic with its sidecar; samples are black/white normalized."""
    meta = load_camera_meta(meta_path or meta_sidecar_path(pgm_path))
    adc = read_pgm(pgm_path)
    data = normalize_raw(adc, meta.black_level, meta.white_level)
    return BayerImage(data=data, cfa=meta.cfa, meta=meta)
