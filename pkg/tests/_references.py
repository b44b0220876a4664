"""Independent nested-loop reference implementations used as test oracles.

Deliberately written pixel-by-pixel, with no shared code beyond numpy
scalars, so they exercise the production vectorization from the outside.
"""
from __future__ import annotations

import math

import numpy as np

_TILE = {
    "RGGB": ((0, 1), (1, 2)),
    "BGGR": ((2, 1), (1, 0)),
    "GRBG": ((1, 0), (2, 1)),
    "GBRG": ((1, 2), (0, 1)),
}


def demosaic_loop(mosaic: np.ndarray, cfa: str) -> np.ndarray:
    h, w = mosaic.shape
    tile = _TILE[cfa]
    out = np.zeros((3, h, w), dtype=np.float64)
    for y in range(h):
        for x in range(w):
            own = tile[y % 2][x % 2]
            for ch in range(3):
                if ch == own:
                    out[ch, y, x] = mosaic[y, x]
                    continue
                total = 0.0
                count = 0
                for dy in (-1, 0, 1):
                    for dx in (-1, 0, 1):
                        ny, nx = y + dy, x + dx
                        if 0 <= ny < h and 0 <= nx < w and tile[ny % 2][nx % 2] == ch:
                            total += mosaic[ny, nx]
                            count += 1
                out[ch, y, x] = total / count if count else 0.0
    return out


def bilateral_loop(
    planes: np.ndarray, sigma_spatial: float, sigma_range: float, force_unit_range: bool = False
) -> np.ndarray:
    _, h, w = planes.shape
    radius = math.ceil(3.0 * sigma_spatial)
    out = np.zeros_like(planes)
    for ch in range(3):
        for y in range(h):
            for x in range(w):
                num = 0.0
                den = 0.0
                for dy in range(-radius, radius + 1):
                    for dx in range(-radius, radius + 1):
                        ny, nx = y + dy, x + dx
                        if not (0 <= ny < h and 0 <= nx < w):
                            continue
                        ws = math.exp(-(dy * dy + dx * dx) / (2.0 * sigma_spatial**2))
                        if force_unit_range:
                            wr = 1.0
                        else:
                            d = planes[ch, ny, nx] - planes[ch, y, x]
                            wr = math.exp(-(d * d) / (2.0 * sigma_range**2))
                        num += ws * wr * planes[ch, ny, nx]
                        den += ws * wr
                out[ch, y, x] = num / den
    return np.clip(out, 0.0, 1.0)


def ccm_loop(planes: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    _, h, w = planes.shape
    out = np.zeros_like(planes)
    for y in range(h):
        for x in range(w):
            for i in range(3):
                acc = 0.0
                for j in range(3):
                    acc += matrix[i, j] * planes[j, y, x]
                out[i, y, x] = max(acc, 0.0)
    return out


def matrix_pixel_loop(planes: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    """Plain per-pixel matrix product without the nonnegativity clamp."""
    _, h, w = planes.shape
    out = np.zeros_like(planes)
    for y in range(h):
        for x in range(w):
            for i in range(3):
                acc = 0.0
                for j in range(3):
                    acc += matrix[i, j] * planes[j, y, x]
                out[i, y, x] = acc
    return out


def psnr_loop(a: np.ndarray, b: np.ndarray) -> float:
    """PSNR between two uint8 plane stacks, peak 1 on [0,1]-scaled values."""
    total = 0.0
    n = 0
    for ch in range(a.shape[0]):
        for y in range(a.shape[1]):
            for x in range(a.shape[2]):
                d = a[ch, y, x] / 255.0 - b[ch, y, x] / 255.0
                total += d * d
                n += 1
    mse = total / n
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def conv2d_loop(x: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int, pad: int) -> np.ndarray:
    n, cin, h, wd = x.shape
    cout, _, kh, kw = w.shape
    ho = (h + 2 * pad - kh) // stride + 1
    wo = (wd + 2 * pad - kw) // stride + 1
    out = np.zeros((n, cout, ho, wo), dtype=np.float64)
    for ni in range(n):
        for oc in range(cout):
            for oy in range(ho):
                for ox in range(wo):
                    acc = float(b[oc])
                    for ic in range(cin):
                        for ky in range(kh):
                            for kx in range(kw):
                                iy = oy * stride + ky - pad
                                ix = ox * stride + kx - pad
                                if 0 <= iy < h and 0 <= ix < wd:
                                    acc += x[ni, ic, iy, ix] * w[oc, ic, ky, kx]
                    out[ni, oc, oy, ox] = acc
    return out
