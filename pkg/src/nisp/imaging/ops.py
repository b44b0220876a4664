"""Classical (non-learned) ISP stages.

All operations are pure functions over immutable inputs, deterministic, and
safe to call concurrently. Arithmetic is float64 throughout; neighbor sums
run in a fixed offset order so results are reproducible bit for bit.
"""
from __future__ import annotations

import math

import numpy as np

from ..errors import DegenerateInputError, ParameterError
from .types import (
    CFA_TILE,
    BayerImage,
    ColorMatrix,
    EncodedImage,
    GrayImage,
    HistogramVector,
    Illuminant,
    LinearRgbImage,
    PatchRect,
    XyzImage,
)

# Division guard used wherever a luminance denominator appears.
EPS = 1e-6

# D65 color space matrices (linear sRGB <-> CIE-XYZ).
XYZ_TO_SRGB = np.array(
    [
        [3.2404542, -1.5371385, -0.4985314],
        [-0.9692660, 1.8760108, 0.0415560],
        [0.0556434, -0.2040259, 1.0572252],
    ],
    dtype=np.float64,
)
SRGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ],
    dtype=np.float64,
)


def _shift_add(acc: np.ndarray, src: np.ndarray, dy: int, dx: int) -> None:
    """acc[y, x] += src[y + dy, x + dx] restricted to in-bounds source pixels."""
    h, w = src.shape
    y0, y1 = max(0, -dy), h - max(0, dy)
    x0, x1 = max(0, -dx), w - max(0, dx)
    acc[y0:y1, x0:x1] += src[y0 + dy : y1 + dy, x0 + dx : x1 + dx]


def cfa_site_masks(cfa: str, height: int, width: int) -> np.ndarray:
    """Boolean (3, H, W) masks marking which channel each CFA site carries."""
    tile = CFA_TILE[cfa]
    masks = np.zeros((3, height, width), dtype=bool)
    for row in (0, 1):
        for col in (0, 1):
            masks[tile[row][col], row::2, col::2] = True
    return masks


def demosaic_bilinear(img: BayerImage) -> LinearRgbImage:
    """Interpolate the two missing channels at each CFA site.

    Native samples are preserved exactly; a missing channel is the mean of
    the in-bounds same-channel neighbors within the 3x3 window.
    """
    mosaic = img.data
    h, w = mosaic.shape
    masks = cfa_site_masks(img.cfa, h, w)
    out = np.empty((3, h, w), dtype=np.float64)
    for ch in range(3):
        mask = masks[ch]
        vals = np.where(mask, mosaic, 0.0)
        cnt = mask.astype(np.float64)
        acc = np.zeros((h, w), dtype=np.float64)
        den = np.zeros((h, w), dtype=np.float64)
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                _shift_add(acc, vals, dy, dx)
                _shift_add(den, cnt, dy, dx)
        interp = acc / np.maximum(den, 1.0)
        out[ch] = np.where(mask, mosaic, interp)
    return LinearRgbImage(out)


def denoise_bilateral(
    img: LinearRgbImage, sigma_spatial: float, sigma_range: float
) -> LinearRgbImage:
    """Per-plane bilateral filter.

    Gaussian spatial kernel truncated at radius ceil(3 * sigma_spatial),
    Gaussian range kernel, in-bounds neighbors only.
    """
    if sigma_spatial <= 0 or sigma_range <= 0:
        raise ParameterError(
            f"bilateral sigmas must be positive, got spatial={sigma_spatial} range={sigma_range}"
        )
    radius = math.ceil(3.0 * sigma_spatial)
    inv2ss = 1.0 / (2.0 * sigma_spatial * sigma_spatial)
    inv2sr = 1.0 / (2.0 * sigma_range * sigma_range)
    h, w = img.planes.shape[1:]
    out = np.empty_like(img.planes)
    for ch in range(3):
        plane = img.planes[ch]
        num = np.zeros((h, w), dtype=np.float64)
        den = np.zeros((h, w), dtype=np.float64)
        for dy in range(-radius, radius + 1):
            for dx in range(-radius, radius + 1):
                ws = math.exp(-(dy * dy + dx * dx) * inv2ss)
                y0, y1 = max(0, -dy), h - max(0, dy)
                x0, x1 = max(0, -dx), w - max(0, dx)
                center = plane[y0:y1, x0:x1]
                neighbor = plane[y0 + dy : y1 + dy, x0 + dx : x1 + dx]
                diff = neighbor - center
                wgt = ws * np.exp(-(diff * diff) * inv2sr)
                num[y0:y1, x0:x1] += wgt * neighbor
                den[y0:y1, x0:x1] += wgt
        out[ch] = num / den
    return LinearRgbImage(np.clip(out, 0.0, 1.0))


def estimate_illuminant_grayworld(img: LinearRgbImage) -> Illuminant:
    """Gray-world estimate: per-channel means, L2-normalized."""
    if img.planes.size == 0:
        raise DegenerateInputError("cannot estimate illuminant from an empty image")
    means = img.planes.mean(axis=(1, 2))
    if np.any(means <= 0.0):
        raise DegenerateInputError(f"gray-world needs positive channel means, got {tuple(means)}")
    return Illuminant.from_vector(means)


def estimate_illuminant_whitepatch(img: LinearRgbImage, rect: PatchRect) -> Illuminant:
    """Mean RGB over a neutral patch, L2-normalized. Ground truth for training."""
    rect.require_within(img.width, img.height)
    region = img.planes[:, rect.y : rect.y + rect.h, rect.x : rect.x + rect.w]
    means = region.mean(axis=(1, 2))
    if np.any(means <= 0.0):
        raise DegenerateInputError(f"white patch has degenerate mean {tuple(means)}")
    return Illuminant.from_vector(means)


def apply_white_balance(img: LinearRgbImage, illum: Illuminant) -> LinearRgbImage:
    """Scale channels by green-anchored gains g/c; green is unchanged."""
    v = illum.as_array()
    if np.any(v <= 0.0):
        raise ParameterError("illuminant components must be positive")
    gains = v[1] / v
    out = img.planes * gains[:, None, None]
    return LinearRgbImage(np.clip(out, 0.0, 1.0))


def apply_ccm(img: LinearRgbImage, ccm: ColorMatrix) -> XyzImage:
    """Per-pixel matrix-vector product into CIE-XYZ; negatives clipped to 0."""
    out = np.einsum("ij,jhw->ihw", ccm.values, img.planes)
    return XyzImage(np.maximum(out, 0.0))


def grayscale(img: XyzImage) -> GrayImage:
    """The Y plane, which is CIE luminance by construction."""
    return GrayImage(img.planes[1].copy())


def histogram_256(img: GrayImage) -> HistogramVector:
    """Hard 256-bin histogram: bin index min(floor(v * 256), 255), mass-normalized."""
    if img.plane.size == 0:
        raise DegenerateInputError("cannot histogram an empty image")
    v = np.clip(img.plane, 0.0, 1.0)
    idx = np.minimum((v * 256.0).astype(np.int64), 255)
    counts = np.bincount(idx.ravel(), minlength=256).astype(np.float64)
    return HistogramVector(counts / v.size)


def recolorize_xyz(img: XyzImage, target_luma: np.ndarray) -> XyzImage:
    """Scale every channel by target / Y, preserving chromaticity.

    Pixels with Y <= eps have no usable chromaticity and go to zero.
    """
    y = img.planes[1]
    scale = np.where(y > EPS, target_luma / np.maximum(y, EPS), 0.0)
    return XyzImage(np.maximum(img.planes * scale[None, :, :], 0.0))


def tone_baseline_global(img: XyzImage, gamma: float) -> XyzImage:
    """Global gamma on luminance: Y -> Y^(1/gamma), chromaticity preserved."""
    if gamma <= 0:
        raise ParameterError(f"gamma must be positive, got {gamma}")
    y = img.planes[1]
    return recolorize_xyz(img, np.power(y, 1.0 / gamma))


def xyz_to_linear_srgb(img: XyzImage) -> LinearRgbImage:
    """Standard D65 XYZ -> linear sRGB matrix, clipped to [0, 1]."""
    out = np.einsum("ij,jhw->ihw", XYZ_TO_SRGB, img.planes)
    return LinearRgbImage(np.clip(out, 0.0, 1.0))


def srgb_transfer(v: np.ndarray) -> np.ndarray:
    """Linear -> display sRGB transfer (knee at 0.0031308)."""
    v = np.asarray(v, dtype=np.float64)
    return np.where(v <= 0.0031308, 12.92 * v, 1.055 * np.power(np.maximum(v, 0.0), 1.0 / 2.4) - 0.055)


def srgb_inverse_transfer(e: np.ndarray) -> np.ndarray:
    """Display sRGB -> linear transfer."""
    e = np.asarray(e, dtype=np.float64)
    return np.where(e <= 0.04045, e / 12.92, np.power((e + 0.055) / 1.055, 2.4))


def _round_half_up(x: np.ndarray, peak: int) -> np.ndarray:
    return np.clip(np.floor(x * peak + 0.5), 0, peak)


def srgb_encode(img: LinearRgbImage) -> EncodedImage:
    """sRGB transfer then round-half-up to 8 bits."""
    e = srgb_transfer(img.planes)
    return EncodedImage(_round_half_up(e, 255).astype(np.uint8))


def srgb_encode_16bit(img: LinearRgbImage) -> np.ndarray:
    """sRGB transfer at 16-bit depth, for the intermediate PNG."""
    e = srgb_transfer(img.planes)
    return _round_half_up(e, 65535).astype(np.uint16)


def srgb_decode_u8(planes: np.ndarray) -> LinearRgbImage:
    """8-bit display RGB back to linear [0, 1]."""
    e = np.asarray(planes, dtype=np.float64) / 255.0
    return LinearRgbImage(np.clip(srgb_inverse_transfer(e), 0.0, 1.0))


def normalize_raw(adc: np.ndarray, black_level: int, white_level: int) -> np.ndarray:
    """(raw - black) / (white - black), clipped to [0, 1]."""
    if white_level <= black_level:
        raise ParameterError("white_level must exceed black_level")
    span = float(white_level - black_level)
    return np.clip((adc.astype(np.float64) - black_level) / span, 0.0, 1.0)
