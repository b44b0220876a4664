"""Full render path: classical imaging ops composed with the two nets.

The networks require spatial dims divisible by 2^depth, so every entry
point reflect-pads on the bottom and right edges and crops the result
back. Inference runs without a gradient tape and is thread-safe for
read-only weights.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, DimensionError, ParameterError
from ..imaging import (
    EPS,
    BayerImage,
    CameraMeta,
    ColorMatrix,
    EncodedImage,
    GrayImage,
    HistogramVector,
    Illuminant,
    LinearRgbImage,
    XyzImage,
    apply_ccm,
    apply_white_balance,
    demosaic_bilinear,
    grayscale,
    histogram_256,
    srgb_encode,
    srgb_encode_16bit,
    xyz_to_linear_srgb,
)
from ..nn import Tensor
from .model import Stage1Net, Stage2Net


def pad_to_multiple(planes: np.ndarray, multiple: int) -> np.ndarray:
    """Reflect-pad the trailing two axes up to the next multiple."""
    h, w = planes.shape[-2:]
    ph = (-h) % multiple
    pw = (-w) % multiple
    if not ph and not pw:
        return planes
    if ph >= h or pw >= w:
        raise DimensionError(
            f"image {w}x{h} is too small to reflect-pad to a multiple of {multiple}"
        )
    pad = [(0, 0)] * (planes.ndim - 2) + [(0, ph), (0, pw)]
    return np.pad(planes, pad, mode="reflect")


def stage1_estimate(img: LinearRgbImage, net: Stage1Net) -> Illuminant:
    """Predicted scene illuminant for an uncorrected linear RGB frame."""
    planes = pad_to_multiple(img.planes, net.config.multiple)
    x = Tensor(planes[np.newaxis])
    vec = net.forward(x).data[0]
    return Illuminant.from_vector(np.asarray(vec, dtype=np.float64))


def stage1_apply(img: LinearRgbImage, illum: Illuminant, ccm: ColorMatrix) -> XyzImage:
    """White balance against the illuminant, then the color matrix."""
    return apply_ccm(apply_white_balance(img, illum), ccm)


def stage2_brightness(gray: GrayImage, hist: HistogramVector, net: Stage2Net) -> GrayImage:
    """Predicted brightness map, same dims as the input grayscale."""
    h, w = gray.plane.shape
    plane = pad_to_multiple(gray.plane, net.config.multiple)
    x = Tensor(plane[np.newaxis, np.newaxis])
    hv = Tensor(hist.values[np.newaxis])
    out = net.forward(x, hv).data[0, 0, :h, :w]
    return GrayImage(np.asarray(out, dtype=np.float64))


def recolorize(xyz: XyzImage, predicted: GrayImage) -> XyzImage:
    """Scale each pixel by predicted / (Y + eps), preserving chromaticity.

    The smooth guard keeps the op differentiable-shaped and free of NaN/Inf
    even where Y is zero; with predicted equal to Y it is the identity up
    to eps-scale.
    """
    if predicted.plane.shape != xyz.planes.shape[1:]:
        raise DimensionError(
            f"brightness map {predicted.plane.shape} does not match image planes {xyz.planes.shape[1:]}"
        )
    scale = predicted.plane / (xyz.planes[1] + EPS)
    return XyzImage(xyz.planes * scale[np.newaxis])


@dataclass(frozen=True)
class RenderResult:
    """Display output plus the wide intermediate and stage-1 byproducts."""

    display: EncodedImage
    intermediate: np.ndarray  # uint16 (3,H,W), stage-1 output before tone adjustment
    illuminant: Illuminant
    brightness: GrayImage


def render(
    raw: BayerImage,
    meta: CameraMeta | None,
    stage1: Stage1Net,
    stage2: Stage2Net,
) -> RenderResult:
    """Mosaic to display-referred 8-bit RGB through both stages.

    Deterministic: the same mosaic, metadata, and weights always produce
    byte-identical outputs.
    """
    meta = meta if meta is not None else raw.meta
    if meta is None:
        raise ParameterError("render needs CameraMeta, none attached to the mosaic")
    if stage1.config != stage2.config:
        raise ConfigError(
            f"stage configs differ: {stage1.config.to_json()} vs {stage2.config.to_json()}"
        )
    rgb = demosaic_bilinear(raw)
    illum = stage1_estimate(rgb, stage1)
    xyz = stage1_apply(rgb, illum, meta.ccm)
    gray = grayscale(xyz)
    hist = histogram_256(gray)
    predicted = stage2_brightness(gray, hist, stage2)
    toned = recolorize(xyz, predicted)
    display = srgb_encode(xyz_to_linear_srgb(toned))
    intermediate = srgb_encode_16bit(xyz_to_linear_srgb(xyz))
    return RenderResult(display, intermediate, illum, predicted)
