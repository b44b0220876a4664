"""Evaluation metrics: PSNR plus analytic parameter and FLOP counters.

The counters are pure functions of architecture config and input dims.
FLOP conventions match the per-layer cost tables in docs/architecture.md:
conv and fc cost 2 per multiply-accumulate with bias excluded, pointwise
activations and scalings cost 1 per element, and data movement (pooling,
upsampling, concatenation, padding) is free.
"""
from __future__ import annotations

import math

import numpy as np

from ..cbunet import render
from ..errors import ShapeError
from ..imaging import EncodedImage


def psnr(a: EncodedImage, b: EncodedImage) -> float:
    """10*log10(1/MSE) on [0,1]-scaled samples; +inf for identical images."""
    if a.planes.shape != b.planes.shape:
        raise ShapeError(f"psnr dims differ: {a.planes.shape} vs {b.planes.shape}")
    x = a.planes.astype(np.float64) / 255.0
    y = b.planes.astype(np.float64) / 255.0
    mse = float(np.mean((x - y) ** 2))
    if mse == 0.0:
        return math.inf
    return -10.0 * math.log10(mse)


def _net_list(nets):
    return list(nets) if isinstance(nets, (list, tuple)) else [nets]


def count_params(nets) -> int:
    return sum(p.data.size for net in _net_list(nets) for p in net.params().values())


def layer_rows(nets, input_dims):
    h, w = input_dims
    rows = []
    for net in _net_list(nets):
        rows.extend(net.describe(h, w))
    return rows


def count_flops(nets, input_dims) -> int:
    return sum(r.flops for r in layer_rows(nets, input_dims))


def flops_breakdown(nets, input_dims) -> dict[str, int]:
    out = {"conv": 0, "fc": 0, "elementwise": 0}
    for r in layer_rows(nets, input_dims):
        out[r.kind] += r.flops
    out["total"] = sum(out.values())
    return out


def evaluate_pairs(pairs, stage1, stage2) -> list[tuple[str, float]]:
    """Render each pair and score against its target; returns (id, dB) rows."""
    rows = []
    for pair in pairs:
        result = render(pair.raw, None, stage1, stage2)
        rows.append((pair.image_id, psnr(result.display, EncodedImage(pair.target))))
    return rows
