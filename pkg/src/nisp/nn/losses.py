"""Training losses: angular error, L1, and the soft-histogram distance.

The soft histogram follows the triangular-kernel construction with 256
bins over [0,1], centers c_k = (k + 0.5)/256 and bandwidth 1/256. Inputs
are clamped to [c_0, c_255] so the kernels partition unity and the two
clamp endpoints carry whole unit masses.
"""
from __future__ import annotations

import math

import numpy as np

from ..errors import DegenerateInputError, ShapeError
from .ops import _acc, abs_, cast, l2_normalize, mean, mul, sum_
from .tensor import Tensor, make_node

BIN_COUNT = 256
BIN_CENTERS = (np.arange(BIN_COUNT, dtype=np.float64) + 0.5) / BIN_COUNT
BANDWIDTH = 1.0 / BIN_COUNT


def soft_histogram(img: Tensor) -> Tensor:
    """Triangular-kernel histogram over all pixels, mass-normalized."""
    if img.data.size == 0:
        raise DegenerateInputError("cannot histogram an empty tensor")
    dtype = img.data.dtype
    raw = img.data.ravel().astype(np.float64)
    lo, hi = BIN_CENTERS[0], BIN_CENTERS[-1]
    passthrough = (raw >= lo) & (raw <= hi)
    v = np.clip(raw, lo, hi)
    diff = v[:, None] - BIN_CENTERS[None, :]
    out = np.maximum(0.0, 1.0 - np.abs(diff) / BANDWIDTH).mean(axis=0)
    count = raw.size

    def backward(g):
        slope = np.where(np.abs(diff) < BANDWIDTH, -np.sign(diff) / BANDWIDTH, 0.0)
        dv = (slope * g[None, :].astype(np.float64)).sum(axis=1) / count
        dv *= passthrough
        _acc(img, dv.reshape(img.data.shape).astype(dtype))

    return make_node(out.astype(dtype), (img,), backward)


def l1_loss(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape != b.data.shape:
        raise ShapeError(f"l1_loss shapes differ: {a.data.shape} vs {b.data.shape}")
    return mean(abs_(a - b))


def hist_loss(a: Tensor, b: Tensor) -> Tensor:
    """L1 distance between soft histograms, summed over the 256 bins."""
    return sum_(abs_(soft_histogram(a) - soft_histogram(b)))


def _arccos_degrees(dot: Tensor) -> Tensor:
    d = dot.data
    out = np.degrees(np.arccos(np.clip(d, -1.0, 1.0))).astype(d.dtype)

    def backward(g):
        inside = np.abs(d) < 1.0 - 1e-7
        dc = np.clip(d, -(1.0 - 1e-7), 1.0 - 1e-7)
        _acc(dot, np.where(inside, -g * (180.0 / math.pi) / np.sqrt(1.0 - dc * dc), 0.0))

    return make_node(out, (dot,), backward)


def angular_loss(pred: Tensor, truth: Tensor) -> Tensor:
    """Mean angle in degrees between RGB direction vectors; shape (3,) or (n,3)."""
    if pred.data.shape != truth.data.shape or pred.data.shape[-1] != 3:
        raise ShapeError(
            f"angular_loss expects matching (..,3) shapes, got {pred.data.shape} vs {truth.data.shape}"
        )
    for name, t in (("pred", pred), ("truth", truth)):
        norms = np.linalg.norm(t.data, axis=-1)
        if np.any(norms <= 0.0):
            raise DegenerateInputError(f"angular_loss {name} contains a zero vector")
    # arccos near 1 amplifies one float32 ulp into ~0.03 degrees, so the
    # angle is always computed in float64
    p64 = cast(pred, np.float64)
    t64 = cast(truth, np.float64)
    dot = sum_(mul(l2_normalize(p64, axis=-1), l2_normalize(t64, axis=-1)), axis=-1)
    angles = _arccos_degrees(dot)
    if angles.data.ndim == 0:
        return angles
    return mean(angles)


def total_loss(angular: Tensor, l1: Tensor, hist: Tensor) -> Tensor:
    """Unit-weight sum of the three components."""
    return angular + l1 + hist


def angular_error_degrees(a: np.ndarray, b: np.ndarray) -> float:
    """Plain numpy evaluation metric, same formula as the loss."""
    a = np.asarray(a, dtype=np.float64).reshape(3)
    b = np.asarray(b, dtype=np.float64).reshape(3)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na <= 0.0 or nb <= 0.0:
        raise DegenerateInputError("cannot measure the angle of a zero vector")
    dot = float(np.clip(np.dot(a / na, b / nb), -1.0, 1.0))
    return math.degrees(math.acos(dot))
