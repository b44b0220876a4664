"""Differentiable operations and the layer classes built on them.

Every function takes and returns :class:`Tensor`; backward closures
accumulate into parents that require gradients. Convolution uses an
im2col/col2im pair; pooling resolves ties to the first maximum in
row-major window order.
"""
from __future__ import annotations

import math

import numpy as np

from ..errors import ShapeError
from .tensor import Tensor, make_node


def as_tensor(value, like: Tensor | None = None) -> Tensor:
    if isinstance(value, Tensor):
        return value
    dtype = like.data.dtype if like is not None else np.float32
    return Tensor(value, dtype=dtype)


def _acc(parent: Tensor, grad: np.ndarray) -> None:
    if parent.requires_grad:
        parent.accumulate_grad(grad)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to the parent's shape."""
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


# elementwise arithmetic


def add(a: Tensor, b: Tensor) -> Tensor:
    out = a.data + b.data

    def backward(g):
        _acc(a, _unbroadcast(g, a.data.shape))
        _acc(b, _unbroadcast(g, b.data.shape))

    return make_node(out, (a, b), backward)


def sub(a: Tensor, b: Tensor) -> Tensor:
    out = a.data - b.data

    def backward(g):
        _acc(a, _unbroadcast(g, a.data.shape))
        _acc(b, _unbroadcast(-g, b.data.shape))

    return make_node(out, (a, b), backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    out = a.data * b.data

    def backward(g):
        _acc(a, _unbroadcast(g * b.data, a.data.shape))
        _acc(b, _unbroadcast(g * a.data, b.data.shape))

    return make_node(out, (a, b), backward)


def div(a: Tensor, b: Tensor) -> Tensor:
    out = a.data / b.data

    def backward(g):
        _acc(a, _unbroadcast(g / b.data, a.data.shape))
        _acc(b, _unbroadcast(-g * a.data / (b.data * b.data), b.data.shape))

    return make_node(out, (a, b), backward)


def neg(a: Tensor) -> Tensor:
    def backward(g):
        _acc(a, -g)

    return make_node(-a.data, (a,), backward)


def abs_(a: Tensor) -> Tensor:
    sign = np.sign(a.data)

    def backward(g):
        _acc(a, g * sign)

    return make_node(np.abs(a.data), (a,), backward)


def sqrt(a: Tensor) -> Tensor:
    root = np.sqrt(a.data)

    def backward(g):
        _acc(a, g * 0.5 / root)

    return make_node(root, (a,), backward)


def cast(a: Tensor, dtype) -> Tensor:
    """Identity with a dtype change; the gradient is cast back."""

    def backward(g):
        _acc(a, g.astype(a.data.dtype))

    return make_node(a.data.astype(dtype), (a,), backward)


def clamp(a: Tensor, lo: float, hi: float) -> Tensor:
    out = np.clip(a.data, lo, hi)
    inside = (a.data >= lo) & (a.data <= hi)

    def backward(g):
        _acc(a, g * inside)

    return make_node(out, (a,), backward)


# reductions and shape ops


def sum_(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    out = a.data.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        gg = g
        if axis is not None and not keepdims:
            gg = np.expand_dims(gg, axis)
        _acc(a, np.broadcast_to(gg, a.data.shape).copy())

    return make_node(out, (a,), backward)


def mean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    out = a.data.mean(axis=axis, keepdims=keepdims)
    count = a.data.size / out.size

    def backward(g):
        gg = g
        if axis is not None and not keepdims:
            gg = np.expand_dims(gg, axis)
        _acc(a, np.broadcast_to(gg, a.data.shape) / count)

    return make_node(out, (a,), backward)


def reshape(a: Tensor, shape) -> Tensor:
    def backward(g):
        _acc(a, g.reshape(a.data.shape))

    return make_node(a.data.reshape(shape), (a,), backward)


def concat(parts: list[Tensor], axis: int = 1) -> Tensor:
    out = np.concatenate([p.data for p in parts], axis=axis)
    sizes = [p.data.shape[axis] for p in parts]
    splits = np.cumsum(sizes)[:-1]

    def backward(g):
        for p, piece in zip(parts, np.split(g, splits, axis=axis)):
            _acc(p, piece)

    return make_node(out, tuple(parts), backward)


def narrow(a: Tensor, axis: int, start: int, length: int) -> Tensor:
    index = [slice(None)] * a.data.ndim
    index[axis] = slice(start, start + length)
    index = tuple(index)

    def backward(g):
        full = np.zeros_like(a.data)
        full[index] = g
        _acc(a, full)

    return make_node(a.data[index].copy(), (a,), backward)


# activations


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0

    def backward(g):
        _acc(a, g * mask)

    return make_node(a.data * mask, (a,), backward)


def prelu(a: Tensor, slope: float = 0.2) -> Tensor:
    """Rectifier with a fixed 0.2 negative slope."""
    factor = np.where(a.data >= 0, 1.0, slope).astype(a.data.dtype)

    def backward(g):
        _acc(a, g * factor)

    return make_node(a.data * factor, (a,), backward)


def sigmoid(a: Tensor) -> Tensor:
    # evaluate on the stable side of the exponential for each sign
    x = a.data
    out = np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))), np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))
    out = out.astype(x.dtype)

    def backward(g):
        _acc(a, g * out * (1.0 - out))

    return make_node(out, (a,), backward)


def softplus(a: Tensor) -> Tensor:
    x = a.data
    out = (np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))).astype(x.dtype)
    sig = 1.0 / (1.0 + np.exp(-np.clip(x, -80, 80)))

    def backward(g):
        _acc(a, g * sig)

    return make_node(out, (a,), backward)


# linear algebra


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise ShapeError(f"matmul expects (n,k)x(k,m), got {a.data.shape} x {b.data.shape}")
    out = a.data @ b.data

    def backward(g):
        _acc(a, g @ b.data.T)
        _acc(b, a.data.T @ g)

    return make_node(out, (a, b), backward)


def fully_connected(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """x: (n, f), weight: (f, o), bias: (o,)."""
    if x.data.ndim != 2:
        raise ShapeError(f"fully_connected expects a (n, features) input, got {x.data.shape}")
    if weight.data.shape[0] != x.data.shape[1] or bias.data.shape != (weight.data.shape[1],):
        raise ShapeError(
            f"fully_connected shapes disagree: x {x.data.shape}, w {weight.data.shape}, b {bias.data.shape}"
        )
    out = x.data @ weight.data + bias.data

    def backward(g):
        _acc(x, g @ weight.data.T)
        _acc(weight, x.data.T @ g)
        _acc(bias, g.sum(axis=0))

    return make_node(out, (x, weight, bias), backward)


# convolution


def _im2col(x: np.ndarray, kh: int, kw: int, stride: int, pad: int):
    n, c, h, w = x.shape
    ho = (h + 2 * pad - kh) // stride + 1
    wo = (w + 2 * pad - kw) // stride + 1
    if ho <= 0 or wo <= 0:
        raise ShapeError(f"kernel {kh}x{kw} does not fit input {h}x{w} with pad {pad}")
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x
    cols = np.empty((n, c, kh, kw, ho, wo), dtype=x.dtype)
    for ky in range(kh):
        for kx in range(kw):
            cols[:, :, ky, kx] = xp[:, :, ky : ky + stride * ho : stride, kx : kx + stride * wo : stride]
    return cols.reshape(n, c * kh * kw, ho * wo), ho, wo


def _col2im(dcols: np.ndarray, xshape, kh: int, kw: int, stride: int, pad: int, ho: int, wo: int):
    n, c, h, w = xshape
    dxp = np.zeros((n, c, h + 2 * pad, w + 2 * pad), dtype=dcols.dtype)
    dc = dcols.reshape(n, c, kh, kw, ho, wo)
    for ky in range(kh):
        for kx in range(kw):
            dxp[:, :, ky : ky + stride * ho : stride, kx : kx + stride * wo : stride] += dc[:, :, ky, kx]
    if pad:
        return dxp[:, :, pad : pad + h, pad : pad + w]
    return dxp


def conv2d(x: Tensor, weight: Tensor, bias: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
    """Cross-correlation. x: (n,cin,h,w), weight: (cout,cin,kh,kw), bias: (cout,)."""
    if x.data.ndim != 4 or weight.data.ndim != 4:
        raise ShapeError(f"conv2d expects 4-D tensors, got {x.data.shape} and {weight.data.shape}")
    cout, cin, kh, kw = weight.data.shape
    if x.data.shape[1] != cin:
        raise ShapeError(f"conv2d channel mismatch: input has {x.data.shape[1]}, kernel wants {cin}")
    if bias.data.shape != (cout,):
        raise ShapeError(f"conv2d bias must be ({cout},), got {bias.data.shape}")
    n = x.data.shape[0]
    cols, ho, wo = _im2col(x.data, kh, kw, stride, padding)
    wf = weight.data.reshape(cout, cin * kh * kw)
    out = np.einsum("of,nfp->nop", wf, cols).reshape(n, cout, ho, wo) + bias.data[None, :, None, None]

    def backward(g):
        gf = g.reshape(n, cout, ho * wo)
        _acc(bias, g.sum(axis=(0, 2, 3)))
        _acc(weight, np.einsum("nop,nfp->of", gf, cols).reshape(weight.data.shape))
        if x.requires_grad:
            dcols = np.einsum("of,nop->nfp", wf, gf)
            _acc(x, _col2im(dcols, x.data.shape, kh, kw, stride, padding, ho, wo))

    return make_node(out, (x, weight, bias), backward)


# pooling and resampling


def max_pool2(x: Tensor) -> Tensor:
    """2x2 stride-2 max; ties go to the first window position."""
    n, c, h, w = x.data.shape
    if h % 2 or w % 2:
        raise ShapeError(f"max_pool2 needs even spatial dims, got {h}x{w}")
    windows = x.data.reshape(n, c, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(
        n, c, h // 2, w // 2, 4
    )
    pick = windows.argmax(axis=-1)
    out = np.take_along_axis(windows, pick[..., None], axis=-1)[..., 0]

    def backward(g):
        dwin = np.zeros_like(windows)
        np.put_along_axis(dwin, pick[..., None], g[..., None], axis=-1)
        dx = dwin.reshape(n, c, h // 2, w // 2, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h, w)
        _acc(x, dx)

    return make_node(out, (x,), backward)


def upsample2(x: Tensor) -> Tensor:
    """Nearest-neighbor x2."""
    out = np.repeat(np.repeat(x.data, 2, axis=2), 2, axis=3)

    def backward(g):
        n, c, h2, w2 = g.shape
        _acc(x, g.reshape(n, c, h2 // 2, 2, w2 // 2, 2).sum(axis=(3, 5)))

    return make_node(out, (x,), backward)


def global_avg_pool(x: Tensor) -> Tensor:
    """(n,c,h,w) -> (n,c)."""
    if x.data.ndim != 4:
        raise ShapeError(f"global_avg_pool expects a 4-D tensor, got {x.data.shape}")
    n, c, h, w = x.data.shape
    out = x.data.mean(axis=(2, 3))

    def backward(g):
        _acc(x, np.broadcast_to(g[:, :, None, None], x.data.shape) / (h * w))

    return make_node(out, (x,), backward)


def l2_normalize(x: Tensor, axis: int = -1, eps: float = 1e-12) -> Tensor:
    norm = np.sqrt((x.data * x.data).sum(axis=axis, keepdims=True))
    norm = np.maximum(norm, eps)
    out = x.data / norm

    def backward(g):
        # d(x/|x|) = (g - (g . out) out) / |x|
        dot = (g * out).sum(axis=axis, keepdims=True)
        _acc(x, (g - dot * out) / norm)

    return make_node(out, (x,), backward)


def channel_attention(features: Tensor, fc1_w: Tensor, fc1_b: Tensor, fc2_w: Tensor, fc2_b: Tensor) -> Tensor:
    """Scale each channel by sigmoid(fc2(relu(fc1(gap(features)))))."""
    if fc1_w.data.shape[0] != features.data.shape[1]:
        raise ShapeError(
            f"channel_attention fc1 expects {features.data.shape[1]} inputs, got {fc1_w.data.shape[0]}"
        )
    pooled = global_avg_pool(features)
    weights = sigmoid(fully_connected(relu(fully_connected(pooled, fc1_w, fc1_b)), fc2_w, fc2_b))
    n, c = weights.data.shape
    return mul(features, reshape(weights, (n, c, 1, 1)))


# layers


class Conv2d:
    """3x3 (or 1x1) convolution layer with He-uniform init and zero bias."""

    def __init__(self, cin: int, cout: int, kernel: int = 3, stride: int = 1, padding: int | None = None,
                 rng: np.random.Generator | None = None):
        rng = rng or np.random.default_rng(0)
        fan_in = cin * kernel * kernel
        bound = math.sqrt(6.0 / fan_in)
        self.stride = stride
        self.padding = kernel // 2 if padding is None else padding
        self.w = Tensor(rng.uniform(-bound, bound, size=(cout, cin, kernel, kernel)), requires_grad=True)
        self.b = Tensor(np.zeros(cout), requires_grad=True)

    def __call__(self, x: Tensor) -> Tensor:
        return conv2d(x, self.w, self.b, self.stride, self.padding)

    def params(self, prefix: str) -> dict[str, Tensor]:
        return {f"{prefix}.w": self.w, f"{prefix}.b": self.b}


class Linear:
    """Fully connected layer with He-uniform init and zero bias."""

    def __init__(self, fin: int, fout: int, rng: np.random.Generator | None = None):
        rng = rng or np.random.default_rng(0)
        bound = math.sqrt(6.0 / fin)
        self.w = Tensor(rng.uniform(-bound, bound, size=(fin, fout)), requires_grad=True)
        self.b = Tensor(np.zeros(fout), requires_grad=True)

    def __call__(self, x: Tensor) -> Tensor:
        return fully_connected(x, self.w, self.b)

    def params(self, prefix: str) -> dict[str, Tensor]:
        return {f"{prefix}.w": self.w, f"{prefix}.b": self.b}
