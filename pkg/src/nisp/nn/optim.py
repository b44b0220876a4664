"""Adam optimizer over a named parameter collection."""
from __future__ import annotations

import numpy as np

from ..errors import StateError
from .tensor import Tensor


class ParamStore:
    """Named parameters plus per-parameter Adam moment buffers."""

    def __init__(self, params: dict[str, Tensor]):
        self.params = dict(params)
        self.m = {k: np.zeros_like(t.data) for k, t in self.params.items()}
        self.v = {k: np.zeros_like(t.data) for k, t in self.params.items()}
        self.t = 0

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None

    def __len__(self) -> int:
        return len(self.params)


def adam_step(
    store: ParamStore,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """One bias-corrected Adam update in place; gradients must be populated."""
    for name, p in store.params.items():
        if p.grad is None:
            raise StateError(f"parameter {name!r} has no gradient; run backward first")
    store.t += 1
    t = store.t
    for name, p in store.params.items():
        g = p.grad
        m = store.m[name]
        v = store.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        m_hat = m / (1.0 - beta1**t)
        v_hat = v / (1.0 - beta2**t)
        p.data -= (lr * m_hat / (np.sqrt(v_hat) + eps)).astype(p.data.dtype)
