"""Central finite-difference gradient checker.

Runs the function once under a tape for analytic gradients, then
perturbs every input element by +-h in float64. Callers choose inputs
away from non-smooth points of the op under test.
"""
from __future__ import annotations

import numpy as np

from nisp.nn import Tape, Tensor


def gradcheck(fn, inputs: list[Tensor], h: float = 1e-3, rtol: float = 1e-3, atol: float = 1e-6):
    for t in inputs:
        assert t.data.dtype == np.float64, "gradcheck needs float64 tensors"
        t.grad = None
    with Tape() as tape:
        out = fn(*inputs)
        assert out.data.size == 1, "gradcheck target must be scalar"
        tape.backward(out)
    for idx, t in enumerate(inputs):
        if not t.requires_grad:
            continue
        assert t.grad is not None, f"input {idx} received no gradient"
        analytic = t.grad.copy()
        flat = t.data.ravel()
        numeric = np.zeros(flat.size, dtype=np.float64)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            fp = float(fn(*inputs).data)
            flat[i] = orig - h
            fm = float(fn(*inputs).data)
            flat[i] = orig
            numeric[i] = (fp - fm) / (2.0 * h)
        numeric = numeric.reshape(t.data.shape)
        scale = np.maximum(np.abs(numeric), np.abs(analytic))
        err = np.abs(numeric - analytic)
        bad = err > atol + rtol * scale
        assert not bad.any(), (
            f"input {idx}: {bad.sum()} gradient mismatches, worst "
            f"analytic={analytic[bad].ravel()[0]:.6g} numeric={numeric[bad].ravel()[0]:.6g}"
        )


def leaf(arr, requires_grad: bool = True) -> Tensor:
    return Tensor(np.asarray(arr), requires_grad=requires_grad, dtype=np.float64)
