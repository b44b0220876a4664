"""Reverse-mode autodiff over numpy arrays.

A Tensor wraps an ndarray; operations in :mod:`nisp.nn.ops` build results
with :func:`make_node`, which records them on the active Tape. Calling
``tape.backward(loss)`` walks the recorded nodes in reverse creation
order, which is a reverse topological order because every parent is
created before its children, and visits each node exactly once.

Tensors default to float32. Gradient checks construct float64 tensors;
all ops preserve the input dtype.
"""
from __future__ import annotations

import numpy as np

from ..errors import StateError

_ACTIVE_TAPES: list["Tape"] = []


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        arr = np.asarray(data)
        want = np.float32 if dtype is None else dtype
        if arr.dtype != want:
            arr = arr.astype(want)
        self.data = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data)

    def numpy(self) -> np.ndarray:
        return self.data

    def zero_grad(self) -> None:
        self.grad = None

    def accumulate_grad(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = g.astype(self.data.dtype, copy=True)
        else:
            self.grad += g

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}, requires_grad={self.requires_grad})"

    # operator sugar; the implementations live in ops.py and are attached
    # at import time to avoid a circular import
    def __add__(self, other):
        from . import ops

        return ops.add(self, ops.as_tensor(other, like=self))

    def __radd__(self, other):
        from . import ops

        return ops.add(ops.as_tensor(other, like=self), self)

    def __sub__(self, other):
        from . import ops

        return ops.sub(self, ops.as_tensor(other, like=self))

    def __rsub__(self, other):
        from . import ops

        return ops.sub(ops.as_tensor(other, like=self), self)

    def __mul__(self, other):
        from . import ops

        return ops.mul(self, ops.as_tensor(other, like=self))

    def __rmul__(self, other):
        from . import ops

        return ops.mul(ops.as_tensor(other, like=self), self)

    def __truediv__(self, other):
        from . import ops

        return ops.div(self, ops.as_tensor(other, like=self))

    def __rtruediv__(self, other):
        from . import ops

        return ops.div(ops.as_tensor(other, like=self), self)

    def __neg__(self):
        from . import ops

        return ops.neg(self)


class Tape:
    """Ordered record of result nodes for one forward pass."""

    def __init__(self):
        self._nodes: list[Tensor] = []
        self._closed = False

    def __enter__(self) -> "Tape":
        _ACTIVE_TAPES.append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        _ACTIVE_TAPES.pop()
        return False

    def record(self, node: Tensor) -> None:
        self._nodes.append(node)

    def __len__(self) -> int:
        return len(self._nodes)

    def backward(self, root: Tensor) -> None:
        """Seed d(root)/d(root) = 1 and propagate to every reachable node."""
        if self._closed:
            raise StateError("tape has already been unwound")
        if root.data.size != 1:
            raise StateError(f"backward root must be scalar, got shape {root.shape}")
        self._closed = True
        root.accumulate_grad(np.ones_like(root.data))
        for node in reversed(self._nodes):
            if node.grad is None or node._backward is None:
                continue
            node._backward(node.grad)
            # free intermediate grads; parameters are leaves and keep theirs
            if node._parents:
                node.grad = None


def current_tape() -> Tape | None:
    return _ACTIVE_TAPES[-1] if _ACTIVE_TAPES else None


def make_node(data: np.ndarray, parents: tuple[Tensor, ...], backward) -> Tensor:
    """Wrap an op result, recording it for backprop when a tape is active."""
    out = Tensor(data, dtype=data.dtype)
    tape = current_tape()
    if tape is not None and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward
        tape.record(out)
    return out
