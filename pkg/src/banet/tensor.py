"""Dense tensors with reverse-mode automatic differentiation.

A ``Tensor`` wraps a contiguous numpy array plus an optional gradient of the
same shape.  Operations record their inputs and a local gradient rule; calling
:meth:`Tensor.backward` on a scalar walks the graph in reverse topological
order and accumulates gradients into every tensor that requires them.
Gradients from multiple uses of the same value add up.

Values are single precision by default; pass float64 data (or ``dtype``) to
run the same graph in double precision, which is what the finite-difference
checker does.
"""

from __future__ import annotations

import numpy as np

from .errors import UsageError

_grad_enabled = True


class no_grad:
    """Context manager that disables graph recording (inference mode)."""

    def __enter__(self):
        global _grad_enabled
        self._prev = _grad_enabled
        _grad_enabled = False
        return self

    def __exit__(self, *exc):
        global _grad_enabled
        _grad_enabled = self._prev
        return False


def grad_enabled() -> bool:
    return _grad_enabled


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum `grad` down to `shape`, undoing numpy broadcasting."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def accumulate_grad(t: "Tensor", grad: np.ndarray) -> None:
    """Add `grad` into ``t.grad``, creating it on first use."""
    if not t.requires_grad:
        return
    grad = _unbroadcast(np.asarray(grad), t.data.shape)
    if t.grad is None:
        t.grad = grad.astype(t.data.dtype, copy=True)
    else:
        t.grad += grad


class Tensor:
    """N-dimensional array with an optional gradient slot.

    4-D values follow the (batch, channel, height, width) layout.  The shape
    is fixed at construction; ``data`` may be updated in place (parameter
    updates) but never resized.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        arr = np.asarray(data, dtype=dtype)
        if arr.dtype.kind != "f":
            arr = arr.astype(np.float32)
        self.data = arr
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents: tuple = ()
        self._backward = None

    # -- introspection -------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        if self.data.size != 1:
            raise UsageError(f"item() on tensor of shape {self.data.shape}")
        return float(self.data.reshape(-1)[0])

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}, requires_grad={self.requires_grad})"

    def zero_grad(self) -> None:
        self.grad = None

    # -- graph construction --------------------------------------------

    @staticmethod
    def _result(data: np.ndarray, parents: tuple, backward) -> "Tensor":
        out = Tensor.__new__(Tensor)
        out.data = data
        out.grad = None
        out._parents = ()
        out._backward = None
        out.requires_grad = _grad_enabled and any(p.requires_grad for p in parents)
        if out.requires_grad:
            out._parents = parents
            out._backward = backward
        return out

    def backward(self) -> None:
        """Populate ``grad`` on every reachable tensor that requires it.

        Only defined for scalar (single-element) tensors.
        """
        if self.data.size != 1:
            raise UsageError(f"backward() requires a scalar loss, got shape {self.data.shape}")
        order = []
        visited = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in visited:
                    stack.append((parent, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # -- arithmetic -----------------------------------------------------

    @staticmethod
    def _coerce(value):
        return value.data if isinstance(value, Tensor) else np.asarray(value)

    def __add__(self, other):
        if isinstance(other, Tensor):
            def bwd(g):
                accumulate_grad(self, g)
                accumulate_grad(other, g)
            return Tensor._result(self.data + other.data, (self, other), bwd)
        const = self._coerce(other)

        def bwd(g):
            accumulate_grad(self, g)
        return Tensor._result(self.data + const, (self,), bwd)

    __radd__ = __add__

    def __neg__(self):
        def bwd(g):
            accumulate_grad(self, -g)
        return Tensor._result(-self.data, (self,), bwd)

    def __sub__(self, other):
        if isinstance(other, Tensor):
            def bwd(g):
                accumulate_grad(self, g)
                accumulate_grad(other, -g)
            return Tensor._result(self.data - other.data, (self, other), bwd)
        const = self._coerce(other)

        def bwd(g):
            accumulate_grad(self, g)
        return Tensor._result(self.data - const, (self,), bwd)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Tensor):
            def bwd(g):
                accumulate_grad(self, g * other.data)
                accumulate_grad(other, g * self.data)
            return Tensor._result(self.data * other.data, (self, other), bwd)
        const = self._coerce(other)

        def bwd(g):
            accumulate_grad(self, g * const)
        return Tensor._result(self.data * const, (self,), bwd)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            out_data = self.data / other.data

            def bwd(g):
                accumulate_grad(self, g / other.data)
                accumulate_grad(other, -g * out_data / other.data)
            return Tensor._result(out_data, (self, other), bwd)
        const = self._coerce(other)

        def bwd(g):
            accumulate_grad(self, g / const)
        return Tensor._result(self.data / const, (self,), bwd)

    def __pow__(self, exponent):
        exponent = float(exponent)

        def bwd(g):
            accumulate_grad(self, g * exponent * self.data ** (exponent - 1.0))
        return Tensor._result(self.data ** exponent, (self,), bwd)

    # -- elementwise functions -------------------------------------------

    def exp(self):
        out_data = np.exp(self.data)

        def bwd(g):
            accumulate_grad(self, g * out_data)
        return Tensor._result(out_data, (self,), bwd)

    def log(self):
        def bwd(g):
            accumulate_grad(self, g / self.data)
        return Tensor._result(np.log(self.data), (self,), bwd)

    def sqrt(self):
        out_data = np.sqrt(self.data)

        def bwd(g):
            # guarded at 0 so a perfectly-fit loss does not emit NaNs
            accumulate_grad(self, g * 0.5 / np.maximum(out_data, 1e-12))
        return Tensor._result(out_data, (self,), bwd)

    def abs(self):
        def bwd(g):
            accumulate_grad(self, g * np.sign(self.data))
        return Tensor._result(np.abs(self.data), (self,), bwd)

    def relu(self):
        def bwd(g):
            accumulate_grad(self, g * (self.data > 0))
        return Tensor._result(np.maximum(self.data, 0), (self,), bwd)

    def sigmoid(self):
        out_data = 1.0 / (1.0 + np.exp(-self.data))

        def bwd(g):
            accumulate_grad(self, g * out_data * (1.0 - out_data))
        return Tensor._result(out_data, (self,), bwd)

    def maximum(self, floor):
        """Elementwise max with a constant; gradient flows where self wins."""
        const = self._coerce(floor)

        def bwd(g):
            accumulate_grad(self, g * (self.data > const))
        return Tensor._result(np.maximum(self.data, const), (self,), bwd)

    def minimum(self, ceiling):
        const = self._coerce(ceiling)

        def bwd(g):
            accumulate_grad(self, g * (self.data < const))
        return Tensor._result(np.minimum(self.data, const), (self,), bwd)

    def clip(self, lo, hi):
        return self.maximum(lo).minimum(hi)

    # -- reductions and shape ops -----------------------------------------

    def sum(self, axis=None, keepdims: bool = False):
        out_data = self.data.sum(axis=axis, keepdims=keepdims)

        def bwd(g):
            g = np.asarray(g)
            if axis is not None and not keepdims:
                axes = axis if isinstance(axis, tuple) else (axis,)
                g = np.expand_dims(g, axes)
            accumulate_grad(self, np.broadcast_to(g, self.data.shape))
        return Tensor._result(np.asarray(out_data), (self,), bwd)

    def mean(self, axis=None, keepdims: bool = False):
        if axis is None:
            count = self.data.size
        else:
            axes = axis if isinstance(axis, tuple) else (axis,)
            count = int(np.prod([self.data.shape[a] for a in axes]))
        return self.sum(axis=axis, keepdims=keepdims) / float(count)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])

        def bwd(g):
            accumulate_grad(self, g.reshape(self.data.shape))
        return Tensor._result(self.data.reshape(shape), (self,), bwd)

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        inverse = tuple(np.argsort(axes))

        def bwd(g):
            accumulate_grad(self, g.transpose(inverse))
        return Tensor._result(self.data.transpose(axes), (self,), bwd)
