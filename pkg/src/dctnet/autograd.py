"""Dense tensors with reverse-mode automatic differentiation.

Minimal engine covering exactly what the network family needs. Tensors
wrap a contiguous numpy buffer; ops build a backward closure graph which
`backward(loss)` walks in reverse topological order. Float32 is the
working precision; tests build float64 tensors for tight finite-difference
checks, and every op preserves its input dtype.
"""

from contextlib import contextmanager

import numpy as np

from .errors import AxisOutOfRange, NonScalarLoss, ShapeMismatch

_grad_enabled = True


@contextmanager
def no_grad():
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_backward", "_parents")

    def __init__(self, data, requires_grad=False):
        self.data = np.ascontiguousarray(data)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._backward = None
        self._parents = ()

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    def accumulate(self, grad):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += grad

    def __repr__(self):
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, " \
               f"requires_grad={self.requires_grad})"


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data, parents, backward_fn):
    """Wrap an op result, wiring the graph only when gradients may flow."""
    out = Tensor(data)
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward_fn
    return out


def _unbroadcast(grad, shape):
    """Sum `grad` down to `shape` to undo numpy broadcasting."""
    extra = grad.ndim - len(shape)
    if extra:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def _check_axis(axis, ndim):
    if not -ndim <= axis < ndim:
        raise AxisOutOfRange(f"axis {axis} out of range for {ndim} dimensions")
    return axis % ndim


def add(x, y):
    x, y = as_tensor(x), as_tensor(y)
    try:
        data = x.data + y.data
    except ValueError as e:
        raise ShapeMismatch(str(e)) from None

    def backward(grad):
        if x.requires_grad:
            x.accumulate(_unbroadcast(grad, x.shape))
        if y.requires_grad:
            y.accumulate(_unbroadcast(grad, y.shape))

    return _make(data, (x, y), backward)


def mul(x, y):
    x, y = as_tensor(x), as_tensor(y)
    try:
        data = x.data * y.data
    except ValueError as e:
        raise ShapeMismatch(str(e)) from None

    def backward(grad):
        if x.requires_grad:
            x.accumulate(_unbroadcast(grad * y.data, x.shape))
        if y.requires_grad:
            y.accumulate(_unbroadcast(grad * x.data, y.shape))

    return _make(data, (x, y), backward)


def matmul(x, y):
    x, y = as_tensor(x), as_tensor(y)
    if x.ndim != 2 or y.ndim != 2 or x.shape[1] != y.shape[0]:
        raise ShapeMismatch(f"matmul of {x.shape} and {y.shape}")
    data = x.data @ y.data

    def backward(grad):
        if x.requires_grad:
            x.accumulate(grad @ y.data.T)
        if y.requires_grad:
            y.accumulate(x.data.T @ grad)

    return _make(data, (x, y), backward)


def relu(x):
    x = as_tensor(x)
    data = np.maximum(x.data, 0)

    def backward(grad):
        x.accumulate(grad * (x.data > 0))

    return _make(data, (x,), backward)


def reshape(x, shape):
    x = as_tensor(x)
    data = x.data.reshape(shape)

    def backward(grad):
        x.accumulate(grad.reshape(x.shape))

    return _make(data, (x,), backward)


def tsum(x, axis=None, keepdims=False):
    x = as_tensor(x)
    if axis is not None:
        for a in (axis if isinstance(axis, tuple) else (axis,)):
            _check_axis(a, x.ndim)
    data = x.data.sum(axis=axis, keepdims=keepdims)

    def backward(grad):
        g = grad
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        x.accumulate(np.broadcast_to(g, x.shape).copy())

    return _make(data, (x,), backward)


def softmax(x, axis):
    x = as_tensor(x)
    axis = _check_axis(axis, x.ndim)
    z = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(z)
    data = e / e.sum(axis=axis, keepdims=True)

    def backward(grad):
        dot = (grad * data).sum(axis=axis, keepdims=True)
        x.accumulate(data * (grad - dot))

    return _make(data, (x,), backward)


def take_channels(x, indices, axis):
    """Select indices along an axis (gradients scatter back)."""
    x = as_tensor(x)
    axis = _check_axis(axis, x.ndim)
    idx = np.asarray(indices, dtype=np.int64)
    data = np.take(x.data, idx, axis=axis)

    def backward(grad):
        g = np.zeros_like(x.data)
        sl = [slice(None)] * x.ndim
        sl[axis] = idx
        np.add.at(g, tuple(sl), grad)
        x.accumulate(g)

    return _make(data, (x,), backward)


def channel_matmul(x, w):
    """Per-location channel mixing: out[..., m, h, w] = W[m,n] . x[..., n, h, w]."""
    x, w = as_tensor(x), as_tensor(w)
    if x.ndim < 3 or w.ndim != 2 or x.shape[-3] != w.shape[1]:
        raise ShapeMismatch(f"channel_matmul of {x.shape} and {w.shape}")
    data = np.einsum("mn,...nhw->...mhw", w.data, x.data, optimize=True)

    def backward(grad):
        if x.requires_grad:
            x.accumulate(np.einsum("mn,...mhw->...nhw", w.data, grad,
                                   optimize=True))
        if w.requires_grad:
            w.accumulate(np.einsum("...mhw,...nhw->mn", grad, x.data,
                                   optimize=True))

    return _make(data, (x, w), backward)


def backward(loss):
    """Populate grads of every requires_grad tensor reachable from `loss`."""
    if not isinstance(loss, Tensor):
        raise NonScalarLoss("loss must be a Tensor")
    if loss.data.size != 1:
        raise NonScalarLoss(f"loss has shape {loss.shape}, expected a scalar")
    topo = []
    seen = set()
    stack = [(loss, False)]
    while stack:
        node, done = stack.pop()
        if done:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    loss.grad = np.ones_like(loss.data)
    for node in reversed(topo):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)
