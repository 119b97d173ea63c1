"""Network operations on top of the autograd engine.

Convolution is im2col + GEMM; its correctness contract is the naive-loop
oracle in the tests, not a speed target. Conv and linear kernels feed the
MAC instrumentation counters so the complexity analyzer can be checked
against actual arithmetic.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import instrument
from .autograd import Tensor, _make, as_tensor
from .errors import MissingGradient, ShapeMismatch


class Parameter:
    """Trainable tensor plus its SGD momentum buffer."""

    __slots__ = ("tensor", "momentum")

    def __init__(self, data):
        self.tensor = Tensor(np.ascontiguousarray(data), requires_grad=True)
        self.momentum = np.zeros_like(self.tensor.data)

    @property
    def data(self):
        return self.tensor.data

    @property
    def shape(self):
        return self.tensor.data.shape


def he_normal(rng, shape, fan_in, dtype=np.float32):
    return rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape).astype(dtype)


def _param_tensor(p):
    return p.tensor if isinstance(p, Parameter) else as_tensor(p)


def conv2d(x, w, b=None, stride=1, padding=0):
    """Cross-correlation of x[N,C,H,W] with w[F,C,kh,kw], optional bias[F]."""
    x, w = as_tensor(x), _param_tensor(w)
    bt = _param_tensor(b) if b is not None else None
    if x.ndim != 4 or w.ndim != 4:
        raise ShapeMismatch(f"conv2d expects 4-d input/weight, got {x.shape}, {w.shape}")
    n, c, h, wdt = x.shape
    f, c2, kh, kw = w.shape
    if c != c2:
        raise ShapeMismatch(f"input has {c} channels, weight expects {c2}")
    ho = (h + 2 * padding - kh) // stride + 1
    wo = (wdt + 2 * padding - kw) // stride + 1
    if ho <= 0 or wo <= 0:
        raise ShapeMismatch(f"kernel {kh}x{kw} does not fit input {h}x{wdt}")
    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding), (padding, padding))) \
        if padding else x.data
    # cols: (N, Ho, Wo, C*kh*kw)
    wnd = sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
    cols = np.ascontiguousarray(wnd.transpose(0, 2, 3, 1, 4, 5)).reshape(
        n * ho * wo, c * kh * kw)
    wmat = w.data.reshape(f, -1)
    out = cols @ wmat.T
    if bt is not None:
        out += bt.data
    out = out.reshape(n, ho, wo, f).transpose(0, 3, 1, 2)
    instrument.bump_macs("conv_macs", n * f * c * kh * kw * ho * wo)

    def backward(grad):
        gmat = np.ascontiguousarray(grad.transpose(0, 2, 3, 1)).reshape(
            n * ho * wo, f)
        if bt is not None and bt.requires_grad:
            bt.accumulate(gmat.sum(axis=0))
        if w.requires_grad:
            w.accumulate((gmat.T @ cols).reshape(w.shape))
        if x.requires_grad:
            dcols = (gmat @ wmat).reshape(n, ho, wo, c, kh, kw)
            hp, wp = h + 2 * padding, wdt + 2 * padding
            dxp = np.zeros((n, c, hp, wp), dtype=x.dtype)
            for i in range(kh):
                for j in range(kw):
                    dxp[:, :, i:i + stride * ho:stride,
                        j:j + stride * wo:stride] += dcols[:, :, :, :, i, j] \
                        .transpose(0, 3, 1, 2)
            x.accumulate(dxp[:, :, padding:hp - padding, padding:wp - padding]
                         if padding else dxp)

    parents = (x, w) + ((bt,) if bt is not None else ())
    return _make(out, parents, backward)


def linear(x, w, b=None):
    """x[N,in] @ W[out,in].T + b[out]."""
    x, w = as_tensor(x), _param_tensor(w)
    bt = _param_tensor(b) if b is not None else None
    if x.ndim != 2 or w.ndim != 2 or x.shape[1] != w.shape[1]:
        raise ShapeMismatch(f"linear of {x.shape} and {w.shape}")
    out = x.data @ w.data.T
    if bt is not None:
        out = out + bt.data
    instrument.bump_macs("linear_macs", x.shape[0] * w.shape[0] * w.shape[1])

    def backward(grad):
        if bt is not None and bt.requires_grad:
            bt.accumulate(grad.sum(axis=0))
        if w.requires_grad:
            w.accumulate(grad.T @ x.data)
        if x.requires_grad:
            x.accumulate(grad @ w.data)

    parents = (x, w) + ((bt,) if bt is not None else ())
    return _make(out, parents, backward)


def max_pool2d(x, k, stride=None, padding=0):
    x = as_tensor(x)
    stride = stride or k
    n, c, h, w = x.shape
    if padding:
        fill = np.finfo(x.dtype).min if np.issubdtype(x.dtype, np.floating) \
            else np.iinfo(x.dtype).min
        xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding),
                             (padding, padding)), constant_values=fill)
    else:
        xp = x.data
    hp, wp = xp.shape[2:]
    ho = (hp - k) // stride + 1
    wo = (wp - k) // stride + 1
    wnd = sliding_window_view(xp, (k, k), axis=(2, 3))[:, :, ::stride, ::stride]
    flat = wnd.reshape(n, c, ho, wo, k * k)
    amax = flat.argmax(axis=-1)
    out = np.take_along_axis(flat, amax[..., None], axis=-1)[..., 0]

    def backward(grad):
        # scatter each window's gradient onto its argmax position
        ki, kj = np.divmod(amax, k)
        rows = np.arange(ho)[:, None] * stride + ki
        cols = np.arange(wo)[None, :] * stride + kj
        nn_idx, cc_idx = np.meshgrid(np.arange(n), np.arange(c), indexing="ij")
        flat_idx = ((nn_idx[..., None, None] * c + cc_idx[..., None, None])
                    * hp + rows) * wp + cols
        dxp = np.zeros(xp.size, dtype=x.dtype)
        np.add.at(dxp, flat_idx.ravel(), grad.ravel())
        dxp = dxp.reshape(n, c, hp, wp)
        x.accumulate(dxp[:, :, padding:hp - padding, padding:wp - padding]
                     if padding else dxp)

    return _make(np.ascontiguousarray(out), (x,), backward)


def global_avg_pool(x):
    """[N,C,H,W] -> [N,C], mean over the spatial extent."""
    x = as_tensor(x)
    if x.ndim != 4:
        raise ShapeMismatch(f"global_avg_pool expects 4-d input, got {x.shape}")
    n, c, h, w = x.shape
    out = x.data.mean(axis=(2, 3))

    def backward(grad):
        x.accumulate(np.broadcast_to(grad[:, :, None, None] / (h * w),
                                     x.shape).copy())

    return _make(out, (x,), backward)


def batch_norm2d(x, gamma, beta, running_mean, running_var, training,
                 momentum=0.1, eps=1e-5):
    """Per-channel normalization of x[N,C,H,W].

    Train mode normalizes by batch statistics and folds them into the
    running buffers (new stat weighted by `momentum`); eval mode
    normalizes by the running buffers.
    """
    x = as_tensor(x)
    g, b = _param_tensor(gamma), _param_tensor(beta)
    if x.ndim != 4:
        raise ShapeMismatch(f"batch_norm2d expects 4-d input, got {x.shape}")
    c = x.shape[1]
    if g.shape != (c,) or b.shape != (c,):
        raise ShapeMismatch(f"gamma/beta must have shape ({c},)")
    axes = (0, 2, 3)
    m = x.shape[0] * x.shape[2] * x.shape[3]
    if training:
        mu = x.data.mean(axis=axes)
        var = x.data.var(axis=axes)
        running_mean *= (1 - momentum)
        running_mean += momentum * mu
        unbiased = var * (m / (m - 1)) if m > 1 else var
        running_var *= (1 - momentum)
        running_var += momentum * unbiased
    else:
        mu = running_mean.astype(x.dtype)
        var = running_var.astype(x.dtype)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu[:, None, None]) * inv_std[:, None, None]
    out = g.data[:, None, None] * xhat + b.data[:, None, None]

    def backward(grad):
        if b.requires_grad:
            b.accumulate(grad.sum(axis=axes))
        if g.requires_grad:
            g.accumulate((grad * xhat).sum(axis=axes))
        if x.requires_grad:
            gs = g.data[:, None, None] * inv_std[:, None, None]
            if training:
                dsum = grad.sum(axis=axes)[:, None, None]
                dxhat_sum = (grad * xhat).sum(axis=axes)[:, None, None]
                x.accumulate(gs * (grad - dsum / m - xhat * dxhat_sum / m))
            else:
                x.accumulate(gs * grad)

    return _make(out, (x, g, b), backward)


def cross_entropy(logits, labels):
    """Mean negative log-softmax of the true class. labels: int indices."""
    logits = as_tensor(logits)
    labels = np.asarray(labels, dtype=np.int64)
    if logits.ndim != 2 or labels.shape != (logits.shape[0],):
        raise ShapeMismatch(f"cross_entropy of {logits.shape} and {labels.shape}")
    n = logits.shape[0]
    z = logits.data - logits.data.max(axis=1, keepdims=True)
    logsumexp = np.log(np.exp(z).sum(axis=1, keepdims=True))
    logp = z - logsumexp
    loss = -logp[np.arange(n), labels].mean()

    def backward(grad):
        p = np.exp(logp)
        p[np.arange(n), labels] -= 1.0
        logits.accumulate(grad * p / n)

    return _make(np.asarray(loss, dtype=logits.dtype), (logits,), backward)


def sgd_step(params, lr, momentum=0.0):
    """v <- momentum*v + grad; p <- p - lr*v; gradients cleared."""
    for p in params:
        if p.tensor.grad is None:
            raise MissingGradient("parameter has no gradient; run backward first")
        p.momentum *= momentum
        p.momentum += p.tensor.grad
        p.tensor.data -= lr * p.momentum
        p.tensor.grad = None
