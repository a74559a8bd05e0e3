"""Forward and backward passes for the layer kinds used by the models.

Tensors are float64 arrays laid out ``(batch, channels, height, width)``.
Every ``*_forward`` returns ``(out, cache)`` and the matching ``*_backward``
consumes ``(dout, cache)``.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import DataError, ShapeError


def conv_output_size(size: int, k: int, stride: int = 1, padding: int = 0) -> int:
    span = size + 2 * padding - k
    if span < 0 or span % stride:
        raise ShapeError(
            f"kernel {k} with stride {stride} and padding {padding} does not tile input size {size}"
        )
    return span // stride + 1


def _im2col(x, kh, kw, stride, padding):
    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding))) if padding else x
    win = sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
    n, c, ho, wo = win.shape[:4]
    cols = np.ascontiguousarray(win.transpose(0, 2, 3, 1, 4, 5)).reshape(n * ho * wo, c * kh * kw)
    return cols, ho, wo


def conv2d_forward(x, w, b, stride: int = 1, padding: int = 0):
    """Cross-correlation of ``x`` (N, C, H, W) with ``w`` (F, C, kh, kw) plus ``b`` (F,)."""
    if x.ndim != 4 or w.ndim != 4 or x.shape[1] != w.shape[1] or b.shape != (w.shape[0],):
        raise ShapeError(f"incompatible conv shapes: input {x.shape}, weights {w.shape}, bias {b.shape}")
    f, _, kh, kw = w.shape
    conv_output_size(x.shape[2], kh, stride, padding)
    conv_output_size(x.shape[3], kw, stride, padding)
    cols, ho, wo = _im2col(x, kh, kw, stride, padding)
    out = (cols @ w.reshape(f, -1).T + b).reshape(x.shape[0], ho, wo, f)
    return np.ascontiguousarray(out.transpose(0, 3, 1, 2)), (x.shape, cols, w, stride, padding)


def conv2d_backward(dout, cache):
    """Gradients w.r.t. the input, the weights and the bias."""
    (n, c, h, wd), cols, w, stride, padding = cache
    f, _, kh, kw = w.shape
    ho, wo = (h + 2 * padding - kh) // stride + 1, (wd + 2 * padding - kw) // stride + 1
    if dout.shape != (n, f, ho, wo):
        raise ShapeError(f"upstream gradient {dout.shape} does not match conv output {(n, f, ho, wo)}")
    d2 = dout.transpose(0, 2, 3, 1).reshape(-1, f)
    db = d2.sum(axis=0)
    dw = (d2.T @ cols).reshape(w.shape)

    dcols = (w.reshape(f, -1).T @ d2.T).reshape(c, kh, kw, n, ho, wo)
    dxp = np.zeros((c, n, h + 2 * padding, wd + 2 * padding))
    for u in range(kh):
        for v in range(kw):
            dxp[:, :, u:u + stride * (ho - 1) + 1:stride, v:v + stride * (wo - 1) + 1:stride] += dcols[:, u, v]
    dx = dxp[:, :, padding:padding + h, padding:padding + wd].transpose(1, 0, 2, 3)
    return np.ascontiguousarray(dx), dw, db


def _pool_windows(x, ph, pw):
    n, c, h, w = x.shape
    if h % ph or w % pw:
        raise ShapeError(f"spatial size {h}x{w} is not divisible by pool {ph}x{pw}")
    ho, wo = h // ph, w // pw
    return x.reshape(n, c, ho, ph, wo, pw).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, ho, wo, ph * pw)


def _unpool(g, shape, ph, pw):
    n, c, h, w = shape
    ho, wo = h // ph, w // pw
    return g.reshape(n, c, ho, wo, ph, pw).transpose(0, 1, 2, 4, 3, 5).reshape(shape)


def maxpool_forward(x, ph: int = 2, pw: int = 2):
    """Non-overlapping max pooling (stride equals pool size).

    Ties resolve to the first element of the window in row-major order.
    """
    win = _pool_windows(x, ph, pw)
    arg = win.argmax(axis=-1)
    out = np.take_along_axis(win, arg[..., None], axis=-1)[..., 0]
    return out, (x.shape, arg, ph, pw)


def maxpool_backward(dout, cache):
    shape, arg, ph, pw = cache
    if dout.shape != arg.shape:
        raise ShapeError(f"upstream gradient {dout.shape} does not match pool output {arg.shape}")
    g = np.zeros(arg.shape + (ph * pw,))
    np.put_along_axis(g, arg[..., None], dout[..., None], axis=-1)
    return _unpool(g, shape, ph, pw)


def avgpool_forward(x, ph: int = 2, pw: int = 2):
    return _pool_windows(x, ph, pw).mean(axis=-1), (x.shape, ph, pw)


def avgpool_backward(dout, cache):
    shape, ph, pw = cache
    g = np.repeat(dout[..., None] / (ph * pw), ph * pw, axis=-1)
    return _unpool(g, shape, ph, pw)


def fc_forward(x, w, b):
    """Affine map of the row-major flattened input; ``w`` is (in_features, out_features)."""
    flat = x.reshape(x.shape[0], -1)
    if flat.shape[1] != w.shape[0] or b.shape != (w.shape[1],):
        raise ShapeError(f"FC expects {w.shape[0]} inputs, got {flat.shape[1]}")
    return flat @ w + b, (x, w)


def fc_backward(dout, cache):
    x, w = cache
    flat = x.reshape(x.shape[0], -1)
    if dout.shape != (x.shape[0], w.shape[1]):
        raise ShapeError(f"upstream gradient {dout.shape} does not match FC output")
    return (dout @ w.T).reshape(x.shape), flat.T @ dout, dout.sum(axis=0)


def relu_forward(x):
    return np.maximum(x, 0.0), x


def relu_backward(dout, cache):
    return dout * (cache > 0)


def softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_cross_entropy(logits, labels):
    """Mean cross-entropy over the batch and its gradient w.r.t. ``logits``."""
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels)
    n, k = logits.shape
    if labels.shape != (n,):
        raise ShapeError("one label per row of logits is required")
    if labels.size and (labels.min() < 0 or labels.max() >= k):
        raise DataError(f"labels must lie in 0..{k - 1}")
    z = logits - logits.max(axis=1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=1))
    rows = np.arange(n)
    loss = float(np.mean(lse - z[rows, labels]))
    grad = np.exp(z - lse[:, None])
    grad[rows, labels] -= 1.0
    return loss, grad / n
