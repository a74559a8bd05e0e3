"""
Checking backpropagation with finite differences
================================================

Every layer's backward pass is compared with central differences on a
small random input.
"""

import numpy as np

from wearnet.cnn import layers as L

rng = np.random.default_rng(0)


def numeric_grad(f, x, eps=1e-4):
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        old = x[idx]
        x[idx] = old + eps
        fp = f()
        x[idx] = old - eps
        fm = f()
        x[idx] = old
        g[idx] = (fp - fm) / (2 * eps)
    return g


def rel_error(a, b):
    return np.linalg.norm(a - b) / (np.linalg.norm(a) + np.linalg.norm(b))


x = rng.standard_normal((2, 3, 6, 6))
w = rng.standard_normal((4, 3, 3, 3))
b = rng.standard_normal(4)
out, cache = L.conv2d_forward(x, w, b, stride=1, padding=1)
dout = rng.standard_normal(out.shape)
dx, dw, db = L.conv2d_backward(dout, cache)

loss = lambda: np.sum(L.conv2d_forward(x, w, b, 1, 1)[0] * dout)
print("conv dx:", rel_error(dx, numeric_grad(loss, x)))
print("conv dw:", rel_error(dw, numeric_grad(loss, w)))
print("conv db:", rel_error(db, numeric_grad(loss, b)))

logits = rng.standard_normal((5, 7))
labels = rng.integers(0, 7, 5)
_, grad = L.softmax_cross_entropy(logits, labels)
print("softmax-CE:", rel_error(grad, numeric_grad(lambda: L.softmax_cross_entropy(logits, labels)[0], logits)))
