"""NumPy reference implementations of the dense kernels.

Same signatures as the compiled module ``ruc._kernels._core``. Used when the
extension is unavailable or when ``RUC_KERNELS=pure`` is set.
"""

import numpy as np


def affine(x, w, b):
    return x @ w + b


def affine_grads(x, w, dz):
    dw = x.T @ dz
    db = dz.sum(axis=0)
    dx = dz @ w.T
    return dx, dw, db


def relu(z):
    return np.maximum(z, 0.0)


def relu_grad(z, da):
    return np.where(z > 0.0, da, 0.0)


def softmax(z):
    m = z.max(axis=1, keepdims=True)
    e = np.exp(z - m)
    return e / e.sum(axis=1, keepdims=True)


def sqdist(a, b):
    # Direct (a_i - b_j)^2 sums, chunked so the 3-d intermediate stays small.
    # The expanded |a|^2 + |b|^2 - 2ab form is faster but loses precision on
    # near ties, which matters for deterministic neighbor ordering.
    na, d = a.shape
    nb = b.shape[0]
    out = np.empty((na, nb))
    chunk = max(1, 4_000_000 // max(1, nb * d))
    for lo in range(0, na, chunk):
        hi = min(na, lo + chunk)
        diff = a[lo:hi, None, :] - b[None, :, :]
        out[lo:hi] = np.einsum("ijk,ijk->ij", diff, diff)
    return out
