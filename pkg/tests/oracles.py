"""Independent float64 reference implementations used as test oracles.

These deliberately avoid the library's compute paths: convolution and
pooling are computed per output window with float64 accumulation, and
gradient checks run central finite differences against these shadows.
"""

import numpy as np


def conv2d_ref(x, w, b, stride, pad):
    """Window-by-window float64 convolution."""
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n, cin, h, width = x.shape
    cout, _, k, _ = w.shape
    xp = np.zeros((n, cin, h + 2 * pad, width + 2 * pad))
    xp[:, :, pad:pad + h, pad:pad + width] = x
    ho = (h + 2 * pad - k) // stride + 1
    wo = (width + 2 * pad - k) // stride + 1
    out = np.zeros((n, cout, ho, wo))
    for ni in range(n):
        for co in range(cout):
            for i in range(ho):
                for j in range(wo):
                    window = xp[ni, :, i * stride:i * stride + k, j * stride:j * stride + k]
                    out[ni, co, i, j] = np.sum(window * w[co]) + b[co]
    return out


def avg_pool3_ref(x):
    """Window-by-window 3x3 mean with zero padding and divisor 9."""
    x = np.asarray(x, dtype=np.float64)
    n, c, h, w = x.shape
    xp = np.zeros((n, c, h + 2, w + 2))
    xp[:, :, 1:1 + h, 1:1 + w] = x
    out = np.zeros_like(x)
    for i in range(h):
        for j in range(w):
            out[:, :, i, j] = xp[:, :, i:i + 3, j:j + 3].sum(axis=(2, 3)) / 9.0
    return out


def leaky_relu_ref(x, slope):
    x = np.asarray(x, dtype=np.float64)
    return np.where(x < 0, slope * x, x)


def relu_ref(x):
    return np.maximum(np.asarray(x, dtype=np.float64), 0.0)


def l1_ref(pred, target):
    return float(np.mean(np.abs(np.asarray(pred, np.float64) - np.asarray(target, np.float64))))


def fd_gradient(f, x0, h=1e-3):
    """Central finite differences of a scalar float64 function."""
    x0 = np.asarray(x0, dtype=np.float64)
    grad = np.zeros_like(x0)
    flat = grad.ravel()
    for i in range(x0.size):
        xp = x0.copy()
        xp.ravel()[i] += h
        xm = x0.copy()
        xm.ravel()[i] -= h
        flat[i] = (f(xp) - f(xm)) / (2.0 * h)
    return grad


def max_rel_error(analytic, numeric, floor=1e-6):
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    scale = np.maximum(np.abs(numeric), floor)
    return float(np.max(np.abs(analytic - numeric) / scale))


def fd_jacobian(f, x0, out_size, h=1e-3):
    """Dense Jacobian (out_size x in_size) of a float64 vector function."""
    x0 = np.asarray(x0, dtype=np.float64)
    jac = np.zeros((out_size, x0.size))
    for i in range(x0.size):
        xp = x0.copy()
        xp.ravel()[i] += h
        xm = x0.copy()
        xm.ravel()[i] -= h
        jac[:, i] = (np.asarray(f(xp)).ravel() - np.asarray(f(xm)).ravel()) / (2.0 * h)
    return jac
