"""Forward/backward pairs for the network stages.

Every ``*_forward`` returns ``(out, cache)`` and the matching
``*_backward`` maps the upstream gradient to input and parameter
gradients. Arrays are batched: ``(B, C, n1, n2)`` for feature planes.
"""

from __future__ import annotations

import numpy as np

from ..hankel import conv_iso, conv_iso_adjoint, conv_iso_kernel_grad

BN_EPS = 1e-5


def _anchor(w):
    return (w.shape[2] // 2, w.shape[3] // 2)


def conv_forward(x, w, b):
    out = conv_iso(x, w, _anchor(w)) + b[None, :, None, None]
    return out, (x, w)


def conv_backward(dout, cache):
    x, w = cache
    a = _anchor(w)
    dx = conv_iso_adjoint(dout, w, a)
    dw = conv_iso_kernel_grad(x, dout, w.shape, a)
    db = dout.sum(axis=(0, 2, 3))
    return dx, dw, db


def relu_forward(x):
    # prox of the indicator of the nonnegative orthant
    return np.maximum(x, 0.0), x > 0


def relu_backward(dout, mask):
    return dout * mask


def pool_forward(x):
    """Non-overlapping 2 x 2 mean pooling."""
    B, C, n1, n2 = x.shape
    return x.reshape(B, C, n1 // 2, 2, n2 // 2, 2).mean(axis=(3, 5))


def pool_backward(dout):
    return unpool_forward(dout) / 4.0


def unpool_forward(x):
    """Nearest-neighbour upsampling; ``pool(unpool(x)) = x``."""
    return np.repeat(np.repeat(x, 2, axis=2), 2, axis=3)


def unpool_backward(dout):
    return 4.0 * pool_forward(dout)


def batchnorm_forward(x, gamma, beta, stats=None):
    """Per-channel normalization.

    With ``stats=None`` the batch statistics (over batch and space) are
    used; otherwise ``stats = (mean, var)`` are frozen population values.
    """
    if stats is None:
        mean = x.mean(axis=(0, 2, 3))
        var = x.var(axis=(0, 2, 3))
        frozen = False
    else:
        mean, var = stats
        frozen = True
    inv = 1.0 / np.sqrt(var + BN_EPS)
    xhat = (x - mean[None, :, None, None]) * inv[None, :, None, None]
    out = gamma[None, :, None, None] * xhat + beta[None, :, None, None]
    return out, (xhat, inv, gamma, frozen)


def batchnorm_backward(dout, cache):
    xhat, inv, gamma, frozen = cache
    dgamma = np.sum(dout * xhat, axis=(0, 2, 3))
    dbeta = dout.sum(axis=(0, 2, 3))
    dxhat = dout * gamma[None, :, None, None]
    if frozen:
        return dxhat * inv[None, :, None, None], dgamma, dbeta
    m = dout.shape[0] * dout.shape[2] * dout.shape[3]
    mean_d = dxhat.sum(axis=(0, 2, 3)) / m
    mean_dx = np.sum(dxhat * xhat, axis=(0, 2, 3)) / m
    dx = (dxhat - mean_d[None, :, None, None] - xhat * mean_dx[None, :, None, None])
    return dx * inv[None, :, None, None], dgamma, dbeta


def affine_forward(x, W, b):
    """``W vec(x) + b`` per sample; ``x`` has shape ``(B, ...)``."""
    flat = x.reshape(x.shape[0], -1)
    return flat @ W.T + b, (flat, W, x.shape)


def affine_backward(dout, cache):
    flat, W, shape = cache
    dx = (dout @ W).reshape(shape)
    return dx, dout.T @ flat, dout.sum(axis=0)


def log_softmax(y, axis=1):
    m = y.max(axis=axis, keepdims=True)
    s = y - m
    return s - np.log(np.exp(s).sum(axis=axis, keepdims=True))
