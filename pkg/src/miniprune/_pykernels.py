"""Pure-numpy kernel backend.

Same call surface as the compiled `_ckernels` extension; used as the
fallback when the extension is unavailable and as the reference in the
backend parity tests. All functions take C-contiguous arrays.
"""

import numpy as np
from scipy.special import erf

BACKEND_NAME = "python"

_INV_SQRT2 = 0.7071067811865476
_INV_SQRT_2PI = 0.3989422804014327


def half_round(x):
    """Round a float32 array through IEEE binary16 (round-to-nearest-even).

    Overflow saturates to +/-inf, underflow passes through the binary16
    subnormals down to zero. Returns float32 values on the binary16 grid.
    """
    return np.asarray(x, dtype=np.float32).astype(np.float16).astype(np.float32)


def softmax_fwd(x):
    m = x.max(axis=1, keepdims=True)
    e = np.exp(x - m)
    return e / e.sum(axis=1, keepdims=True)


def softmax_bwd(y, gy):
    dot = (gy * y).sum(axis=1, keepdims=True)
    return y * (gy - dot)


def layernorm_fwd(x, gamma, beta, eps):
    mean = x.mean(axis=1)
    var = x.var(axis=1)
    rstd = 1.0 / np.sqrt(var + eps)
    y = (x - mean[:, None]) * rstd[:, None] * gamma + beta
    return y.astype(x.dtype, copy=False), mean.astype(x.dtype), rstd.astype(x.dtype)


def layernorm_bwd(x, mean, rstd, gamma, gy):
    xhat = (x - mean[:, None]) * rstd[:, None]
    ggamma = (gy * xhat).sum(axis=0)
    gbeta = gy.sum(axis=0)
    gyh = gy * gamma
    n = x.shape[1]
    gx = rstd[:, None] * (
        gyh
        - gyh.mean(axis=1, keepdims=True)
        - xhat * (gyh * xhat).sum(axis=1, keepdims=True) / n
    )
    return gx.astype(x.dtype, copy=False), ggamma, gbeta


def gelu_fwd(x):
    return (0.5 * x * (1.0 + erf(x * _INV_SQRT2))).astype(x.dtype, copy=False)


def gelu_bwd(x, gy):
    cdf = 0.5 * (1.0 + erf(x * _INV_SQRT2))
    pdf = np.exp(-0.5 * x * x) * _INV_SQRT_2PI
    return (gy * (cdf + x * pdf)).astype(x.dtype, copy=False)


def cross_entropy_fwd(logits, labels):
    m = logits.max(axis=1, keepdims=True)
    e = np.exp(logits - m)
    s = e.sum(axis=1, keepdims=True)
    probs = e / s
    lse = np.log(s[:, 0]) + m[:, 0]
    picked = logits[np.arange(logits.shape[0]), labels]
    loss = float(np.mean(lse - picked))
    return loss, probs


def adam_update(p, g, m, v, lr, beta1, beta2, eps, bc1, bc2):
    """Fused in-place Adam step on flat buffers (bias corrections precomputed)."""
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * (g * g)
    p -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)


def block_sum_prod(a, b, block_rows, block_cols):
    r, c = a.shape
    gr, gc = r // block_rows, c // block_cols
    prod = a * b
    return prod.reshape(gr, block_rows, gc, block_cols).sum(axis=(1, 3))


def block_abs_mean(w, block_rows, block_cols):
    r, c = w.shape
    gr, gc = r // block_rows, c // block_cols
    return np.abs(w).reshape(gr, block_rows, gc, block_cols).mean(axis=(1, 3))


def expand_blocks(m, block_rows, block_cols):
    return np.repeat(np.repeat(m, block_rows, axis=0), block_cols, axis=1)


def scatter_add_rows(out, ids, g):
    """out[ids[i]] += g[i], with repeated ids accumulating."""
    np.add.at(out, ids, g)
