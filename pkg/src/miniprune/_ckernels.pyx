# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel backend: fused single-pass loops for the hot spots.

Mirrors the call surface of `_pykernels`. Matrix products are not here on
purpose; numpy already dispatches those to BLAS and a hand-rolled GEMM
would lose to the fallback.
"""

from libc.math cimport erf, erff, exp, expf, log, sqrt, sqrtf
from libc.stdint cimport int64_t, uint16_t, uint32_t
from libc.string cimport memcpy

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "compiled"

ctypedef fused floating:
    float
    double

cdef double _INV_SQRT2 = 0.7071067811865476
cdef double _INV_SQRT_2PI = 0.3989422804014327


cdef inline floating _exp(floating v) noexcept nogil:
    if floating is float:
        return expf(v)
    else:
        return exp(v)


cdef inline floating _erf(floating v) noexcept nogil:
    if floating is float:
        return erff(v)
    else:
        return erf(v)


cdef inline object _empty_like_dtype(floating v, tuple shape):
    if floating is float:
        return np.empty(shape, dtype=np.float32)
    else:
        return np.empty(shape, dtype=np.float64)


# ---------------------------------------------------------------------------
# binary16 emulation
# ---------------------------------------------------------------------------

cdef inline uint32_t _f32_bits(float f) noexcept nogil:
    cdef uint32_t b
    memcpy(&b, &f, 4)
    return b


cdef inline float _bits_f32(uint32_t b) noexcept nogil:
    cdef float f
    memcpy(&f, &b, 4)
    return f


cdef inline uint16_t _f32_to_h(float f) noexcept nogil:
    cdef uint32_t bits = _f32_bits(f)
    cdef uint32_t sign = (bits >> 16) & 0x8000u
    cdef uint32_t exp = (bits >> 23) & 0xFFu
    cdef uint32_t man = bits & 0x7FFFFFu
    cdef int e
    cdef uint32_t out, m, shift, half, rem
    if exp == 0xFFu:
        if man != 0:
            return <uint16_t> (sign | 0x7E00u)  # nan
        return <uint16_t> (sign | 0x7C00u)      # inf
    e = <int> exp - 127 + 15
    if e >= 0x1F:
        return <uint16_t> (sign | 0x7C00u)      # overflow to inf
    if e <= 0:
        # subnormal range; shift full 24-bit mantissa, round to nearest even
        m = man | 0x800000u
        shift = <uint32_t> (14 - e)
        if shift > 24u:
            return <uint16_t> sign
        out = m >> shift
        rem = m & ((1u << shift) - 1u)
        half = 1u << (shift - 1u)
        if rem > half or (rem == half and (out & 1u)):
            out += 1u
        return <uint16_t> (sign | out)
    out = (<uint32_t> e << 10) | (man >> 13)
    rem = man & 0x1FFFu
    if rem > 0x1000u or (rem == 0x1000u and (out & 1u)):
        out += 1u  # carry may roll into the exponent and produce inf
    return <uint16_t> (sign | out)


cdef inline float _h_to_f32(uint16_t h) noexcept nogil:
    cdef uint32_t sign = (<uint32_t> h & 0x8000u) << 16
    cdef uint32_t exp = (h >> 10) & 0x1Fu
    cdef uint32_t man = h & 0x3FFu
    cdef float f
    if exp == 0u:
        if man == 0u:
            return _bits_f32(sign)
        f = <float> man * 5.9604644775390625e-08f
        return -f if sign else f
    if exp == 0x1Fu:
        if man == 0u:
            return _bits_f32(sign | 0x7F800000u)
        return _bits_f32(sign | 0x7FC00000u)
    return _bits_f32(sign | ((exp + 112u) << 23) | (man << 13))


def half_round(x):
    """Round a float32 array through IEEE binary16 (round-to-nearest-even)."""
    cdef cnp.ndarray arr = np.ascontiguousarray(x, dtype=np.float32)
    cdef cnp.ndarray out = np.empty(arr.shape[:arr.ndim], dtype=np.float32)
    cdef float[::1] src = arr.ravel()
    cdef float[::1] dst = out.ravel()
    cdef Py_ssize_t i, n = src.shape[0]
    with nogil:
        for i in range(n):
            dst[i] = _h_to_f32(_f32_to_h(src[i]))
    return out


# ---------------------------------------------------------------------------
# fused row kernels
# ---------------------------------------------------------------------------

def softmax_fwd(floating[:, ::1] x):
    cdef Py_ssize_t r = x.shape[0], c = x.shape[1]
    out = _empty_like_dtype(<floating> 0, (r, c))
    cdef floating[:, ::1] y = out
    cdef Py_ssize_t i, j
    cdef floating m
    cdef double s
    with nogil:
        for i in range(r):
            m = x[i, 0]
            for j in range(1, c):
                if x[i, j] > m:
                    m = x[i, j]
            s = 0.0
            for j in range(c):
                y[i, j] = _exp(x[i, j] - m)
                s += y[i, j]
            for j in range(c):
                y[i, j] = <floating> (y[i, j] / s)
    return out


def softmax_bwd(floating[:, ::1] y, floating[:, ::1] gy):
    cdef Py_ssize_t r = y.shape[0], c = y.shape[1]
    out = _empty_like_dtype(<floating> 0, (r, c))
    cdef floating[:, ::1] gx = out
    cdef Py_ssize_t i, j
    cdef double dot
    with nogil:
        for i in range(r):
            dot = 0.0
            for j in range(c):
                dot += gy[i, j] * y[i, j]
            for j in range(c):
                gx[i, j] = <floating> (y[i, j] * (gy[i, j] - dot))
    return out


def layernorm_fwd(floating[:, ::1] x, floating[::1] gamma, floating[::1] beta,
                  double eps):
    cdef Py_ssize_t r = x.shape[0], c = x.shape[1]
    out = _empty_like_dtype(<floating> 0, (r, c))
    mean_out = _empty_like_dtype(<floating> 0, (r,))
    rstd_out = _empty_like_dtype(<floating> 0, (r,))
    cdef floating[:, ::1] y = out
    cdef floating[::1] mean = mean_out
    cdef floating[::1] rstd = rstd_out
    cdef Py_ssize_t i, j
    cdef double s, var, d, rs
    with nogil:
        for i in range(r):
            s = 0.0
            for j in range(c):
                s += x[i, j]
            s /= c
            var = 0.0
            for j in range(c):
                d = x[i, j] - s
                var += d * d
            var /= c
            rs = 1.0 / sqrt(var + eps)
            mean[i] = <floating> s
            rstd[i] = <floating> rs
            for j in range(c):
                y[i, j] = <floating> ((x[i, j] - s) * rs * gamma[j] + beta[j])
    return out, mean_out, rstd_out


def layernorm_bwd(floating[:, ::1] x, floating[::1] mean, floating[::1] rstd,
                  floating[::1] gamma, floating[:, ::1] gy):
    cdef Py_ssize_t r = x.shape[0], c = x.shape[1]
    gx_out = _empty_like_dtype(<floating> 0, (r, c))
    ggamma_out = np.zeros(c, dtype=np.float32 if floating is float else np.float64)
    gbeta_out = np.zeros(c, dtype=np.float32 if floating is float else np.float64)
    cdef floating[:, ::1] gx = gx_out
    cdef floating[::1] ggamma = ggamma_out
    cdef floating[::1] gbeta = gbeta_out
    cdef Py_ssize_t i, j
    cdef double xhat, gyh, mean_gyh, mean_gyh_xhat
    with nogil:
        for i in range(r):
            mean_gyh = 0.0
            mean_gyh_xhat = 0.0
            for j in range(c):
                xhat = (x[i, j] - mean[i]) * rstd[i]
                gyh = gy[i, j] * gamma[j]
                mean_gyh += gyh
                mean_gyh_xhat += gyh * xhat
                ggamma[j] += <floating> (gy[i, j] * xhat)
                gbeta[j] += gy[i, j]
            mean_gyh /= c
            mean_gyh_xhat /= c
            for j in range(c):
                xhat = (x[i, j] - mean[i]) * rstd[i]
                gyh = gy[i, j] * gamma[j]
                gx[i, j] = <floating> (rstd[i] * (gyh - mean_gyh - xhat * mean_gyh_xhat))
    return gx_out, ggamma_out, gbeta_out


def gelu_fwd(floating[::1] x):
    cdef Py_ssize_t i, n = x.shape[0]
    out = _empty_like_dtype(<floating> 0, (n,))
    cdef floating[::1] y = out
    with nogil:
        for i in range(n):
            y[i] = <floating> (0.5 * x[i] * (1.0 + _erf(<floating> (x[i] * _INV_SQRT2))))
    return out


def gelu_bwd(floating[::1] x, floating[::1] gy):
    cdef Py_ssize_t i, n = x.shape[0]
    out = _empty_like_dtype(<floating> 0, (n,))
    cdef floating[::1] gx = out
    cdef double cdf, pdf
    with nogil:
        for i in range(n):
            cdf = 0.5 * (1.0 + _erf(<floating> (x[i] * _INV_SQRT2)))
            pdf = _exp(<floating> (-0.5 * x[i] * x[i])) * _INV_SQRT_2PI
            gx[i] = <floating> (gy[i] * (cdf + x[i] * pdf))
    return out


def cross_entropy_fwd(floating[:, ::1] logits, int64_t[::1] labels):
    cdef Py_ssize_t b = logits.shape[0], k = logits.shape[1]
    probs_out = _empty_like_dtype(<floating> 0, (b, k))
    cdef floating[:, ::1] probs = probs_out
    cdef Py_ssize_t i, j
    cdef floating m
    cdef double s, loss = 0.0
    with nogil:
        for i in range(b):
            m = logits[i, 0]
            for j in range(1, k):
                if logits[i, j] > m:
                    m = logits[i, j]
            s = 0.0
            for j in range(k):
                probs[i, j] = _exp(logits[i, j] - m)
                s += probs[i, j]
            for j in range(k):
                probs[i, j] = <floating> (probs[i, j] / s)
            loss += log(s) + m - logits[i, labels[i]]
    return loss / b, probs_out


def adam_update(floating[::1] p, floating[::1] g, floating[::1] m,
                floating[::1] v, double lr, double beta1, double beta2,
                double eps, double bc1, double bc2):
    cdef Py_ssize_t i, n = p.shape[0]
    with nogil:
        for i in range(n):
            m[i] = <floating> (beta1 * m[i] + (1.0 - beta1) * g[i])
            v[i] = <floating> (beta2 * v[i] + (1.0 - beta2) * g[i] * g[i])
            p[i] -= <floating> (lr * (m[i] / bc1) / (sqrt(v[i] / bc2) + eps))


# ---------------------------------------------------------------------------
# block utilities
# ---------------------------------------------------------------------------

def block_sum_prod(floating[:, ::1] a, floating[:, ::1] b, int block_rows,
                   int block_cols):
    cdef Py_ssize_t r = a.shape[0], c = a.shape[1]
    cdef Py_ssize_t gr = r // block_rows, gc = c // block_cols
    out = _empty_like_dtype(<floating> 0, (gr, gc))
    cdef floating[:, ::1] y = out
    cdef Py_ssize_t i, j
    cdef double s
    with nogil:
        for i in range(gr):
            for j in range(gc):
                y[i, j] = 0
        for i in range(r):
            for j in range(c):
                y[i // block_rows, j // block_cols] += <floating> (a[i, j] * b[i, j])
    return out


def block_abs_mean(floating[:, ::1] w, int block_rows, int block_cols):
    cdef Py_ssize_t r = w.shape[0], c = w.shape[1]
    cdef Py_ssize_t gr = r // block_rows, gc = c // block_cols
    out = np.zeros((gr, gc), dtype=np.float32 if floating is float else np.float64)
    cdef floating[:, ::1] y = out
    cdef Py_ssize_t i, j
    cdef double scale = 1.0 / (block_rows * block_cols)
    with nogil:
        for i in range(r):
            for j in range(c):
                y[i // block_rows, j // block_cols] += <floating> (
                    (w[i, j] if w[i, j] >= 0 else -w[i, j]) * scale)
    return out


def expand_blocks(floating[:, ::1] m, int block_rows, int block_cols):
    cdef Py_ssize_t gr = m.shape[0], gc = m.shape[1]
    cdef Py_ssize_t r = gr * block_rows, c = gc * block_cols
    out = _empty_like_dtype(<floating> 0, (r, c))
    cdef floating[:, ::1] y = out
    cdef Py_ssize_t i, j
    with nogil:
        for i in range(r):
            for j in range(c):
                y[i, j] = m[i // block_rows, j // block_cols]
    return out


def scatter_add_rows(floating[:, ::1] out, int64_t[::1] ids, floating[:, ::1] g):
    cdef Py_ssize_t i, j, n = ids.shape[0], d = out.shape[1]
    with nogil:
        for i in range(n):
            for j in range(d):
                out[ids[i], j] += g[i, j]
