"""Hot inner loops, each in a numba and a vectorized numpy flavour.

The public names (``fft_rows``, ``layer_norm_forward``, ...) dispatch to the
numba version unless ``FLOWDEN_DISABLE_NUMBA`` is set. Both flavours are
importable as ``<name>_numba`` / ``<name>_numpy`` for tests and benchmarks.
"""
import math

import numpy as np
from scipy.special import erf

from ._accel import USE_NUMBA, njit

_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)


def is_power_of_two(n):
    return n > 0 and (n & (n - 1)) == 0


def bit_reverse_permutation(n):
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


def _twiddles(n, inverse):
    sign = 1.0 if inverse else -1.0
    return np.exp(sign * 2j * np.pi * np.arange(n // 2) / n)


# ---------------------------------------------------------------------------
# radix-2 FFT along the last axis of a 2-D complex array (unnormalized)
# ---------------------------------------------------------------------------


@njit
def _fft_rows_kernel(z, perm, tw):
    rows, n = z.shape
    out = np.empty_like(z)
    for r in range(rows):
        for i in range(n):
            out[r, i] = z[r, perm[i]]
        size = 2
        while size <= n:
            half = size // 2
            stride = n // size
            for start in range(0, n, size):
                for k in range(half):
                    a = out[r, start + k]
                    b = out[r, start + k + half] * tw[k * stride]
                    out[r, start + k] = a + b
                    out[r, start + k + half] = a - b
            size *= 2
    return out


def fft_rows_numba(z, inverse=False):
    z = np.ascontiguousarray(z, dtype=np.complex128)
    n = z.shape[-1]
    return _fft_rows_kernel(z, bit_reverse_permutation(n), _twiddles(n, inverse))


def fft_rows_numpy(z, inverse=False):
    z = np.asarray(z, dtype=np.complex128)
    rows, n = z.shape
    tw = _twiddles(n, inverse)
    out = z[:, bit_reverse_permutation(n)]
    size = 2
    while size <= n:
        half = size // 2
        blocks = out.reshape(rows, n // size, size)
        a = blocks[..., :half]
        b = blocks[..., half:] * tw[:: n // size][:half]
        out = np.concatenate([a + b, a - b], axis=-1).reshape(rows, n)
        size *= 2
    return out


# ---------------------------------------------------------------------------
# layer norm over the last axis (no affine part)
# ---------------------------------------------------------------------------


@njit
def _layer_norm_forward_kernel(x, eps):
    rows, n = x.shape
    xhat = np.empty_like(x)
    rstd = np.empty(rows)
    for r in range(rows):
        mu = 0.0
        for j in range(n):
            mu += x[r, j]
        mu /= n
        var = 0.0
        for j in range(n):
            d = x[r, j] - mu
            var += d * d
        var /= n
        s = 1.0 / math.sqrt(var + eps)
        rstd[r] = s
        for j in range(n):
            xhat[r, j] = (x[r, j] - mu) * s
    return xhat, rstd


@njit
def _layer_norm_backward_kernel(g, xhat, rstd):
    rows, n = g.shape
    gx = np.empty_like(g)
    for r in range(rows):
        m1 = 0.0
        m2 = 0.0
        for j in range(n):
            m1 += g[r, j]
            m2 += g[r, j] * xhat[r, j]
        m1 /= n
        m2 /= n
        for j in range(n):
            gx[r, j] = rstd[r] * (g[r, j] - m1 - xhat[r, j] * m2)
    return gx


def layer_norm_forward_numba(x, eps):
    return _layer_norm_forward_kernel(np.ascontiguousarray(x, dtype=np.float64), eps)


def layer_norm_backward_numba(g, xhat, rstd):
    return _layer_norm_backward_kernel(np.ascontiguousarray(g, dtype=np.float64), xhat, rstd)


def layer_norm_forward_numpy(x, eps):
    mu = x.mean(axis=-1, keepdims=True)
    d = x - mu
    var = np.mean(d * d, axis=-1, keepdims=True)
    rstd = 1.0 / np.sqrt(var + eps)
    return d * rstd, rstd[:, 0]


def layer_norm_backward_numpy(g, xhat, rstd):
    m1 = g.mean(axis=-1, keepdims=True)
    m2 = np.mean(g * xhat, axis=-1, keepdims=True)
    return rstd[:, None] * (g - m1 - xhat * m2)


# ---------------------------------------------------------------------------
# exact (erf) GELU, flat arrays
# ---------------------------------------------------------------------------


@njit
def _gelu_forward_kernel(x):
    out = np.empty_like(x)
    for i in range(x.size):
        v = x[i]
        out[i] = 0.5 * v * (1.0 + math.erf(v * 0.7071067811865476))
    return out


@njit
def _gelu_backward_kernel(x, g):
    out = np.empty_like(x)
    for i in range(x.size):
        v = x[i]
        cdf = 0.5 * (1.0 + math.erf(v * 0.7071067811865476))
        pdf = 0.3989422804014327 * math.exp(-0.5 * v * v)
        out[i] = g[i] * (cdf + v * pdf)
    return out


def gelu_forward_numba(x):
    flat = np.ascontiguousarray(x, dtype=np.float64).reshape(-1)
    return _gelu_forward_kernel(flat).reshape(np.shape(x))


def gelu_backward_numba(x, g):
    flat = np.ascontiguousarray(x, dtype=np.float64).reshape(-1)
    gflat = np.ascontiguousarray(g, dtype=np.float64).reshape(-1)
    return _gelu_backward_kernel(flat, gflat).reshape(np.shape(x))


def gelu_forward_numpy(x):
    return 0.5 * x * (1.0 + erf(x * _INV_SQRT2))


def gelu_backward_numpy(x, g):
    cdf = 0.5 * (1.0 + erf(x * _INV_SQRT2))
    pdf = _INV_SQRT2PI * np.exp(-0.5 * x * x)
    return g * (cdf + x * pdf)


# ---------------------------------------------------------------------------
# max-shifted softmax over rows
# ---------------------------------------------------------------------------


@njit
def _softmax_rows_kernel(logits):
    rows, n = logits.shape
    out = np.empty_like(logits)
    for r in range(rows):
        m = logits[r, 0]
        for j in range(1, n):
            if logits[r, j] > m:
                m = logits[r, j]
        s = 0.0
        for j in range(n):
            e = math.exp(logits[r, j] - m)
            out[r, j] = e
            s += e
        for j in range(n):
            out[r, j] /= s
    return out


def softmax_rows_numba(logits):
    return _softmax_rows_kernel(np.ascontiguousarray(logits, dtype=np.float64))


def softmax_rows_numpy(logits):
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


if USE_NUMBA:
    fft_rows = fft_rows_numba
    layer_norm_forward = layer_norm_forward_numba
    layer_norm_backward = layer_norm_backward_numba
    gelu_forward = gelu_forward_numba
    gelu_backward = gelu_backward_numba
    softmax_rows = softmax_rows_numba
else:
    fft_rows = fft_rows_numpy
    layer_norm_forward = layer_norm_forward_numpy
    layer_norm_backward = layer_norm_backward_numpy
    gelu_forward = gelu_forward_numpy
    gelu_backward = gelu_backward_numpy
    softmax_rows = softmax_rows_numpy

BACKEND = "numba" if USE_NUMBA else "numpy"
