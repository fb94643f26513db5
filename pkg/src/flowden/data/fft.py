"""Orthonormal 2-D DFT on square images.

Power-of-two sizes go through the radix-2 kernel in :mod:`flowden.kernels`;
other sizes use a dense DFT matrix.
"""
import numpy as np

from .. import kernels
from ..errors import ShapeError


def _dft_matrix(n, inverse):
    sign = 1.0 if inverse else -1.0
    k = np.arange(n)
    return np.exp(sign * 2j * np.pi * np.outer(k, k) / n)


def _transform_last(z, inverse):
    n = z.shape[-1]
    flat = z.reshape(-1, n)
    if kernels.is_power_of_two(n):
        out = kernels.fft_rows(flat, inverse)
    else:
        out = flat @ _dft_matrix(n, inverse)
    return out.reshape(z.shape)


def _fft2(x, inverse):
    x = np.asarray(x)
    if x.ndim < 2 or x.shape[-1] != x.shape[-2]:
        raise ShapeError("fft2", x.shape, detail="expected (..., N, N)")
    n = x.shape[-1]
    z = x.astype(np.complex128)
    z = _transform_last(z, inverse)
    z = np.swapaxes(_transform_last(np.swapaxes(z, -1, -2), inverse), -1, -2)
    return z / n


def fft2(x):
    """Forward orthonormal transform over the last two axes."""
    return _fft2(x, inverse=False)


def ifft2(x):
    """Inverse orthonormal transform over the last two axes."""
    return _fft2(x, inverse=True)
