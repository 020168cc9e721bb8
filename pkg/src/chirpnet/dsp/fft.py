"""Discrete Fourier transforms written directly on numpy arrays.

Forward convention: X[k] = sum_n x[n] exp(-2j*pi*n*k/N), no normalization.
Power-of-two lengths take an iterative radix-2 path vectorized over a batch
axis; every other length falls back to the quadratic direct evaluation,
which doubles as the verification oracle.
"""

from __future__ import annotations

import numpy as np

from ..errors import DegenerateInputError


def bit_reverse_indices(n: int) -> np.ndarray:
    """Permutation that orders indices by reversed bit patterns."""
    levels = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.intp)
    for _ in range(levels):
        rev = (rev << 1) | (idx & 1)
        idx >>= 1
    return rev


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def _fft_radix2(a: np.ndarray) -> np.ndarray:
    """In-order radix-2 transform of (batch, N) complex rows, N a power of two."""
    b, n = a.shape
    if n == 1:
        return a.copy()
    a = a[:, bit_reverse_indices(n)]
    size = 2
    while size <= n:
        half = size // 2
        tw = np.exp(-2j * np.pi * np.arange(half) / size)
        blocks = a.reshape(b, n // size, size)
        even = blocks[:, :, :half]
        odd = blocks[:, :, half:] * tw
        a = np.concatenate([even + odd, even - odd], axis=2).reshape(b, n)
        size *= 2
    return a


def naive_dft(x: np.ndarray) -> np.ndarray:
    """Direct O(N^2) evaluation of the forward transform, any length."""
    x = np.asarray(x)
    if x.size == 0:
        raise DegenerateInputError("cannot transform an empty signal")
    squeeze = x.ndim == 1
    xm = x[None] if squeeze else x
    n = xm.shape[-1]
    k = np.arange(n)
    twiddle = np.exp(-2j * np.pi * np.outer(k, k) / n)
    out = xm.astype(np.complex128) @ twiddle
    return out[0] if squeeze else out


def fft(x: np.ndarray) -> np.ndarray:
    """Full forward transform; radix-2 when the length is a power of two."""
    x = np.asarray(x)
    if x.size == 0:
        raise DegenerateInputError("cannot transform an empty signal")
    squeeze = x.ndim == 1
    xm = x[None] if squeeze else x
    n = xm.shape[-1]
    if _is_pow2(n):
        out = _fft_radix2(xm.astype(np.complex128))
    else:
        out = naive_dft(xm)
    return out[0] if squeeze else out


def ifft(x: np.ndarray) -> np.ndarray:
    """Inverse transform with the 1/N normalization."""
    x = np.asarray(x, dtype=np.complex128)
    n = x.shape[-1]
    return np.conj(fft(np.conj(x))) / n


def dft(frame: np.ndarray) -> np.ndarray:
    """Half spectrum of a real frame: bins 0..N/2 (inclusive)."""
    frame = np.asarray(frame)
    n = frame.shape[-1]
    full = fft(frame)
    return full[..., : n // 2 + 1]


def power_spectrum(frame: np.ndarray) -> np.ndarray:
    """|X_k|^2 over the half spectrum of a real frame (or batch of frames)."""
    half = dft(frame)
    return (half.real * half.real + half.imag * half.imag).astype(np.float64)
