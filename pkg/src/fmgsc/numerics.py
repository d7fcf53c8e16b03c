"""Unitary DFT, circular convolution and power statistics."""

from __future__ import annotations

import numpy as np

from ._validation import check_complex_vector

__all__ = ["dft", "idft", "circular_convolve", "mean_power", "energy"]


def dft(v) -> np.ndarray:
    """Unitary DFT, ``F v`` with ``F^H F = I``."""
    v = check_complex_vector(v, "v")
    return np.fft.fft(v, norm="ortho")


def idft(v) -> np.ndarray:
    """Unitary inverse DFT (the adjoint of :func:`dft`)."""
    v = check_complex_vector(v, "v")
    return np.fft.ifft(v, norm="ortho")


def circular_convolve(a, b) -> np.ndarray:
    """Circular convolution ``c[m] = sum_l a[l] b[(m - l) mod n]``.

    Computed through the FFT; under the unitary convention this is
    ``sqrt(n) * idft(dft(a) * dft(b))``.
    """
    a = check_complex_vector(a, "a")
    b = check_complex_vector(b, "b")
    if a.size != b.size:
        raise ValueError(f"length mismatch: {a.size} != {b.size}")
    return np.fft.ifft(np.fft.fft(a) * np.fft.fft(b))


def energy(v) -> float:
    v = np.asarray(v)
    return float(np.sum(np.abs(v) ** 2))


def mean_power(v) -> float:
    v = np.asarray(v)
    if v.size == 0:
        raise ValueError("empty input")
    return float(np.mean(np.abs(v) ** 2))
