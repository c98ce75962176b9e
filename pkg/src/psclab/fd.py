"""Finite-difference stencils.

Interior nodes use 4th-order central stencils; boundary nodes use 4th-order
one-sided stencils with weights generated by Fornberg's algorithm, so the
whole derivative is uniformly 4th order on smooth data.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

__all__ = ["fornberg_weights", "d1", "d2", "d1_periodic", "d2_periodic"]


def fornberg_weights(z: float, x: np.ndarray, m: int) -> np.ndarray:
    """Weights of the m-th derivative at z from samples at nodes x."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    c = np.zeros((n, m + 1))
    c1 = 1.0
    c4 = x[0] - z
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, m]


@lru_cache(maxsize=64)
def _boundary_weights(m: int, width: int):
    """One-sided weights (unit spacing) for the first `2` boundary nodes."""
    x = np.arange(width, dtype=float)
    w0 = fornberg_weights(0.0, x, m)
    w1 = fornberg_weights(1.0, x, m)
    return w0, w1


def d1(f: np.ndarray, h: float) -> np.ndarray:
    """4th-order first derivative of a uniformly sampled array."""
    f = np.asarray(f, dtype=float)
    n = len(f)
    out = np.empty_like(f)
    out[2:-2] = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * h)
    w0, w1 = _boundary_weights(1, 6)
    out[0] = np.dot(w0, f[:6]) / h
    out[1] = np.dot(w1, f[:6]) / h
    out[-1] = -np.dot(w0, f[-6:][::-1]) / h
    out[-2] = -np.dot(w1, f[-6:][::-1]) / h
    return out


def d2(f: np.ndarray, h: float) -> np.ndarray:
    """4th-order second derivative of a uniformly sampled array."""
    f = np.asarray(f, dtype=float)
    out = np.empty_like(f)
    out[2:-2] = (-f[:-4] + 16 * f[1:-3] - 30 * f[2:-2] + 16 * f[3:-1] - f[4:]) / (12 * h * h)
    w0, w1 = _boundary_weights(2, 7)
    out[0] = np.dot(w0, f[:7]) / (h * h)
    out[1] = np.dot(w1, f[:7]) / (h * h)
    out[-1] = np.dot(w0, f[-7:][::-1]) / (h * h)
    out[-2] = np.dot(w1, f[-7:][::-1]) / (h * h)
    return out


def d1_periodic(f: np.ndarray, h: float) -> np.ndarray:
    """4th-order first derivative of a periodic sample array (period = n*h)."""
    f = np.asarray(f, dtype=float)
    return (np.roll(f, 2) - 8 * np.roll(f, 1) + 8 * np.roll(f, -1) - np.roll(f, -2)) / (12 * h)


def d2_periodic(f: np.ndarray, h: float) -> np.ndarray:
    """4th-order second derivative of a periodic sample array."""
    f = np.asarray(f, dtype=float)
    return (
        -np.roll(f, 2) + 16 * np.roll(f, 1) - 30 * f + 16 * np.roll(f, -1) - np.roll(f, -2)
    ) / (12 * h * h)
