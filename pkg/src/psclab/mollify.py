"""Smooth cutoff machinery shared by necks, surgery and curve building.

All transitions in the toolkit are built from the classical bump
``b(x) = exp(-1/x)`` so every blend is C-infinity with exact plateaus.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "smoothstep",
    "smoothstep_d1",
    "smoothstep_d2",
    "plateau",
    "eta_cutoff",
    "eta_cutoff_d1",
    "eta_cutoff_d2",
    "bump",
    "ETA_C2_NORM",
]


def _b(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def smoothstep(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1, strictly monotone between."""
    x = np.asarray(x, dtype=float)
    num = _b(x)
    den = num + _b(1.0 - x)
    return num / den


def _uv(x):
    inside = (x > 0) & (x < 1)
    xi = np.where(inside, x, 0.5)
    u, v = np.exp(-1.0 / xi), np.exp(-1.0 / (1.0 - xi))
    return inside, xi, u, v


def smoothstep_d1(x):
    """Analytic first derivative of smoothstep (0 outside (0, 1))."""
    x = np.asarray(x, dtype=float)
    inside, xi, u, v = _uv(x)
    P = 1.0 / xi**2 + 1.0 / (1.0 - xi) ** 2
    out = u * v * P / (u + v) ** 2
    return np.where(inside, out, 0.0)


def smoothstep_d2(x):
    """Analytic second derivative of smoothstep (0 outside (0, 1))."""
    x = np.asarray(x, dtype=float)
    inside, xi, u, v = _uv(x)
    y = 1.0 - xi
    P = 1.0 / xi**2 + 1.0 / y**2
    Pp = -2.0 / xi**3 + 2.0 / y**3
    D = u + v
    Dp = u / xi**2 - v / y**2
    N = u * v * P
    # d(uv)/dx = u'v + uv' = uv (1/x^2 - 1/y^2)
    duv = u * v * (1.0 / xi**2 - 1.0 / y**2)
    Np = duv * P + u * v * Pp
    out = (Np - 2.0 * N * Dp / D) / D**2
    return np.where(inside, out, 0.0)


def plateau(x, x0, x1):
    """Smooth ramp equal to 0 for x <= x0 and 1 for x >= x1."""
    if not x1 > x0:
        raise ValueError("plateau needs x1 > x0")
    return smoothstep((np.asarray(x, dtype=float) - x0) / (x1 - x0))


def eta_cutoff(t):
    """Transition cutoff: identically 1 for t <= -1 and 0 for t >= 1.

    This is the profile used to splice neck parametrizations and to
    interpolate cylinder scales; it only promises the two plateaus.
    """
    return 1.0 - smoothstep((np.asarray(t, dtype=float) + 1.0) / 2.0)


def eta_cutoff_d1(t):
    return -0.5 * smoothstep_d1((np.asarray(t, dtype=float) + 1.0) / 2.0)


def eta_cutoff_d2(t):
    return -0.25 * smoothstep_d2((np.asarray(t, dtype=float) + 1.0) / 2.0)


def bump(x, x0, x1):
    """Smooth bump supported on [x0, x1] with unit peak plateau-free shape."""
    if not x1 > x0:
        raise ValueError("bump needs x1 > x0")
    mid = 0.5 * (x0 + x1)
    return plateau(x, x0, mid) * (1.0 - plateau(x, mid, x1))


def _c2_norm_of_eta(n: int = 20001) -> tuple[float, float, float]:
    t = np.linspace(-1.5, 1.5, n)
    h = t[1] - t[0]
    e = eta_cutoff(t)
    d1 = np.gradient(e, h)
    d2 = np.gradient(d1, h)
    return float(np.max(np.abs(e))), float(np.max(np.abs(d1))), float(np.max(np.abs(d2)))


# sup norms of (eta, eta', eta'') used in error budgets; fixed by the shape above
ETA_C2_NORM = _c2_norm_of_eta()
