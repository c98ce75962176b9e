import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from psclab.grids import RadialGrid
from psclab.mollify import plateau
from psclab.warped import Profile, WarpedMetric


def dumbbell_flat_ends(n_points: int = 201, depth: float = 0.4) -> WarpedMetric:
    """Dumbbell profile with exactly cylindrical end bands on (-8, 8)."""
    grid = RadialGrid(-8.0, 8.0, n_points)
    r = grid.r
    band = plateau(r, -5.0, -3.0) * (1.0 - plateau(r, 3.0, 5.0))
    w = 1.0 - depth * np.exp(-(r**2) / 2.0) * band
    return WarpedMetric(grid=grid, w=w)


def perturbed_cylinder(
    n_points: int = 801,
    a: float = -4.0,
    b: float = 4.0,
    amplitude: float = 0.005,
    seed: int = 0,
    modes: int = 4,
) -> WarpedMetric:
    """Random low-mode perturbation of the cylinder with a closed form."""
    rng = np.random.default_rng(seed)
    coeffs = rng.normal(size=modes) * amplitude / modes
    phases = rng.uniform(0, 2 * np.pi, size=modes)
    ks = (np.arange(modes) + 1) * np.pi / (b - a)

    def w(r):
        r = np.asarray(r)
        out = 1.0 + sum(c * np.cos(k * r + p) for c, k, p in zip(coeffs, ks, phases))
        return out

    def dw(r):
        r = np.asarray(r)
        return sum(-c * k * np.sin(k * r + p) for c, k, p in zip(coeffs, ks, phases))

    def d2w(r):
        r = np.asarray(r)
        return sum(-c * k * k * np.cos(k * r + p) for c, k, p in zip(coeffs, ks, phases))

    grid = RadialGrid(a, b, n_points)
    return WarpedMetric(grid=grid, w=w(grid.r), profile=Profile(w=w, dw=dw, d2w=d2w))


@pytest.fixture
def dumbbell():
    return dumbbell_flat_ends()
