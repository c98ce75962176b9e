"""Grid containers: radial intervals, S^2 x I product grids, cube grids."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidMetricError

__all__ = ["RadialGrid", "ProductGrid", "CubeGrid"]


@dataclass(frozen=True)
class RadialGrid:
    """Uniform 1D grid over the interval (a, b) in geometric length units."""

    a: float
    b: float
    n_points: int

    def __post_init__(self):
        if self.n_points < 5:
            raise InvalidMetricError("RadialGrid needs n_points >= 5 (4th-order stencils)")
        if not self.b > self.a:
            raise InvalidMetricError("RadialGrid needs b > a")

    @property
    def spacing(self) -> float:
        return (self.b - self.a) / (self.n_points - 1)

    @property
    def r(self) -> np.ndarray:
        return np.linspace(self.a, self.b, self.n_points)

    def refined(self, factor: int = 2) -> "RadialGrid":
        return RadialGrid(self.a, self.b, (self.n_points - 1) * factor + 1)


@dataclass(frozen=True)
class ProductGrid:
    """Latitude-longitude x interval grid for S^2 x (t0, t1).

    Latitudes are cell-centered (no node sits on a fiber pole) which keeps
    all metric component arrays finite; longitude is periodic.
    """

    n_theta: int = 32
    n_phi: int = 64
    t0: float = -20.0
    t1: float = 20.0
    n_t: int = 81

    def __post_init__(self):
        if self.n_theta < 8 or self.n_phi < 8 or self.n_t < 5:
            raise InvalidMetricError("ProductGrid resolution below configured minimum")
        if not self.t1 > self.t0:
            raise InvalidMetricError("ProductGrid needs t1 > t0")

    @property
    def theta(self) -> np.ndarray:
        return (np.arange(self.n_theta) + 0.5) * np.pi / self.n_theta

    @property
    def phi(self) -> np.ndarray:
        return np.arange(self.n_phi) * 2.0 * np.pi / self.n_phi

    @property
    def t(self) -> np.ndarray:
        return np.linspace(self.t0, self.t1, self.n_t)

    @property
    def d_theta(self) -> float:
        return np.pi / self.n_theta

    @property
    def d_phi(self) -> float:
        return 2.0 * np.pi / self.n_phi

    @property
    def d_t(self) -> float:
        return (self.t1 - self.t0) / (self.n_t - 1)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n_theta, self.n_phi, self.n_t)


@dataclass(frozen=True)
class CubeGrid:
    """Uniform cube grid [-L, L]^3 used by the asymptotically flat pipeline."""

    L: float = 32.0
    n: int = 64

    def __post_init__(self):
        if self.n < 8:
            raise InvalidMetricError("CubeGrid needs n >= 8")

    @property
    def x(self) -> np.ndarray:
        return np.linspace(-self.L, self.L, self.n)

    @property
    def h(self) -> float:
        return 2.0 * self.L / (self.n - 1)

    def mesh(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        x = self.x
        return np.meshgrid(x, x, x, indexing="ij")

    def radius(self) -> np.ndarray:
        X, Y, Z = self.mesh()
        return np.sqrt(X * X + Y * Y + Z * Z)
