"""General metric fields on S^2 x I product grids.

Components are stored in latitude/longitude/axial coordinates (theta, phi, t)
as a symmetric 3x3 block of arrays.  The scalar-curvature engine contracts
finite-difference Christoffel symbols; it is second order and is
cross-validated against the closed-form warped engine on rotationally
symmetric fields.

The reference cylinder g_cyl = dt^2 + dtheta^2 (fiber of scalar curvature
one, radius sqrt(2)) has components g_tt = 1, g_thth = 2, g_phph = 2 sin^2.
Closeness of a field to the cylinder is measured in the orthonormal cylinder
frame so that all components are O(1).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from . import fd
from .errors import InvalidMetricError
from .grids import ProductGrid
from .warped import CurvatureReport, WarpedMetric

__all__ = [
    "ProductField",
    "cylinder_field",
    "scalar_curvature_grid",
    "pullback_warped_field",
    "frame_components",
    "c2_deviation_field",
    "rotate_sphere_points",
    "angles_to_xyz",
    "xyz_to_angles",
]


def _dax(f: np.ndarray, h: float, axis: int, periodic: bool) -> np.ndarray:
    """4th-order first derivative along one axis of a 3D array."""
    if periodic:
        return (
            np.roll(f, 2, axis) - 8 * np.roll(f, 1, axis)
            + 8 * np.roll(f, -1, axis) - np.roll(f, -2, axis)
        ) / (12 * h)
    out = np.empty_like(f)
    sl = lambda s: tuple(s if a == axis else slice(None) for a in range(f.ndim))
    out[sl(slice(2, -2))] = (
        f[sl(slice(0, -4))] - 8 * f[sl(slice(1, -3))]
        + 8 * f[sl(slice(3, -1))] - f[sl(slice(4, None))]
    ) / (12 * h)
    w0 = fd.fornberg_weights(0.0, np.arange(6.0), 1)
    w1 = fd.fornberg_weights(1.0, np.arange(6.0), 1)
    first = np.stack([f[sl(k)] for k in range(6)])
    last = np.stack([f[sl(-1 - k)] for k in range(6)])
    out[sl(0)] = np.tensordot(w0, first, axes=1) / h
    out[sl(1)] = np.tensordot(w1, first, axes=1) / h
    out[sl(-1)] = -np.tensordot(w0, last, axes=1) / h
    out[sl(-2)] = -np.tensordot(w1, last, axes=1) / h
    return out


@dataclass(frozen=True)
class ProductField:
    """Symmetric 2-tensor field (a metric) on an S^2 x I product grid."""

    grid: ProductGrid
    comps: np.ndarray  # shape (3, 3, n_theta, n_phi, n_t), symmetric in (0, 1)
    eps_param: float = 0.05

    def __post_init__(self):
        c = np.asarray(self.comps, dtype=float)
        object.__setattr__(self, "comps", c)
        if self.eps_param <= 0:
            raise InvalidMetricError("eps_param must be positive")
        if c.shape != (3, 3) + self.grid.shape:
            raise InvalidMetricError("component array shape does not match grid")
        if not np.allclose(c, np.swapaxes(c, 0, 1), atol=1e-12):
            raise InvalidMetricError("metric components must be symmetric")

    def check_spd(self):
        """Raise unless the field is pointwise symmetric positive definite."""
        m = np.moveaxis(self.comps, (0, 1), (-2, -1))
        d1 = m[..., 0, 0]
        d2 = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] ** 2
        d3 = np.linalg.det(m)
        if np.any(d1 <= 0) or np.any(d2 <= 0) or np.any(d3 <= 0):
            raise InvalidMetricError("metric field is not positive definite everywhere")

    def interpolator(self, method: str = "cubic"):
        """Component interpolator over (theta, phi, t), phi periodic."""
        g = self.grid
        phi_ext = np.concatenate([g.phi, [2 * np.pi]])
        comps_ext = np.concatenate([self.comps, self.comps[:, :, :, :1, :]], axis=3)
        interps = [
            [
                RegularGridInterpolator(
                    (g.theta, phi_ext, g.t), comps_ext[i, j], method=method,
                    bounds_error=False, fill_value=None,
                )
                for j in range(3)
            ]
            for i in range(3)
        ]

        def ev(theta, phi, t):
            pts = np.stack(
                [np.asarray(theta), np.mod(np.asarray(phi), 2 * np.pi), np.asarray(t)],
                axis=-1,
            )
            out = np.empty((3, 3) + pts.shape[:-1])
            for i in range(3):
                for j in range(i, 3):
                    out[i, j] = interps[i][j](pts)
                    out[j, i] = out[i, j]
            return out

        return ev


def cylinder_field(grid: ProductGrid, scale: float = 1.0, eps: float = 0.05) -> ProductField:
    """The product metric scale^2 * (dt^2 + dtheta^2) sampled on the grid."""
    th = grid.theta[:, None, None]
    c = np.zeros((3, 3) + grid.shape)
    c[0, 0] = 2.0 * np.ones(grid.shape)
    c[1, 1] = 2.0 * np.sin(th) ** 2 * np.ones(grid.shape)
    c[2, 2] = np.ones(grid.shape)
    return ProductField(grid=grid, comps=c * scale**2, eps_param=eps)


def pullback_warped_field(
    m: WarpedMetric, grid: ProductGrid, center: float = None, scale: float = 1.0,
    orientation: int = 1, eps: float = 0.05,
) -> ProductField:
    """Sample psi*(g) of a warped metric, psi(theta, t) = (theta, c + s*h*t)."""
    if m.lapse is not None:
        raise InvalidMetricError("pullback expects an arclength-form warped metric")
    c0 = 0.5 * (m.grid.a + m.grid.b) if center is None else center
    r_of_t = c0 + orientation * scale * grid.t
    if np.min(r_of_t) < m.grid.a - 1e-12 or np.max(r_of_t) > m.grid.b + 1e-12:
        raise InvalidMetricError("pullback window exits the warped domain")
    from scipy.interpolate import CubicSpline

    w_t = (m.profile.w(r_of_t) if m.profile is not None
           else CubicSpline(m.r, m.w)(r_of_t))
    th = grid.theta[:, None, None]
    w2 = (w_t[None, None, :] ** 2) * np.ones(grid.shape)
    c = np.zeros((3, 3) + grid.shape)
    c[0, 0] = 2.0 * w2
    c[1, 1] = 2.0 * w2 * np.sin(th) ** 2
    c[2, 2] = scale**2 * np.ones(grid.shape)
    return ProductField(grid=grid, comps=c, eps_param=eps)


def scalar_curvature_grid(
    t: ProductField, theta_margin: int = 3, trim: int = 2
) -> CurvatureReport:
    """Scalar curvature at interior grid nodes by Christoffel contraction.

    Latitude rows within `theta_margin` cells of a fiber pole are excluded
    (coordinate singularity of the chart), as are `trim` cells at the ends of
    the non-periodic axes where the second derivative pass is one-sided.
    """
    t.check_spd()
    g = t.comps
    gr = t.grid
    hs = (gr.d_theta, gr.d_phi, gr.d_t)
    per = (False, True, False)

    m = np.moveaxis(g, (0, 1), (-2, -1))
    ginv = np.moveaxis(np.linalg.inv(m), (-2, -1), (0, 1))

    # Only the (smooth) metric components are differenced; Gamma and dGamma
    # are assembled algebraically so chart-singular factors like cot(theta)
    # never pass through a stencil.
    dg = np.empty((3, 3, 3) + gr.shape)  # dg[l, i, j] = d_l g_ij
    for l in range(3):
        for i in range(3):
            for j in range(i, 3):
                dg[l, i, j] = _dax(g[i, j], hs[l], l, per[l])
                dg[l, j, i] = dg[l, i, j]
    ddg = np.empty((3, 3, 3, 3) + gr.shape)  # ddg[l, m, i, j] = d_l d_m g_ij
    for l in range(3):
        for mx in range(3):
            for i in range(3):
                for j in range(i, 3):
                    ddg[l, mx, i, j] = _dax(dg[mx, i, j], hs[l], l, per[l])
                    ddg[l, mx, j, i] = ddg[l, mx, i, j]

    # C[m, i, j] = d_i g_jm + d_j g_im - d_m g_ij  (2 * lower Christoffel)
    C = (np.einsum("ijm...->mij...", dg) + np.einsum("jim...->mij...", dg)
         - np.einsum("mij...->mij...", dg))
    Gam = 0.5 * np.einsum("km...,mij...->kij...", ginv, C)

    # dC[l, m, i, j] = d_l C[m, i, j]
    dC = (np.einsum("lijm...->lmij...", ddg) + np.einsum("ljim...->lmij...", ddg)
          - ddg)
    dginv = -np.einsum("ka...,mb...,lab...->lkm...", ginv, ginv, dg)
    dGam = 0.5 * (
        np.einsum("lkm...,mij...->lkij...", dginv, C)
        + np.einsum("km...,lmij...->lkij...", ginv, dC)
    )

    Ric = (
        np.einsum("kkij...->ij...", dGam)
        - np.einsum("jkik...->ij...", dGam)
        + np.einsum("kkl...,lij...->ij...", Gam, Gam)
        - np.einsum("kjl...,lik...->ij...", Gam, Gam)
    )
    R = np.einsum("ij...,ij...->...", ginv, Ric)

    th_sl = slice(theta_margin, gr.n_theta - theta_margin)
    t_sl = slice(trim, gr.n_t - trim)
    Rint = R[th_sl, :, t_sl]
    TH, PH, T = np.meshgrid(gr.theta[th_sl], gr.phi, gr.t[t_sl], indexing="ij")
    where = np.stack([TH.ravel(), PH.ravel(), T.ravel()], axis=1)
    return CurvatureReport(
        R=Rint.ravel(), where=where,
        meta={"engine": "grid", "shape": Rint.shape, "theta_margin": theta_margin,
              "trim": trim, "spacing": hs},
    )


# -- cylinder-frame closeness ---------------------------------------------


def frame_components(t: ProductField) -> np.ndarray:
    """Components in the orthonormal frame of g_cyl; cylinder -> identity."""
    g = t.comps
    s = np.sin(t.grid.theta)[:, None, None]
    rt2 = np.sqrt(2.0)
    f = np.empty_like(g)
    f[0, 0] = g[0, 0] / 2.0
    f[1, 1] = g[1, 1] / (2.0 * s**2)
    f[2, 2] = g[2, 2]
    f[0, 1] = f[1, 0] = g[0, 1] / (2.0 * s)
    f[0, 2] = f[2, 0] = g[0, 2] / rt2
    f[1, 2] = f[2, 1] = g[1, 2] / (rt2 * s)
    return f


def c2_deviation_field(
    t: ProductField, scale: float = 1.0, theta_margin: int = 3
) -> float:
    """Discrete C^2 distance of scale^-2 * field from g_cyl (frame norm)."""
    dev = frame_components(t) / scale**2
    for i in range(3):
        dev[i, i] -= 1.0
    gr = t.grid
    s = np.sin(gr.theta)[:, None, None]
    # physical arclength steps of the three coordinate directions
    steps = (np.sqrt(2.0) * gr.d_theta, np.sqrt(2.0) * s * gr.d_phi, gr.d_t)
    sl = (slice(None), slice(None), slice(theta_margin, gr.n_theta - theta_margin))
    vals = [np.max(np.abs(dev[sl]))]
    for ax, hstep in enumerate(steps):
        d1 = _diff_axis(dev, ax)
        h1 = hstep if np.isscalar(hstep) else _crop_axis(np.broadcast_to(hstep, dev.shape), ax)
        vals.append(np.max(np.abs(d1 / h1)[sl]))
        d2 = _diff_axis(d1, ax)
        h2 = hstep if np.isscalar(hstep) else _crop_axis(_crop_axis(np.broadcast_to(hstep, dev.shape), ax), ax)
        vals.append(np.max(np.abs(d2 / (h2 * h2 if np.isscalar(h2) else h2**2))[sl]))
    return float(max(vals))


def _diff_axis(f: np.ndarray, ax: int) -> np.ndarray:
    axis = 2 + ax
    if ax == 1:  # periodic longitude
        return np.roll(f, -1, axis) - f
    return np.diff(f, axis=axis)


def _crop_axis(f: np.ndarray, ax: int) -> np.ndarray:
    axis = 2 + ax
    if ax == 1:
        return f
    sl = tuple(slice(0, -1) if a == axis else slice(None) for a in range(f.ndim))
    return f[sl]


# -- sphere rotations ------------------------------------------------------


def angles_to_xyz(theta, phi) -> np.ndarray:
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    return np.stack(
        [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)], axis=-1
    )


def xyz_to_angles(p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(p, dtype=float)
    theta = np.arccos(np.clip(p[..., 2], -1.0, 1.0))
    phi = np.mod(np.arctan2(p[..., 1], p[..., 0]), 2 * np.pi)
    return theta, phi


def rotate_sphere_points(A: np.ndarray, theta, phi):
    """Angles of A.p for unit-sphere points p given by (theta, phi)."""
    return xyz_to_angles(angles_to_xyz(theta, phi) @ np.asarray(A).T)
