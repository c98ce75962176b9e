"""Conformal transformation laws for scalar and Gauss curvature.

For n >= 3 and g~ = u^(4/(n-2)) g,

    R~ = u^(-(n+2)/(n-2)) ( -(4(n-1)/(n-2)) Lap_g u + R_g u ),

so positivity of R~ is convex in u over a fixed g; for n = 2 and g~ = e^f g,
K~ = e^-f (K - Lap_g f / 2).  Both identities are checked against the
computer-algebra oracle in the tests.
"""

from __future__ import annotations

import numpy as np

from . import fd
from .errors import DomainError, InvalidMetricError
from .product import ProductField, _dax, scalar_curvature_grid
from .warped import CurvatureReport, Metric2D, WarpedMetric, scalar_curvature_warped

__all__ = [
    "warped_laplacian",
    "conformal_scalar_curvature",
    "gauss_curvature_conformal",
    "grid_laplacian",
]


def warped_laplacian(m: WarpedMetric, u: np.ndarray) -> np.ndarray:
    """Laplace-Beltrami of a radial function on a warped metric.

    Lap u = u_ss + (n-1) (w_s / w) u_s with s the arclength; capped poles use
    the smooth limit n * u_ss.
    """
    h = m.grid.spacing
    u = np.asarray(u, dtype=float)
    lp = m.lapse_array()
    u_r, u_rr = fd.d1(u, h), fd.d2(u, h)
    w_r = fd.d1(m.w, h)
    lp_r = fd.d1(lp, h)
    u_s = u_r / lp
    u_ss = u_rr / lp**2 - u_r * lp_r / lp**3
    w_s = w_r / lp
    out = np.empty_like(u)
    with np.errstate(divide="ignore", invalid="ignore"):
        out[:] = u_ss + (m.dim - 1) * (w_s / m.w) * u_s
    if m.topology in ("capped_left", "capped_both"):
        out[0] = m.dim * u_ss[0]
    if m.topology in ("capped_right", "capped_both"):
        out[-1] = m.dim * u_ss[-1]
    return out


def conformal_scalar_curvature(m, u: np.ndarray, engine: str = "auto") -> CurvatureReport:
    """Scalar curvature of u^(4/(n-2)) g via the conformal identity."""
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0):
        j = int(np.argmax(u <= 0))
        raise DomainError(f"conformal factor not positive at sample {j}")
    if isinstance(m, WarpedMetric):
        n = m.dim
        base = scalar_curvature_warped(m, engine=engine)
        lap = warped_laplacian(m, u)
        R = u ** (-(n + 2.0) / (n - 2.0)) * (-(4.0 * (n - 1) / (n - 2)) * lap + base.R * u)
        return CurvatureReport(R=R, where=m.r, meta={"engine": "conformal-identity"})
    if isinstance(m, ProductField):
        if u.shape != m.grid.shape:
            raise InvalidMetricError("u samples must live on the product grid")
        base = scalar_curvature_grid(m)
        lap = grid_laplacian(m, u)
        margin, trim = base.meta["theta_margin"], base.meta["trim"]
        th_sl = slice(margin, m.grid.n_theta - margin)
        t_sl = slice(trim, m.grid.n_t - trim)
        ui = u[th_sl, :, t_sl].ravel()
        lapi = lap[th_sl, :, t_sl].ravel()
        R = ui**-5.0 * (-8.0 * lapi + base.R * ui)
        return CurvatureReport(R=R, where=base.where, meta={"engine": "conformal-identity"})
    raise InvalidMetricError("unsupported metric type for conformal_scalar_curvature")


def grid_laplacian(t: ProductField, u: np.ndarray) -> np.ndarray:
    """Laplace-Beltrami on a product-grid field, divergence form."""
    g = t.comps
    gr = t.grid
    hs = (gr.d_theta, gr.d_phi, gr.d_t)
    per = (False, True, False)
    m = np.moveaxis(g, (0, 1), (-2, -1))
    ginv = np.moveaxis(np.linalg.inv(m), (-2, -1), (0, 1))
    sqg = np.sqrt(np.linalg.det(m))
    du = np.stack([_dax(u, hs[l], l, per[l]) for l in range(3)])
    flux = np.einsum("ij...,j...->i...", ginv, du) * sqg
    div = sum(_dax(flux[l], hs[l], l, per[l]) for l in range(3))
    return div / sqg


def gauss_curvature_conformal(g2d: Metric2D, f: np.ndarray) -> CurvatureReport:
    """Gauss curvature of e^f g for a rotationally symmetric metric on S^2."""
    f = np.asarray(f, dtype=float)
    K = np.exp(-f) * (g2d.gauss_curvature() - 0.5 * g2d.laplacian(f))
    return CurvatureReport(R=K, where=g2d.grid.r, meta={"engine": "gauss-conformal"})
