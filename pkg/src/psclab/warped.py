"""Rotationally symmetric metrics g = lapse(r)^2 dr^2 + w(r)^2 dtheta^2 and
their curvature.

Conventions
-----------
The fiber metric ``dtheta^2`` is the round S^(n-1) of scalar curvature one.
For n = 3 that sphere has Gauss curvature 1/2 and radius sqrt(2), so a smooth
pole (cap) requires w -> 0 with |dw/ds| -> 1/sqrt(2), where s is arclength.
With that normalization the curvature of a 3-dimensional warped product is

    K_rad = -w_ss / w                (planes containing the radial direction)
    K_sph = (1/2 - w_s^2) / w^2      (planes tangent to the fiber)
    R     = 4 K_rad + 2 K_sph
          = 1/w^2 - 4 w_ss/w - 2 w_s^2/w^2,

all validated against a computer-algebra oracle in the test suite.  The
neckpinch-flow module uses unit-radius fibers instead; conversion helpers
live at the bottom of this file.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from . import fd
from .errors import InvalidMetricError, PoleConditionError
from .grids import RadialGrid

__all__ = [
    "FIBER_GAUSS",
    "POLE_SLOPE",
    "Profile",
    "WarpedMetric",
    "Metric2D",
    "CurvatureReport",
    "scalar_curvature_warped",
    "sectional_curvatures_warped",
    "profile_curvature",
    "cylinder_metric",
    "round_sphere_metric",
    "resample_arclength",
    "c2_deviation_from_cylinder",
    "w_from_unit_fiber",
    "psi_to_unit_fiber",
]

# Gauss curvature of the scalar-curvature-one fiber sphere (n = 3).
FIBER_GAUSS = 0.5
# |dw/ds| at a smooth pole under this normalization.
POLE_SLOPE = 1.0 / np.sqrt(2.0)

POLE_SLOPE_TOL = 1e-6
_POLE_W_RELTOL = 1e-7


@dataclass(frozen=True)
class Profile:
    """Closed-form warping profile with optional analytic derivatives.

    Missing derivatives fall back to complex-step differentiation, which is
    accurate to ~1e-8; supply dw/d2w when 1e-10 agreement is required.
    """

    w: Callable[[np.ndarray], np.ndarray]
    dw: Callable[[np.ndarray], np.ndarray] | None = None
    d2w: Callable[[np.ndarray], np.ndarray] | None = None

    def deriv1(self, r):
        if self.dw is not None:
            return np.asarray(self.dw(r), dtype=float)
        h = 1e-7
        return np.imag(self.w(np.asarray(r, dtype=complex) + 1j * h)) / h

    def deriv2(self, r):
        if self.d2w is not None:
            return np.asarray(self.d2w(r), dtype=float)
        d = 1e-4
        return (self.deriv1(np.asarray(r) + d) - self.deriv1(np.asarray(r) - d)) / (2 * d)


TOPOLOGIES = ("cylinder", "capped_left", "capped_right", "capped_both", "periodic")


@dataclass(frozen=True)
class WarpedMetric:
    """Sampled rotationally symmetric metric lapse^2 dr^2 + w^2 dtheta^2.

    ``lapse is None`` means arclength parametrization (lapse == 1).  Pole
    samples of capped topologies carry w == 0 exactly; every other sample
    must be strictly positive.
    """

    grid: RadialGrid
    w: np.ndarray
    dim: int = 3
    topology: str = "cylinder"
    lapse: np.ndarray | None = None
    profile: Profile | None = None

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        object.__setattr__(self, "w", w)
        if self.lapse is not None:
            lp = np.asarray(self.lapse, dtype=float)
            object.__setattr__(self, "lapse", lp)
            if lp.shape != w.shape:
                raise InvalidMetricError("lapse and w must share the grid")
            if np.any(lp <= 0):
                raise InvalidMetricError("lapse must be strictly positive")
        if self.dim < 3:
            raise InvalidMetricError("warped metrics here have dim >= 3")
        if self.topology not in TOPOLOGIES:
            raise InvalidMetricError(f"unknown topology tag {self.topology!r}")
        if w.shape != (self.grid.n_points,):
            raise InvalidMetricError("w samples must match the grid")
        self._validate_positivity()
        self._validate_poles()

    # -- validation -----------------------------------------------------

    def _validate_positivity(self):
        w = self.w
        interior = np.ones(len(w), dtype=bool)
        if self.topology in ("capped_left", "capped_both"):
            interior[0] = False
        if self.topology in ("capped_right", "capped_both"):
            interior[-1] = False
        if np.any(w[interior] <= 0):
            j = int(np.argmax(interior & (w <= 0)))
            raise InvalidMetricError(
                f"non-positive warping sample w[{j}] = {w[j]:.3e} at r = {self.grid.r[j]:.6g}"
            )

    def _validate_poles(self):
        w, h = self.w, self.grid.spacing
        wmax = float(np.max(np.abs(w))) or 1.0
        slope_scale = POLE_SLOPE

        def check(idx, sign):
            if abs(w[idx]) > _POLE_W_RELTOL * wmax:
                raise PoleConditionError(
                    f"pole sample w[{idx}] = {w[idx]:.3e} not zero within tolerance"
                )
            if idx == 0:
                seg = w[:6]
                lp = None if self.lapse is None else self.lapse[:6]
            else:
                seg = w[-6:][::-1]
                lp = None if self.lapse is None else self.lapse[-6:][::-1]
            dw = np.dot(fd.fornberg_weights(0.0, np.arange(6.0), 1), seg) / h
            if lp is not None:
                dw /= lp[0]
            if abs(abs(dw) - slope_scale) > POLE_SLOPE_TOL * max(1.0, abs(dw) / slope_scale):
                raise PoleConditionError(
                    f"pole slope |w'| = {abs(dw):.8f} differs from {slope_scale:.8f} "
                    f"beyond tolerance {POLE_SLOPE_TOL:g}"
                )

        if self.topology in ("capped_left", "capped_both"):
            check(0, +1)
        if self.topology in ("capped_right", "capped_both"):
            check(-1, -1)
        if self.topology == "periodic":
            if abs(w[0] - w[-1]) > 1e-9 * wmax:
                raise PoleConditionError("periodic profile endpoints do not match")

    # -- basic geometry -------------------------------------------------

    @property
    def r(self) -> np.ndarray:
        return self.grid.r

    def lapse_array(self) -> np.ndarray:
        return np.ones_like(self.w) if self.lapse is None else self.lapse

    def arclength(self) -> np.ndarray:
        """Cumulative arclength of the radial coordinate (s(a) = 0)."""
        if self.lapse is None:
            return self.r - self.grid.a
        sp = CubicSpline(self.r, self.lapse)
        return sp.antiderivative()(self.r) - sp.antiderivative()(self.grid.a)

    def with_w(self, w, lapse="keep") -> "WarpedMetric":
        lp = self.lapse if lapse == "keep" else lapse
        return replace(self, w=np.asarray(w, dtype=float), lapse=lp, profile=None)


@dataclass(frozen=True)
class Metric2D:
    """2D rotationally symmetric metric dr^2 + w(r)^2 dphi^2 on S^2.

    The fiber is a unit circle, so smooth poles need |w'| -> 1.
    """

    grid: RadialGrid
    w: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        object.__setattr__(self, "w", w)
        if np.any(w[1:-1] <= 0):
            raise InvalidMetricError("2D warping must be positive in the interior")

    def gauss_curvature(self) -> np.ndarray:
        h = self.grid.spacing
        K = np.empty_like(self.w)
        K[1:-1] = -fd.d2(self.w, h)[1:-1] / self.w[1:-1]
        for idx in (0, -1):
            c1, c3, _ = _odd_fit(self.grid.r, self.w, 0 if idx == 0 else len(self.w) - 1)
            K[idx] = -6.0 * c3 / c1
        return K

    def laplacian(self, f: np.ndarray) -> np.ndarray:
        h = self.grid.spacing
        df, d2f = fd.d1(f, h), fd.d2(f, h)
        out = np.empty_like(f)
        out[1:-1] = d2f[1:-1] + (fd.d1(self.w, h)[1:-1] / self.w[1:-1]) * df[1:-1]
        # smooth pole: w'/w ~ 1/u and f' ~ u f'', so the limit is 2 f''
        out[0] = 2.0 * d2f[0]
        out[-1] = 2.0 * d2f[-1]
        return out


@dataclass(frozen=True)
class CurvatureReport:
    """Scalar (and, for warped metrics, sectional) curvature samples."""

    R: np.ndarray
    K_rad: np.ndarray | None = None
    K_sph: np.ndarray | None = None
    where: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def min(self) -> float:
        return float(np.min(self.R))

    @property
    def max(self) -> float:
        return float(np.max(self.R))

    @property
    def argmin(self):
        idx = int(np.argmin(self.R))
        loc = None if self.where is None else self.where[idx]
        return idx, loc

    def min_sectional(self) -> float:
        if self.K_rad is None or self.K_sph is None:
            raise InvalidMetricError("no sectional data in this report")
        return float(min(np.min(self.K_rad), np.min(self.K_sph)))


# -- curvature engines ---------------------------------------------------


def _odd_fit(r, w, pole_idx, n_fit=6):
    """Fit w ~ c1 u + c3 u^3 + c5 u^5 near a pole; returns (c1, c3, c5)."""
    n = len(w)
    if pole_idx == 0:
        sel = slice(0, min(n_fit, n))
        u = r[sel] - r[0]
    else:
        sel = slice(max(0, n - n_fit), n)
        u = r[pole_idx] - r[sel]
    ws = np.abs(w[sel])
    A = np.stack([u, u**3, u**5], axis=1)
    coef, *_ = np.linalg.lstsq(A, ws, rcond=None)
    return coef[0], coef[1], coef[2]


def profile_curvature(
    r: np.ndarray,
    w: np.ndarray,
    lapse: np.ndarray | None = None,
    k_fiber: float = FIBER_GAUSS,
    dim: int = 3,
    topology: str = "cylinder",
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(R, K_rad, K_sph) of lapse^2 dr^2 + w^2 * (fiber of Gauss curvature k).

    Works for any parametrization; arclength derivatives are formed from the
    lapse.  Pole samples of capped topologies are L'Hopital-regularized via a
    local odd-polynomial fit.
    """
    r = np.asarray(r, dtype=float)
    w = np.asarray(w, dtype=float)
    h = r[1] - r[0]
    periodic = topology == "periodic"
    if periodic:
        wd = w[:-1]
        d1 = lambda f: np.append(fd.d1_periodic(f[:-1], h), fd.d1_periodic(f[:-1], h)[0])
        d2 = lambda f: np.append(fd.d2_periodic(f[:-1], h), fd.d2_periodic(f[:-1], h)[0])
    else:
        d1 = lambda f: fd.d1(f, h)
        d2 = lambda f: fd.d2(f, h)

    w_r, w_rr = d1(w), d2(w)
    if lapse is None:
        w_s, w_ss = w_r, w_rr
    else:
        lp = np.asarray(lapse, dtype=float)
        lp_r = d1(lp)
        w_s = w_r / lp
        w_ss = w_rr / lp**2 - w_r * lp_r / lp**3
    with np.errstate(divide="ignore", invalid="ignore"):
        K_rad = -w_ss / w
        K_sph = (k_fiber - w_s**2) / w**2
    n = dim
    khat = 1.0 / ((n - 1) * (n - 2)) if n != 3 else k_fiber
    if n != 3:
        with np.errstate(divide="ignore", invalid="ignore"):
            K_sph = (khat - w_s**2) / w**2

    poles = []
    if topology in ("capped_left", "capped_both"):
        poles.append(0)
    if topology in ("capped_right", "capped_both"):
        poles.append(len(w) - 1)
    for p in poles:
        c1, c3, c5 = _odd_fit(r, w, p)
        Kp = -6.0 * c3 / c1
        patch = range(0, 2) if p == 0 else range(len(w) - 2, len(w))
        for j in patch:
            u = abs(r[j] - r[p])
            if j == p:
                K_rad[j] = K_sph[j] = Kp
            else:
                # keep the generic K_rad; re-expand K_sph to avoid 0/0 noise
                num = khat - c1**2 - 6 * c1 * c3 * u**2 - (9 * c3**2 + 10 * c1 * c5) * u**4
                K_sph[j] = num / (c1 * u + c3 * u**3 + c5 * u**5) ** 2

    R = 2 * (n - 1) * K_rad + (n - 1) * (n - 2) * K_sph
    return R, K_rad, K_sph


def _closed_form_curvature(m: WarpedMetric):
    pr = m.profile
    r = m.r.copy()
    poles = []
    if m.topology in ("capped_left", "capped_both"):
        poles.append(0)
    if m.topology in ("capped_right", "capped_both"):
        poles.append(len(r) - 1)
    r_eval = r.copy()
    for p in poles:
        # evaluate off the pole; the pole value is patched below
        r_eval[p] = r[p] + (1e-3 if p == 0 else -1e-3)
    w = pr.w(r_eval)
    w_s = pr.deriv1(r_eval)
    w_ss = pr.deriv2(r_eval)
    K_rad = -w_ss / w
    K_sph = (FIBER_GAUSS - w_s**2) / w**2
    # pole limit K = -w'''/w' (cancellation-free; Richardson removes O(h^2))
    for p in poles:
        sgn, h = (1.0, 1e-3) if p == 0 else (-1.0, 1e-3)
        w2p = float(pr.deriv2(np.array([r[p]]))[0] if np.ndim(pr.deriv2(r[p])) else pr.deriv2(r[p]))
        f = lambda u: (float(pr.deriv2(r[p] + sgn * u)) - w2p) / (sgn * u)
        w3 = (4.0 * f(h) - f(2.0 * h)) / 3.0
        Kp = -w3 / float(pr.deriv1(r[p]))
        K_rad[p] = K_sph[p] = Kp
    R = 4 * K_rad + 2 * K_sph
    return R, K_rad, K_sph


def scalar_curvature_warped(m: WarpedMetric, engine: str = "auto") -> CurvatureReport:
    """Scalar curvature report of a warped metric.

    engine = "fd" forces finite differences, "closed" the closed-form
    profile (if present), "auto" prefers the profile.
    """
    R, K_rad, K_sph = _dispatch_curvature(m, engine)
    return CurvatureReport(R=R, K_rad=K_rad, K_sph=K_sph, where=m.r,
                           meta={"engine": engine, "spacing": m.grid.spacing})


def sectional_curvatures_warped(m: WarpedMetric, engine: str = "auto") -> CurvatureReport:
    """Both sectional curvature families K_rad, K_sph (n = 3 only)."""
    if m.dim != 3:
        raise InvalidMetricError("sectional report implemented for n = 3")
    return scalar_curvature_warped(m, engine=engine)


def _dispatch_curvature(m: WarpedMetric, engine: str):
    if engine not in ("auto", "fd", "closed"):
        raise ValueError("engine must be auto|fd|closed")
    use_closed = m.profile is not None and m.lapse is None and engine in ("auto", "closed")
    if engine == "closed" and m.profile is None:
        raise InvalidMetricError("no closed-form profile attached")
    if use_closed:
        return _closed_form_curvature(m)
    return profile_curvature(m.r, m.w, m.lapse, FIBER_GAUSS, m.dim, m.topology)


# -- library metrics ------------------------------------------------------


def cylinder_metric(a: float, b: float, n_points: int) -> WarpedMetric:
    """Exact cylinder ds^2 + dtheta^2 of scalar curvature one."""
    grid = RadialGrid(a, b, n_points)
    prof = Profile(w=lambda r: np.ones_like(np.real(r)) + 0.0 * np.real(r),
                   dw=lambda r: np.zeros_like(np.real(r)),
                   d2w=lambda r: np.zeros_like(np.real(r)))
    return WarpedMetric(grid=grid, w=np.ones(n_points), topology="cylinder", profile=prof)


def round_sphere_metric(rho: float, n_points: int) -> WarpedMetric:
    """Round S^3 of radius rho: w(r) = (rho/sqrt2) sin(r/rho), R = 6/rho^2."""
    grid = RadialGrid(0.0, np.pi * rho, n_points)
    c = rho / np.sqrt(2.0)
    prof = Profile(
        w=lambda r: c * np.sin(r / rho),
        dw=lambda r: (c / rho) * np.cos(r / rho),
        d2w=lambda r: -(c / rho**2) * np.sin(r / rho),
    )
    return WarpedMetric(grid=grid, w=prof.w(grid.r), topology="capped_both", profile=prof)


# -- reparametrization and closeness --------------------------------------


def resample_arclength(m: WarpedMetric, n_points: int | None = None) -> WarpedMetric:
    """Resample a lapse-form metric onto a uniform arclength grid."""
    if m.lapse is None:
        return m
    s = m.arclength()
    n = n_points or m.grid.n_points
    grid = RadialGrid(0.0, float(s[-1]), n)
    w_of_s = CubicSpline(s, m.w)
    return WarpedMetric(grid=grid, w=w_of_s(grid.r), dim=m.dim, topology=m.topology)


def c2_deviation_from_cylinder(
    w: np.ndarray, scale: float, spacing: float, lapse: np.ndarray | None = None
) -> float:
    """Discrete C^2 distance of the rescaled window profile from the cylinder.

    The window metric lapse^2 dr^2 + w^2 dtheta^2 is rescaled by scale^-2 and
    compared against ds^2 + dtheta^2 in coordinates t = r/scale: sup norms of
    the component deviations and of their first/second differences.
    """
    t_spacing = spacing / scale
    q = np.asarray(w, dtype=float) / scale - 1.0
    terms = [np.max(np.abs(q))]
    if len(q) >= 3:
        dq = np.diff(q) / t_spacing
        d2q = np.diff(q, 2) / t_spacing**2
        terms += [np.max(np.abs(dq)), np.max(np.abs(d2q))]
    if lapse is not None:
        p = np.asarray(lapse, dtype=float) ** 2 - 1.0
        terms.append(np.max(np.abs(p)))
        if len(p) >= 3:
            terms += [
                np.max(np.abs(np.diff(p) / t_spacing)),
                np.max(np.abs(np.diff(p, 2) / t_spacing**2)),
            ]
    return float(max(terms))


# -- fiber-convention conversions -----------------------------------------


def w_from_unit_fiber(psi: np.ndarray) -> np.ndarray:
    """Unit-radius fiber profile psi -> scalar-curvature-one profile w."""
    return np.asarray(psi, dtype=float) / np.sqrt(2.0)


def psi_to_unit_fiber(w: np.ndarray) -> np.ndarray:
    """Scalar-curvature-one profile w -> unit-radius fiber profile psi."""
    return np.asarray(w, dtype=float) * np.sqrt(2.0)
