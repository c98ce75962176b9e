"""Gromov-Lawson bending curves, connected sums, and surgery reversal.

The bending construction replaces a small ball around a pole by the tube
over a planar curve gamma in the (r, t) quarter-plane: for a rotationally
symmetric ambient ball (metric du^2 + w_a(u)^2 dtheta^2 in geodesic polar
coordinates) the induced metric on the tube is

    d sigma^2 + w_a(r(sigma))^2 dtheta^2

with sigma the Euclidean arclength of gamma, because the ambient radial
coordinate is unit speed.  Positivity of the induced scalar curvature is
what the curve search certifies.  Curves are generated from a smooth
turning-rate profile, so the induced metric is C^2 and the curvature engine
never sees a seam.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import (
    CertificationError,
    DomainError,
    PreconditionError,
    SearchFailureError,
    StagedError,
)
from .grids import RadialGrid
from .mollify import smoothstep, smoothstep_d1
from .paths import (
    DEFAULT_PSC_TOL,
    MetricPath,
    attach_certificate,
    certify_psc,
)
from .surgery import (
    StdMetric,
    SurgeryParams,
    assemble_profile,
)
from .warped import (
    FIBER_GAUSS,
    Profile,
    WarpedMetric,
    round_sphere_metric,
    scalar_curvature_warped,
)

__all__ = [
    "GLCurve",
    "AmbientBall",
    "build_gl_curve",
    "tube_metric",
    "gl_connect",
    "deform_capped_cylinder",
    "undo_surgery_path",
    "build_canonical",
    "cotton_proxy",
]


# -- bending curves ---------------------------------------------------------


@dataclass(frozen=True)
class GLCurve:
    """Planar bending curve in {(r, t): r >= 0, t >= 0} by arclength.

    Starts on the horizontal axis at (r0, 0) moving inward, turns through
    two smoothed arcs of peak curvature 1/rho_b (total turn pi/2), and ends
    running up the vertical line r = r2.
    """

    sigma: np.ndarray
    r: np.ndarray
    t: np.ndarray
    omega: np.ndarray      # turning angle away from the inward horizontal
    kappa: np.ndarray      # d omega / d sigma
    params: dict

    @property
    def r0(self) -> float:
        return float(self.r[0])

    @property
    def r2(self) -> float:
        return float(self.params["r2"])

    @property
    def t2(self) -> float:
        return float(self.params["t2"])

    def validate_region(self):
        if np.min(self.r) < -1e-12 or np.min(self.t) < -1e-12:
            raise DomainError("curve exits the quarter plane {r >= 0, t >= 0}")

    def vertical_start(self) -> float:
        """Arclength at which the curve becomes exactly vertical."""
        return float(self.sigma[np.argmax(self.omega >= np.pi / 2 - 1e-9)])


def _curvature_profile(sig, s0, L, peak, ramp):
    """Smooth plateau curvature bump on [s0, s0 + L] with given ramp width."""
    x = np.asarray(sig, dtype=float)
    return peak * smoothstep((x - s0) / ramp) * smoothstep((s0 + L - x) / ramp)


def trace_gl_curve(
    r0: float,
    theta_b: float,
    rho_b: float,
    r2: float,
    tail: float = 1.0,
    ramp_frac: float = 0.35,
    n_per_unit: int = 600,
) -> GLCurve | None:
    """Integrate the two-arc turtle curve; None when geometry is infeasible."""
    k = 1.0 / rho_b
    ramp = ramp_frac * rho_b
    L1 = theta_b / k + ramp
    L2 = (np.pi / 2.0 - theta_b) / k + ramp
    if min(L1, L2) < 2.2 * ramp:
        return None

    def turn_piece(Larc, om0):
        n = max(int(Larc * n_per_unit), 64)
        ss = np.linspace(0.0, Larc, n)
        kap = _curvature_profile(ss, 0.0, Larc, k, ramp)
        om = om0 + np.concatenate(
            [[0.0], np.cumsum(0.5 * (kap[1:] + kap[:-1]) * np.diff(ss))]
        )
        dr = -np.trapz(np.cos(om), ss)
        return dr

    drop_arcs = -(turn_piece(L1, 0.0) + turn_piece(L2, theta_b))
    need = r0 - r2 - drop_arcs
    if need < 0:
        return None
    Lramp = need / np.cos(theta_b)

    total = L1 + Lramp + L2 + tail
    n = max(int(total * n_per_unit), 400)
    sig = np.linspace(0.0, total, n)
    kap = _curvature_profile(sig, 0.0, L1, k, ramp) + _curvature_profile(
        sig, L1 + Lramp, L2, k, ramp
    )
    om = np.concatenate([[0.0], np.cumsum(0.5 * (kap[1:] + kap[:-1]) * np.diff(sig))])
    if abs(om[-1] - np.pi / 2.0) > 2e-3:
        return None
    r = r0 - np.concatenate(
        [[0.0], np.cumsum(0.5 * (np.cos(om[1:]) + np.cos(om[:-1])) * np.diff(sig))]
    )
    t = np.concatenate(
        [[0.0], np.cumsum(0.5 * (np.sin(om[1:]) + np.sin(om[:-1])) * np.diff(sig))]
    )
    r = r + (r2 - r[-1])  # absorb the quadrature residue into the tail line
    curve = GLCurve(
        sigma=sig, r=r, t=t, omega=om, kappa=kap,
        params={
            "theta_b": theta_b, "rho_b": rho_b, "r2": r2,
            "r1": float(r[np.argmax(kap > 1e-12)]),
            "t2": float(t[np.argmax(om >= np.pi / 2 - 1e-9)]),
            "ramp": ramp, "tail": tail,
        },
    )
    curve.validate_region()
    return curve


@dataclass(frozen=True)
class AmbientBall:
    """Rotationally symmetric ball profile w_a(u), u = distance from center."""

    w: callable
    dw: callable
    d2w: callable
    radius: float
    label: str = "ball"

    @staticmethod
    def flat(radius: float) -> "AmbientBall":
        rt = np.sqrt(2.0)
        return AmbientBall(
            w=lambda u: np.asarray(u, dtype=float) / rt,
            dw=lambda u: np.ones_like(np.asarray(u, dtype=float)) / rt,
            d2w=lambda u: np.zeros_like(np.asarray(u, dtype=float)),
            radius=radius, label="flat",
        )

    @staticmethod
    def round_sphere(rho: float, radius: float) -> "AmbientBall":
        c = rho / np.sqrt(2.0)
        return AmbientBall(
            w=lambda u: c * np.sin(np.asarray(u, dtype=float) / rho),
            dw=lambda u: (c / rho) * np.cos(np.asarray(u, dtype=float) / rho),
            d2w=lambda u: -(c / rho**2) * np.sin(np.asarray(u, dtype=float) / rho),
            radius=radius, label=f"round(rho={rho:g})",
        )


def _tube_curvature(w, w1, w2):
    with np.errstate(divide="ignore", invalid="ignore"):
        K_rad = -w2 / w
        K_sph = (FIBER_GAUSS - w1**2) / w**2
    return 4 * K_rad + 2 * K_sph, K_rad, K_sph


def tube_min_R(curve: GLCurve, ambient: AmbientBall) -> float:
    """Min induced scalar curvature along the tube, from closed forms."""
    r, om, kap = curve.r, curve.omega, curve.kappa
    w = ambient.w(r)
    w1 = ambient.dw(r) * (-np.cos(om))
    w2 = ambient.d2w(r) * np.cos(om) ** 2 + ambient.dw(r) * kap * np.sin(om)
    R, _, _ = _tube_curvature(w, w1, w2)
    return float(np.min(R))


def tube_metric(curve: GLCurve, ambient: AmbientBall, n_points: int | None = None) -> WarpedMetric:
    """Induced metric on the tube over the curve inside (ball x R, g + dt^2)."""
    if np.max(curve.r) > ambient.radius + 1e-9:
        raise DomainError("curve exits the ambient ball coordinate range")
    sig = curve.sigma
    r_sp = CubicSpline(sig, curve.r)
    om_sp = CubicSpline(sig, curve.omega)
    kap_sp = CubicSpline(sig, curve.kappa)

    def w_fun(s):
        return ambient.w(r_sp(s))

    def dw_fun(s):
        return ambient.dw(r_sp(s)) * (-np.cos(om_sp(s)))

    def d2w_fun(s):
        rr = r_sp(s)
        return ambient.d2w(rr) * np.cos(om_sp(s)) ** 2 + ambient.dw(rr) * kap_sp(s) * np.sin(om_sp(s))

    n = n_points or max(len(sig) // 4, 64)
    grid = RadialGrid(float(sig[0]), float(sig[-1]), n)
    return WarpedMetric(grid=grid, w=np.asarray(w_fun(grid.r), dtype=float),
                        profile=Profile(w=w_fun, dw=dw_fun, d2w=d2w_fun))


def build_gl_curve(
    r0: float,
    ambients: AmbientBall | list[AmbientBall],
    R_floor: float = 0.0,
    n_coarse: int = 6,
    refine: int = 2,
) -> GLCurve:
    """Search the (theta_b, rho_b, r2) family for a PSC bending curve.

    The curve must keep the induced tube metric strictly PSC for every
    supplied ambient (one shared curve serves both sides of a connected
    sum); coarse grid first, then local refinement, deterministic
    tie-breaking.  Raises SearchFailureError carrying the best candidate.
    """
    if isinstance(ambients, AmbientBall):
        ambients = [ambients]
    for a in ambients:
        if a.radius < r0 - 1e-12:
            raise PreconditionError("ambient ball smaller than requested r0")

    def score(th, rb, r2):
        cur = trace_gl_curve(r0, th, rb, r2)
        if cur is None:
            return -np.inf, None
        return min(tube_min_R(cur, a) for a in ambients), cur

    best = (-np.inf, None, None)
    # bend radii must be large enough that the ambient curvature covers the
    # arc-entry dip (kappa^2 < R_ambient / 2), so the range sits well above r0
    for th in np.linspace(0.15, 1.25, n_coarse):
        for rb in np.geomspace(0.4 * r0, 8.0 * r0, n_coarse):
            for r2 in np.geomspace(0.06 * r0, 0.35 * r0, n_coarse):
                sc, cur = score(th, rb, r2)
                if sc > best[0] + 1e-15:
                    best = (sc, cur, (th, rb, r2))
    for _ in range(refine):
        if best[1] is None:
            break
        th0, rb0, r20 = best[2]
        for th in np.linspace(max(th0 * 0.7, 0.05), min(th0 * 1.3, 1.45), 5):
            for rb in np.geomspace(rb0 * 0.6, rb0 * 1.6, 5):
                for r2 in np.geomspace(r20 * 0.6, min(r20 * 1.6, 0.45 * r0), 5):
                    sc, cur = score(th, rb, r2)
                    if sc > best[0] + 1e-15:
                        best = (sc, cur, (th, rb, r2))
    if best[1] is None or best[0] <= R_floor:
        raise SearchFailureError(
            f"curve family exhausted: best min induced R = {best[0]:.4g}", best=best[1]
        )
    return best[1]


# -- connected sums ----------------------------------------------------------


def _pole_ball(m: WarpedMetric, side: str, radius: float) -> AmbientBall:
    """Ambient ball profile of a capped metric about one of its poles."""
    if m.lapse is not None:
        raise PreconditionError("gl_connect expects arclength-form metrics")
    capped = {"right": ("capped_right", "capped_both"), "left": ("capped_left", "capped_both")}
    if m.topology not in capped[side]:
        raise PreconditionError(f"no {side} pole on this metric")
    pole = m.grid.b if side == "right" else m.grid.a
    sgn = -1.0 if side == "right" else 1.0
    if m.profile is not None:
        pr = m.profile
        return AmbientBall(
            w=lambda u: pr.w(pole + sgn * np.asarray(u)),
            dw=lambda u: sgn * pr.deriv1(pole + sgn * np.asarray(u)),
            d2w=lambda u: pr.deriv2(pole + sgn * np.asarray(u)),
            radius=radius, label=f"{side}-pole",
        )
    sp = CubicSpline(m.r, m.w)
    return AmbientBall(
        w=lambda u: sp(pole + sgn * np.asarray(u)),
        dw=lambda u: sgn * sp.derivative(1)(pole + sgn * np.asarray(u)),
        d2w=lambda u: sp.derivative(2)(pole + sgn * np.asarray(u)),
        radius=radius, label=f"{side}-pole",
    )


def straightened_tube_callables(
    curve: GLCurve, ambient: AmbientBall, w_cyl: float, band: float
):
    """(w, dw, d2w)(sigma) of the tube blended onto the exact r2-cylinder.

    Identical to the raw tube until the curve is vertical, then a smooth
    blend carries the (already nearly cylindrical) profile onto the exact
    constant w_cyl; beyond the band everything is exactly cylindrical.
    """
    sig = curve.sigma
    r_sp = CubicSpline(sig, curve.r)
    om_sp = CubicSpline(sig, curve.omega)
    kap_sp = CubicSpline(sig, curve.kappa)
    s_v = curve.vertical_start()

    def base(s):
        sm = np.minimum(np.asarray(s, dtype=float), sig[-1])
        return ambient.w(r_sp(sm))

    def dbase(s):
        sm = np.minimum(np.asarray(s, dtype=float), sig[-1])
        out = ambient.dw(r_sp(sm)) * (-np.cos(om_sp(sm)))
        return np.where(np.asarray(s) > sig[-1], 0.0 * out, out)

    def d2base(s):
        sm = np.minimum(np.asarray(s, dtype=float), sig[-1])
        rr = r_sp(sm)
        out = ambient.d2w(rr) * np.cos(om_sp(sm)) ** 2 + ambient.dw(rr) * kap_sp(sm) * np.sin(om_sp(sm))
        return np.where(np.asarray(s) > sig[-1], 0.0 * out, out)

    def b(s):
        return smoothstep((np.asarray(s, dtype=float) - s_v) / band)

    def db(s):
        return smoothstep_d1((np.asarray(s, dtype=float) - s_v) / band) / band

    def d2b(s):
        h = 1e-6
        return (db(np.asarray(s) + h) - db(np.asarray(s) - h)) / (2 * h)

    def w_fun(s):
        return base(s) + b(s) * (w_cyl - base(s))

    def dw_fun(s):
        return dbase(s) * (1.0 - b(s)) + db(s) * (w_cyl - base(s))

    def d2w_fun(s):
        return (
            d2base(s) * (1.0 - b(s))
            - 2.0 * db(s) * dbase(s)
            + d2b(s) * (w_cyl - base(s))
        )

    return w_fun, dw_fun, d2w_fun, s_v


def gl_connect(
    m1: WarpedMetric,
    m2: WarpedMetric | None = None,
    r0: float | None = None,
    handle: bool = False,
    straighten_band: float = 1.0,
    neck_length: float = 2.0,
    curve: GLCurve | None = None,
    tol: float = DEFAULT_PSC_TOL,
    certify: bool = True,
) -> WarpedMetric:
    """Gromov-Lawson connected sum m1 # m2 along the symmetry axis.

    m1's right pole is joined to m2's left pole (profiles of rotationally
    symmetric summands can always be flipped into this position).  With
    handle=True the two poles of m1 itself are joined and the result is a
    periodic profile on S^2 x S^1.  Outside the r0-balls the input profiles
    are preserved sample-for-sample.
    """
    if handle:
        m2 = m1
        if m1.topology != "capped_both":
            raise PreconditionError("handle attachment needs a doubly capped profile")
    if m2 is None:
        raise PreconditionError("need a second summand unless handle=True")
    dr = m1.grid.spacing
    if abs(m2.grid.spacing - dr) > 1e-12:
        raise PreconditionError("summands must share the grid spacing")
    if r0 is None:
        r0 = min(1.0, 0.2 * (m1.grid.b - m1.grid.a), 0.2 * (m2.grid.b - m2.grid.a))

    n_cut = int(np.ceil(r0 / dr - 1e-9))
    r_cut = n_cut * dr
    ball1 = _pole_ball(m1, "right", r_cut + 2 * dr)
    ball2 = _pole_ball(m2, "left", r_cut + 2 * dr)
    if curve is None:
        curve = build_gl_curve(r_cut, [ball1, ball2])
    w_cyl = float(curve.r2 / np.sqrt(2.0))

    w1f, _, _, s_v1 = straightened_tube_callables(curve, ball1, w_cyl, straighten_band)
    w2f, _, _, s_v2 = straightened_tube_callables(curve, ball2, w_cyl, straighten_band)
    s_end = s_v1 + straighten_band
    n_tube = int(np.ceil(s_end / dr)) + 1
    s_tube = dr * np.arange(1, n_tube + 1)
    n_cyl = max(int(np.ceil(neck_length / dr)), 2)

    body1 = m1.w[: m1.grid.n_points - n_cut]
    tube1 = w1f(s_tube)
    cyl = np.full(n_cyl, w_cyl)
    tube2 = w2f(s_tube)[::-1]
    if handle:
        w_all = np.concatenate([tube2[:0], body1[n_cut:], tube1, cyl, tube2])
        # periodic closure back onto m1's left pole side
        w_all = np.concatenate([w_all, [w_all[0]]])
        grid = RadialGrid(0.0, dr * (len(w_all) - 1), len(w_all))
        out = WarpedMetric(grid=grid, w=w_all, topology="periodic")
    else:
        body2 = m2.w[n_cut:]
        w_all = np.concatenate([body1, tube1, cyl, tube2, body2])
        grid = RadialGrid(0.0, dr * (len(w_all) - 1), len(w_all))
        left_capped = m1.topology in ("capped_both", "capped_left")
        right_capped = m2.topology in ("capped_both", "capped_right")
        topo = {
            (True, True): "capped_both",
            (True, False): "capped_left",
            (False, True): "capped_right",
            (False, False): "cylinder",
        }[(left_capped, right_capped)]
        out = WarpedMetric(grid=grid, w=w_all, topology=topo)
    if certify:
        rep = scalar_curvature_warped(out, engine="fd")
        if rep.min <= tol:
            raise CertificationError(
                f"connected sum lost PSC: min R = {rep.min:.4g} at r = {rep.argmin[1]}"
            )
    return out


def build_canonical(
    n_spheres: int,
    n_handles: int = 0,
    rho: float = 1.0,
    n_points: int = 401,
    tol: float = DEFAULT_PSC_TOL,
) -> WarpedMetric:
    """Axis chain of round spheres joined by GL necks, with optional handle.

    One handle closes the chain into a periodic S^2 x S^1 profile.  More
    handles cannot stay rotationally symmetric about a single axis and are
    rejected.
    """
    if n_spheres < 1:
        raise PreconditionError("need at least one sphere summand")
    if n_handles not in (0, 1):
        raise PreconditionError(
            "only 0 or 1 handles keep all connect points on a common axis"
        )
    sphere = round_sphere_metric(rho, n_points)
    out = sphere
    for _ in range(n_spheres - 1):
        out = gl_connect(out, sphere, tol=tol)
    if n_handles == 1:
        out = gl_connect(out, handle=True, tol=tol)
    # smoothness certificate for local conformal flatness of the class
    proxy = cotton_proxy(out)
    if np.max(np.abs(proxy)) > 5e-2:
        raise CertificationError(
            f"Cotton proxy too large ({np.max(np.abs(proxy)):.3g}); profile not C^2"
        )
    return out


def cotton_proxy(m: WarpedMetric) -> np.ndarray:
    """Single independent Cotton-tensor component of a warped 3-metric.

    Identically zero in exact arithmetic (every rotationally symmetric
    3-metric is locally conformally flat); computed term by term with finite
    differences it measures the profile's C^2 discretization quality.
    """
    from . import fd

    rep = scalar_curvature_warped(m, engine="fd")
    lam_rad = 2.0 * rep.K_rad
    lam_sph = rep.K_rad + rep.K_sph
    R = rep.R
    S_rad = lam_rad - R / 4.0
    S_sph = lam_sph - R / 4.0
    h = m.grid.spacing
    lp = m.lapse_array()
    if m.topology == "periodic":
        dS = np.append(fd.d1_periodic(S_sph[:-1], h), fd.d1_periodic(S_sph[:-1], h)[0])
        dw = np.append(fd.d1_periodic(m.w[:-1], h), fd.d1_periodic(m.w[:-1], h)[0])
    else:
        dS = fd.d1(S_sph, h)
        dw = fd.d1(m.w, h)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = dS / lp + (dw / lp / m.w) * (S_sph - S_rad)
    # pole columns are 0/0; they carry no independent information
    if m.topology in ("capped_left", "capped_both"):
        out[:2] = 0.0
    if m.topology in ("capped_right", "capped_both"):
        out[-2:] = 0.0
    return out


# -- squeezing a long cylinder-with-caps back to the straight cylinder -------


def stretch_map(a: float):
    """sigma(rho) = rho + a * ramp(rho): translations beyond |rho| >= 1.

    Smooth odd stretch taking (-half, half) onto (-half - a, half + a); its
    inverse is the squeeze used to absorb the extra length of a surgered
    region into the (-half, half) template.
    """

    def ramp(x):
        return 2.0 * smoothstep((np.asarray(x, dtype=float) + 1.0) / 2.0) - 1.0

    def ramp_d(x):
        return smoothstep_d1((np.asarray(x, dtype=float) + 1.0) / 2.0)

    def sigma(x):
        return np.asarray(x, dtype=float) + a * ramp(x)

    def sigma_d(x):
        return 1.0 + a * ramp_d(x)

    def sigma_inv(y):
        y = np.asarray(y, dtype=float)
        x = np.clip(y, -1.0 - a, 1.0 + a) * 1.0 / (1.0 + a) if a > 0 else y.copy()
        x = np.where(y <= -1.0 - a, y + a, np.where(y >= 1.0 + a, y - a, x))
        for _ in range(60):
            f = sigma(x) - y
            x = x - f / sigma_d(x)
            if np.max(np.abs(f)) < 1e-14:
                break
        return x

    return sigma, sigma_d, sigma_inv


def _round_off_window(w, lapse, grid, half, n_mu):
    """Two-stage Prop-2.3-style path from a capped-cylinder profile to the
    squeezed exact cylinder, in closed form on the given grid.

    Returns the list of (w_mu, lapse_mu) arrays, one per mu sample.
    """
    r = grid.r
    mid = 0.5 * (grid.a + grid.b)
    a = 0.5 * (grid.b - grid.a) - half
    if a <= 0:
        raise PreconditionError("window shorter than the target cylinder")
    sigma, sigma_d, sigma_inv = stretch_map(a)
    rho = sigma_inv(r - mid)
    bprime = 1.0 / sigma_d(rho)  # d(beta)/dx with beta = sigma^(-1)
    mu = np.linspace(0.0, 1.0, n_mu if n_mu % 2 == 1 else n_mu + 1)
    out = []
    for m_ in mu:
        if m_ <= 0.5:
            F = (1.0 - 2.0 * m_) + 2.0 * m_ * w**-0.5
            out.append((F**2 * w, F**2 * lapse))
        else:
            lap2 = (2.0 - 2.0 * m_) * (lapse / w) ** 2 + (2.0 * m_ - 1.0) * bprime**2
            out.append((np.ones_like(w), np.sqrt(lap2)))
    return mu, out


def deform_capped_cylinder(
    dc: WarpedMetric,
    half: float = 4.0,
    n_mu: int = 101,
    tol: float = DEFAULT_PSC_TOL,
    band_tol: float = 1e-9,
) -> MetricPath:
    """Deform a double-capped surgered cylinder back into the cylinder.

    The input profile lives on an interval of length 2 half + 2a with w == 1
    and unit lapse near both ends and all non-cylindrical geometry within
    distance 1 + a of the center; the output path fixes the metric on the
    outer bands and ends at the squeezed exact cylinder (isometric to
    ds^2 + dtheta^2 on a length-2 half interval).
    """
    L = dc.grid.b - dc.grid.a
    a = (L - 2.0 * half) / 2.0
    if a <= 0:
        raise PreconditionError("profile shorter than the target cylinder")
    w = dc.w
    lapse = dc.lapse_array()
    r = dc.grid.r
    mid = 0.5 * (dc.grid.a + dc.grid.b)
    curvy = (np.abs(w - 1.0) > band_tol) | (np.abs(lapse - 1.0) > band_tol)
    if curvy.any():
        ext = np.max(np.abs(r[curvy] - mid))
        if ext > 1.0 + a - 1e-9:
            raise PreconditionError(
                f"non-cylindrical geometry at |r - mid| = {ext:.4g} exceeds 1 + a = {1 + a:.4g}"
            )
    mu, frames = _round_off_window(w, lapse, dc.grid, half, n_mu)
    metrics = [
        WarpedMetric(grid=dc.grid, w=wm, lapse=lm, topology=dc.topology)
        for wm, lm in frames
    ]
    path = MetricPath(mu=mu, metrics=metrics,
                      endpoints={"start": "capped cylinder", "end": "squeezed cylinder"})
    cert = certify_psc(path, tol)
    return attach_certificate(path, cert)


# -- the four-stage surgery reversal -----------------------------------------


def _profile_callables(h: WarpedMetric):
    if h.profile is not None:
        return h.profile.w, h.profile.deriv1, h.profile.deriv2
    sp = CubicSpline(h.r, h.w)
    return sp, sp.derivative(1), sp.derivative(2)


@dataclass(frozen=True)
class DoubledLayout:
    """Coordinate layout of (S^- # S^+, h_surg^- # h_surg^+) on one grid.

    x in [0, L]; the minus-side h zone is x in [0, 4], template s = x - 4;
    caps/tube/neck occupy the middle; the plus side mirrors at L - x.
    """

    grid: RadialGrid
    n_keep: int          # cap samples kept before the GL cut
    n_tube: int
    n_cyl: int
    s_cap: np.ndarray    # template coordinates of the cap zone
    s_tube: np.ndarray   # tube arclength samples
    curve: GLCurve
    c_tip: float
    w_cyl: float


def _doubled_layout(p2: SurgeryParams, std: StdMetric, dr: float) -> DoubledLayout:
    tip = std.tip
    n_cap = int(round((tip + 4.0) / dr))
    s_cap = -4.0 + dr * np.arange(n_cap + 1)
    e_tip = float(np.exp(-2.0 * p2.f(np.array([tip]))[0]))
    c_tip = e_tip * p2.lam
    rho_tip = 2.0 * np.sqrt(c_tip)
    r_cut = 0.45 * std.r0 * np.sqrt(c_tip)
    n_cut = max(int(np.ceil(r_cut / dr)), 2)
    keep = len(s_cap) - 1 - n_cut  # last kept cap sample index
    r_cut_arc = 0.0  # actual cut distance in arclength, refined below
    ball = AmbientBall.round_sphere(rho_tip, 10 * r_cut + 1.0)
    curve = build_gl_curve(n_cut * dr * np.sqrt(c_tip), ball)
    w_cyl = float(curve.r2 / np.sqrt(2.0))
    _, _, _, s_v = straightened_tube_callables(curve, ball, w_cyl, 1.0)
    s_end = s_v + 1.0
    n_tube = int(np.ceil(s_end / dr)) + 1
    s_tube = dr * np.arange(1, n_tube + 1)
    n_cyl = max(int(np.ceil(2.0 / dr)), 2)
    n_half = keep + 1 + n_tube + n_cyl
    L = dr * (2 * n_half - 1)
    grid = RadialGrid(0.0, L, 2 * n_half)
    return DoubledLayout(grid=grid, n_keep=keep, n_tube=n_tube, n_cyl=n_cyl,
                         s_cap=s_cap, s_tube=s_tube, curve=curve, c_tip=c_tip,
                         w_cyl=w_cyl)


def _doubled_profile(w_h, dw_h, d2w_h, p: SurgeryParams, std: StdMetric,
                     lay: DoubledLayout):
    """(w, lapse) arrays of the doubled surgered object on the shared grid.

    The GL tube zone is parametrized by the reference arclength of the lay
    layout; for eps != lay-eps the tip scale differs by the factor
    c(eps)/c_ref, which enters as a constant lapse on that zone (exact).
    """
    P, Q, P1, Q1, P2, Q2 = assemble_profile(w_h, dw_h, d2w_h, p, std, lay.s_cap)
    keep = lay.n_keep
    e_tip = float(np.exp(-2.0 * p.f(np.array([std.tip]))[0]))
    c_tip = e_tip * p.lam
    scale = np.sqrt(c_tip / lay.c_tip)

    rho_tip = 2.0 * np.sqrt(lay.c_tip)
    ball = AmbientBall.round_sphere(rho_tip, 10.0)
    wtf, _, _, _ = straightened_tube_callables(lay.curve, ball, lay.w_cyl, 1.0)
    w_tube = scale * np.asarray(wtf(lay.s_tube / 1.0), dtype=float)
    lap_tube = np.full(lay.n_tube, scale)
    w_cycl = np.full(lay.n_cyl, scale * lay.w_cyl)
    lap_cycl = np.full(lay.n_cyl, scale)

    w_half = np.concatenate([np.sqrt(Q[: keep + 1]), w_tube, w_cycl])
    lap_half = np.concatenate([np.sqrt(P[: keep + 1]), lap_tube, lap_cycl])
    w_all = np.concatenate([w_half, w_half[::-1]])
    lap_all = np.concatenate([lap_half, lap_half[::-1]])
    return w_all, lap_all


def undo_surgery_path(
    h: WarpedMetric,
    p: SurgeryParams,
    std: StdMetric,
    eps2: float | None = None,
    n_mu_stage: int = 9,
    tol: float = DEFAULT_PSC_TOL,
) -> MetricPath:
    """Deform (S^- # S^+, h_surg^- # h_surg^+) back into (S^2 x (-4,4), h).

    Four certified stages: widen eps to eps2; homotope h onto the cylinder
    under a cutoff while surgering throughout; collapse the double cap by
    the capped-cylinder deformation; and unwind the cutoff homotopy.  Every
    stage keeps the metric fixed where |s| >= 3, and the final metric is h
    carried through the fixed squeeze reparametrization (a translation near
    the ends).
    """
    eps2 = eps2 if eps2 is not None else max(p.eps, 0.02)
    if p.eps > eps2:
        raise PreconditionError("eps must not exceed the widened eps2")
    w_h, dw_h, d2w_h = _profile_callables(h)
    dr = h.grid.spacing
    p2 = replace(p, eps=eps2)
    lay = _doubled_layout(p2, std, dr)
    big = lay.grid
    stage_mu = np.linspace(0.0, 1.0, n_mu_stage)

    def eta_s(s):
        s = np.abs(np.asarray(s, dtype=float))
        return 1.0 - smoothstep(s - 2.0)

    def h_mu(m_):
        def wf(x):
            e = eta_s(x) * m_
            return np.sqrt((1.0 - e) * np.asarray(w_h(x)) ** 2 + e)

        def dwf(x):
            hh = 1e-6
            return (wf(np.asarray(x) + hh) - wf(np.asarray(x) - hh)) / (2 * hh)

        def d2wf(x):
            hh = 1e-5
            return (wf(np.asarray(x) + hh) - 2 * wf(x) + wf(np.asarray(x) - hh)) / hh**2

        return wf, dwf, d2wf

    def metric_of(w_all, lap_all):
        return WarpedMetric(grid=big, w=w_all, lapse=lap_all, topology="cylinder")

    stage_paths = []
    # stage 1: eps widening
    mets = []
    for m_ in stage_mu:
        pe = replace(p, eps=(1.0 - m_) * p.eps + m_ * eps2)
        mets.append(metric_of(*_doubled_profile(w_h, dw_h, d2w_h, pe, std, lay)))
    stage_paths.append(("eps-widening", stage_mu, mets))

    # stage 2: cutoff homotopy h -> h1 at eps2
    mets = []
    for m_ in stage_mu:
        wf, dwf, d2wf = h_mu(m_)
        mets.append(metric_of(*_doubled_profile(wf, dwf, d2wf, p2, std, lay)))
    stage_paths.append(("cutoff-homotopy", stage_mu, mets))

    # stage 3: collapse the double cap on the window where h1 = g_cyl
    base = stage_paths[-1][2][-1]
    mu3, frames3, squeeze = _collapse_frames(base, dr, n_mu_stage, tol)
    mets3 = [metric_of(wm, lm) for wm, lm in frames3]
    stage_paths.append(("cap-collapse", mu3, mets3))

    # stage 4: unwind the cutoff homotopy through the squeeze
    mets4 = _unwind_frames(w_h, eta_s, stage_mu, big, squeeze)
    stage_paths.append(("unwind-cutoff", stage_mu, mets4))

    all_metrics, all_mu = [], []
    offset = 0.0
    for name, mus, mets in stage_paths:
        pth = MetricPath(mu=np.asarray(mus), metrics=mets, endpoints={"stage": name})
        try:
            certify_psc(pth, tol)
        except CertificationError as e:
            raise StagedError(f"stage '{name}' failed certification: {e}",
                              stage=name, inner=e) from e
        for mm, mv in zip(mets, mus):
            all_metrics.append(mm)
            all_mu.append(offset + 0.25 * mv)
        offset += 0.25
    mu_arr = np.array(all_mu)
    keepi = np.concatenate([[True], np.diff(mu_arr) > 1e-12])
    metrics = [m for m, k in zip(all_metrics, keepi) if k]
    mu_arr = mu_arr[keepi]
    mu_arr[0], mu_arr[-1] = 0.0, 1.0
    path = MetricPath(
        mu=mu_arr, metrics=metrics,
        endpoints={"start": "h_surg^- # h_surg^+", "end": "h (squeezed coordinates)",
                   "stages": [s[0] for s in stage_paths]},
    )
    cert = certify_psc(path, tol)
    return attach_certificate(path, cert)


def _global_squeeze(big: RadialGrid, dr: float):
    """Global diffeomorphism Psi: big grid -> (-4, 4) template coordinates.

    Translations on the outer zones (s = x - 4 on the left, mirrored on the
    right); the middle window, whose edges sit at |s| = s_e inside the
    h_1-cylinder band, is compressed by the smooth stretch map.  Returns
    (s values at nodes, Psi' values at nodes, window slice, half-width s_e).
    """
    r = big.r
    mid = 0.5 * (big.a + big.b)
    # window edge at the node nearest x = 4 - 1.75 (inside the |s|<=2 band)
    j0 = int(round((4.0 - 1.75) / dr))
    j1 = big.n_points - 1 - j0
    s_e = 4.0 - r[j0]  # half-width of the template image of the window
    if not (1.0 < s_e < 2.0):
        raise StagedError("squeeze window edge left the cylinder band",
                          stage="cap-collapse")
    a = (r[j1] - r[j0]) / 2.0 - s_e
    if a <= 0:
        raise StagedError("doubled object shorter than the template",
                          stage="cap-collapse")
    sigma, sigma_d, sigma_inv = stretch_map(a)
    s_tpl = np.where(r <= mid, r - 4.0, r - (big.b - big.a) + 4.0)
    psi_d = np.ones_like(r)
    win = slice(j0, j1 + 1)
    rho = sigma_inv(r[win] - mid)
    s_tpl[win] = rho
    psi_d[win] = 1.0 / sigma_d(rho)
    return s_tpl, psi_d, win, s_e, a


def _collapse_frames(base: WarpedMetric, dr: float, n_mu: int, tol: float):
    """Capped-cylinder collapse applied on the middle window of the doubled
    object, identity outside; returns (mu, frames, squeeze data)."""
    w, lapse = base.w, base.lapse_array()
    big = base.grid
    s_tpl, psi_d, win, s_e, a = _global_squeeze(big, dr)
    j0 = win.start
    curvy = (np.abs(w - 1.0) > 1e-9) | (np.abs(lapse - 1.0) > 1e-9)
    if curvy.any():
        mid = 0.5 * (big.a + big.b)
        ext = np.max(np.abs(big.r[curvy] - mid))
        if ext > 1.0 + a - 1e-9:
            raise StagedError("curvy zone exceeds the squeezable region",
                              stage="cap-collapse")
    if abs(w[j0] - 1.0) > 1e-9 or abs(lapse[j0] - 1.0) > 1e-9:
        raise StagedError("collapse window does not start on the cylinder",
                          stage="cap-collapse")
    wingrid = RadialGrid(float(big.r[win][0]), float(big.r[win][-1]),
                         len(big.r[win]))
    mu, frames = _round_off_window(w[win], lapse[win], wingrid, s_e, n_mu)
    out = []
    for wm, lm in frames:
        W, LP = w.copy(), lapse.copy()
        W[win] = wm
        LP[win] = lm
        out.append((W, LP))
    return mu, out, (s_tpl, psi_d)


def _unwind_frames(w_h, eta_s, stage_mu, big, squeeze):
    """Stage 4: pull the cutoff homotopy h_(1-mu) back through the global
    squeeze Psi; lapse = Psi', warp = w_(h_nu)(Psi(x))."""
    s_tpl, psi_d = squeeze
    mets = []
    s_c = np.clip(s_tpl, -4.0, 4.0)
    for m_ in stage_mu:
        nu = 1.0 - m_
        e = eta_s(s_c) * nu
        W = np.sqrt((1.0 - e) * np.asarray(w_h(s_c)) ** 2 + e)
        mets.append(WarpedMetric(grid=big, w=W, lapse=psi_d, topology="cylinder"))
    return mets
