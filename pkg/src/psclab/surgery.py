"""The standard cap metric and neck surgery.

Surgery replaces the positive end of a neck metric h on S^2 x (-4, 4) by a
cap modeled on the standard initial metric g_std, through the piecewise
formula

    e^(-2 f(s)) h                                   on s in (-4, 1]
    e^(-2 f(s)) ( a(s) h + (1 - a(s)) L g_std )     on s in [1, 2]
    e^(-2 f(s)) L g_std                             on s in [2, A0 + 4 - r0]
    ( b(s) e^(-2 f(s)) + (1 - b(s)) e^(-2 f(A0+4)) ) L g_std   to the tip,

with f(s) = C eps e^(-q/s) for s > 0 (zero otherwise), L = sqrt(1 - eps),
and plateau cutoffs a, b.  The bending factor e^(-2f) is what buys scalar
curvature: R gains 4 f'' - 2 f'^2 + 2 f R to leading order, so q must be
large enough that f'' > 0 persists through s = 1; the defaults below are
validated by the acceptance suite (conclusions, not constants, are the
contract).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .errors import AssemblyError, ConstructionError, NeckQualityError, PreconditionError
from .grids import RadialGrid
from .mollify import smoothstep, smoothstep_d1, smoothstep_d2
from .paths import MetricPath, PSCCertificate, attach_certificate, certify_psc
from .warped import (
    FIBER_GAUSS,
    WarpedMetric,
    c2_deviation_from_cylinder,
    profile_curvature,
    scalar_curvature_warped,
)

__all__ = [
    "SurgeryParams",
    "StdMetric",
    "CappedMetric",
    "build_std_metric",
    "surgery_assemble",
    "surgery_param_path",
    "deform_surgery_cap",
    "sectional_preset",
]


@dataclass(frozen=True)
class SurgeryParams:
    """Constants of the surgery formula.

    C and q enter through f(s) = C eps e^(-q/s); q >= 4 keeps f convex
    through the monotonicity window s <= 1.  alpha/beta cutoff plateaus are
    (relative) widths of the transition bands.
    """

    eps: float = 0.01
    C: float = 10.0
    q: float = 4.0
    alpha_plateau: float = 0.2   # alpha = 1 on [1, 1+p], 0 on [2-p, 2]
    beta_plateau: float = 0.25   # beta = 1 near A_r0, 0 on the last half r0

    def __post_init__(self):
        if self.eps <= 0 or self.C <= 0 or self.q <= 0:
            raise PreconditionError("surgery constants must be positive")

    @property
    def lam(self) -> float:
        return float(np.sqrt(1.0 - self.eps))

    def f(self, s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        pos = s > 0
        out[pos] = self.C * self.eps * np.exp(-self.q / s[pos])
        return out

    def f_d1(self, s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        pos = s > 0
        out[pos] = self.f(s)[pos] * self.q / s[pos] ** 2
        return out

    def f_d2(self, s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        pos = s > 0
        sp = s[pos]
        out[pos] = self.f(s)[pos] * (self.q**2 / sp**4 - 2.0 * self.q / sp**3)
        return out

    def alpha(self, s):
        # 1 near s = 1, 0 near s = 2
        p = self.alpha_plateau
        return 1.0 - smoothstep((np.asarray(s, dtype=float) - 1.0 - p) / (1.0 - 2 * p))

    def alpha_d1(self, s):
        p = self.alpha_plateau
        return -smoothstep_d1((np.asarray(s, dtype=float) - 1.0 - p) / (1.0 - 2 * p)) / (1.0 - 2 * p)

    def alpha_d2(self, s):
        p = self.alpha_plateau
        return -smoothstep_d2((np.asarray(s, dtype=float) - 1.0 - p) / (1.0 - 2 * p)) / (1.0 - 2 * p) ** 2

    def beta_cut(self, s, A_r0: float, A_tip: float, r0: float):
        # 1 near A_r0, 0 on the last beta_plateau * r0 before the tip
        lo = A_r0 + self.beta_plateau * r0
        hi = A_tip - 0.5 * r0
        return 1.0 - smoothstep((np.asarray(s, dtype=float) - lo) / (hi - lo))

    def beta_cut_d1(self, s, A_r0, A_tip, r0):
        lo = A_r0 + self.beta_plateau * r0
        hi = A_tip - 0.5 * r0
        return -smoothstep_d1((np.asarray(s, dtype=float) - lo) / (hi - lo)) / (hi - lo)

    def beta_cut_d2(self, s, A_r0, A_tip, r0):
        lo = A_r0 + self.beta_plateau * r0
        hi = A_tip - 0.5 * r0
        return -smoothstep_d2((np.asarray(s, dtype=float) - lo) / (hi - lo)) / (hi - lo) ** 2


def sectional_preset() -> tuple["SurgeryParams", float, float]:
    """(params, A0, r0) for which surgery provably preserves positive
    sectional curvature on the sampled fixtures.

    Preserving sectional positivity needs the bending term f'' to stay
    convex through the whole cap (q = 2 (4 + A0)) and to dominate the
    cutoff wiggles on the blend band (large C), which in turn forces eps
    small enough that C eps stays O(0.1); validated by the acceptance sweep.
    """
    A0, r0 = 3.0, 1.0
    return SurgeryParams(eps=2.5e-5, C=1300.0, q=2.0 * (4.0 + A0),
                         alpha_plateau=0.02), A0, r0


@dataclass(frozen=True)
class StdMetric:
    """The standard initial metric: cylinder for s <= 4, round tip beyond.

    The warping profile (in the scalar-curvature-one convention) is exactly 1
    up to s = 4, follows sqrt(2) sin(u/2) within distance u <= r0 + ell of the
    tip (a ball inside the radius-2 round 3-sphere extended by a concave
    blend), and interpolates monotonically in between with nonnegative
    sectional curvature throughout.
    """

    A0: float
    r0: float
    blend: float                  # ell: length of the concave blend zone
    beta_floor: float             # measured min R over the sampled profile
    tip: float = field(default=0.0)

    def __post_init__(self):
        object.__setattr__(self, "tip", 4.0 + self.A0)

    # profile as a function of s' in (-inf, 4 + A0]; u = tip - s'
    def w(self, s):
        u = self.tip - np.asarray(s, dtype=float)
        return self._w_of_u(u)

    def _w_of_u(self, u):
        u = np.asarray(u, dtype=float)
        sphere = np.sqrt(2.0) * np.sin(np.minimum(u, self.r0 + self.blend) / 2.0)
        out = np.where(u <= self.r0, np.sqrt(2.0) * np.sin(u / 2.0), 0.0)
        mid = (u > self.r0) & (u < self.r0 + self.blend)
        if np.any(mid):
            out[mid] = self._blend_w(u[mid])
        out = np.where(u >= self.r0 + self.blend, 1.0, out)
        return out

    def _blend_w(self, u):
        # w' = phi'(u) (1 - S((u - r0)/ell)) with phi the sphere profile;
        # integrate the closed form numerically on a fixed fine rule
        from numpy.polynomial.legendre import leggauss

        x, wq = leggauss(24)
        u = np.asarray(u, dtype=float)
        out = np.empty_like(u)
        for i, ui in enumerate(u):
            a, b = self.r0, ui
            t = 0.5 * (b - a) * x + 0.5 * (a + b)
            integ = (np.cos(t / 2.0) / np.sqrt(2.0)) * (
                1.0 - smoothstep((t - self.r0) / self.blend)
            )
            out[i] = np.sqrt(2.0) * np.sin(self.r0 / 2.0) + 0.5 * (b - a) * np.dot(wq, integ)
        return out

    def w_d1(self, s):
        u = self.tip - np.asarray(s, dtype=float)
        # d/ds = -d/du
        phi_p = (np.cos(np.clip(u, 0.0, None) / 2.0) / np.sqrt(2.0)) * (
            1.0 - smoothstep((u - self.r0) / self.blend)
        )
        return -np.where(u <= 0, 0.0, np.where(u >= self.r0 + self.blend, 0.0, phi_p))

    def w_d2(self, s):
        u = self.tip - np.asarray(s, dtype=float)
        phi_pp = -(np.sin(np.clip(u, 0.0, None) / 2.0) / (2 * np.sqrt(2.0))) * (
            1.0 - smoothstep((u - self.r0) / self.blend)
        ) - (np.cos(np.clip(u, 0.0, None) / 2.0) / np.sqrt(2.0)) * smoothstep_d1(
            (u - self.r0) / self.blend
        ) / self.blend
        return np.where(u <= 0, 0.0, np.where(u >= self.r0 + self.blend, 0.0, phi_pp))

    def to_warped(self, s_min: float = -4.0, n_points: int = 801) -> WarpedMetric:
        grid = RadialGrid(s_min, self.tip, n_points)
        return WarpedMetric(grid=grid, w=self.w(grid.r), topology="capped_right")


def build_std_metric(A0: float = 10.0, r0: float = 1.0, n_check: int = 2001) -> StdMetric:
    """Construct the standard initial metric and verify its invariants."""
    if not (A0 > r0 > 0):
        raise PreconditionError("need A0 > r0 > 0")
    if r0 >= np.pi / 2:
        raise ConstructionError("r0 must stay below the quarter sphere (pi/2)")

    target = 1.0 - np.sqrt(2.0) * np.sin(r0 / 2.0)

    def height(ell):
        from numpy.polynomial.legendre import leggauss

        x, wq = leggauss(48)
        t = 0.5 * ell * x + 0.5 * (2 * r0 + ell) / 1.0 - r0 * 0.0
        t = 0.5 * ell * (x + 1.0) + r0
        integ = (np.cos(t / 2.0) / np.sqrt(2.0)) * (1.0 - smoothstep((t - r0) / ell))
        return 0.5 * ell * np.dot(wq, integ) - target

    ell_max = min(np.pi - r0 - 1e-6, A0 - r0 - 0.5)
    if height(ell_max) < 0:
        raise ConstructionError("blend cannot reach the cylinder height; enlarge A0")
    ell = brentq(height, 1e-3, ell_max, xtol=1e-12)

    std = StdMetric(A0=A0, r0=r0, blend=float(ell), beta_floor=0.0)
    # sectional sweep with the closed-form derivatives (FD would only be
    # measuring stencil error on the flat mollifier tails)
    u = np.linspace(1e-4, A0, n_check)
    s = std.tip - u
    w = std.w(s)
    w1 = std.w_d1(s)
    w2 = std.w_d2(s)
    K_rad = -w2 / w
    K_sph = (FIBER_GAUSS - w1**2) / w**2
    worst = float(min(np.min(K_rad), np.min(K_sph)))
    if worst < -1e-8:
        j = int(np.argmin(np.minimum(K_rad, K_sph)))
        raise ConstructionError(
            f"sectional sweep failed: min K = {worst:.3e} at s = {s[j]:.4f}"
        )
    R = 4 * K_rad + 2 * K_sph
    return replace(std, beta_floor=float(min(np.min(R), 1.0)))


@dataclass(frozen=True)
class CappedMetric:
    """Result of surgery: the neck with its positive end replaced by a cap."""

    metric: WarpedMetric          # lapse form on the s-grid over (-4, tip]
    params: SurgeryParams
    std: StdMetric
    source_window: tuple          # s-window where it coincides with the input
    report: dict = field(default_factory=dict)

    @property
    def tip(self) -> float:
        return self.std.tip


def _h_profile(h: WarpedMetric):
    """Warp function of the neck metric as a smooth callable with derivatives."""
    if h.lapse is not None:
        raise PreconditionError("neck metric must be in arclength form")
    if h.profile is not None:
        return h.profile.w, h.profile.deriv1, h.profile.deriv2
    sp = CubicSpline(h.r, h.w)
    return sp, sp.derivative(1), sp.derivative(2)


def assemble_profile(
    w_h, dw_h, d2w_h, p: SurgeryParams, std: StdMetric, s: np.ndarray
):
    """(P, Q) samples of the surgery metric P ds^2 + Q dtheta^2 at nodes s.

    Also returns (dQ, d2Q, dP, d2P) assembled from analytic derivatives of
    every ingredient, so curvature can be formed without differencing across
    the piecewise seams.
    """
    s = np.asarray(s, dtype=float)
    lam = p.lam
    A_r0 = std.tip - std.r0
    f, f1, f2 = p.f(s), p.f_d1(s), p.f_d2(s)
    e = np.exp(-2.0 * f)
    e1 = -2.0 * f1 * e
    e2 = (4.0 * f1**2 - 2.0 * f2) * e

    wh = np.asarray(w_h(s), dtype=float)
    wh1 = np.asarray(dw_h(s), dtype=float)
    wh2 = np.asarray(d2w_h(s), dtype=float)
    ws = std.w(s)
    ws1 = std.w_d1(s)
    ws2 = std.w_d2(s)

    al = np.where(s <= 1.0, 1.0, np.where(s >= 2.0, 0.0, p.alpha(s)))
    al1 = np.where((s > 1.0) & (s < 2.0), p.alpha_d1(s), 0.0)
    al2 = np.where((s > 1.0) & (s < 2.0), p.alpha_d2(s), 0.0)
    be = np.where(s <= A_r0, 1.0, p.beta_cut(s, A_r0, std.tip, std.r0))
    be1 = np.where(s > A_r0, p.beta_cut_d1(s, A_r0, std.tip, std.r0), 0.0)
    be2 = np.where(s > A_r0, p.beta_cut_d2(s, A_r0, std.tip, std.r0), 0.0)

    e_tip = float(np.exp(-2.0 * p.f(np.array([std.tip]))[0]))
    # conformal prefactor: e^{ -2f } before A_r0, then beta-interpolated
    pre = np.where(s <= A_r0, e, be * e + (1.0 - be) * e_tip)
    pre1 = np.where(s <= A_r0, e1, be1 * (e - e_tip) + be * e1)
    pre2 = np.where(s <= A_r0, e2, be2 * (e - e_tip) + 2.0 * be1 * e1 + be * e2)

    # blended metric inside the prefactor: m = alpha h + (1 - alpha) lam g_std
    mP = al + (1.0 - al) * lam
    mP1 = al1 * (1.0 - lam)
    mP2 = al2 * (1.0 - lam)
    mQ = al * wh**2 + (1.0 - al) * lam * ws**2
    mQ1 = al1 * (wh**2 - lam * ws**2) + al * 2 * wh * wh1 + (1 - al) * lam * 2 * ws * ws1
    mQ2 = (
        al2 * (wh**2 - lam * ws**2)
        + 2 * al1 * (2 * wh * wh1 - lam * 2 * ws * ws1)
        + al * 2 * (wh1**2 + wh * wh2)
        + (1 - al) * lam * 2 * (ws1**2 + ws * ws2)
    )

    P = pre * mP
    Q = pre * mQ
    P1 = pre1 * mP + pre * mP1
    P2 = pre2 * mP + 2 * pre1 * mP1 + pre * mP2
    Q1 = pre1 * mQ + pre * mQ1
    Q2 = pre2 * mQ + 2 * pre1 * mQ1 + pre * mQ2
    return P, Q, P1, Q1, P2, Q2


def _curvature_from_PQ(P, Q, P1, Q1, P2, Q2):
    """(R, K_rad, K_sph) of P ds^2 + Q dtheta^2 from analytic derivatives."""
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.sqrt(Q)
        w1 = Q1 / (2.0 * w)
        w2 = Q2 / (2.0 * w) - Q1**2 / (4.0 * Q * w)
        w_s = w1 / np.sqrt(P)
        w_ss = w2 / P - w1 * P1 / (2.0 * P**2)
        K_rad = -w_ss / w
        K_sph = (FIBER_GAUSS - w_s**2) / w**2
    return 4 * K_rad + 2 * K_sph, K_rad, K_sph


def surgery_assemble(
    h: WarpedMetric,
    p: SurgeryParams,
    std: StdMetric,
    n_points: int = 1601,
    check: bool = True,
) -> CappedMetric:
    """Perform surgery on a rotationally symmetric neck metric.

    Verifies, on the sampled output: coincidence with h on s <= 0,
    R_surg >= R_h - tol on s <= 1, positivity of R everywhere, and
    preservation of positive sectional curvature when the input has it.
    """
    dev = c2_deviation_from_cylinder(h.w, 1.0, h.grid.spacing, h.lapse)
    if dev > p.eps:
        raise NeckQualityError(
            f"neck is {dev:.3e} from the cylinder in discrete C^2 > eps = {p.eps}"
        )
    w_h, dw_h, d2w_h = _h_profile(h)
    grid = RadialGrid(-4.0, std.tip, n_points)
    s = grid.r
    # the template only reads h on s <= 2; extend by the cylinder beyond its domain
    b_dom = h.grid.b

    def w_ext(x):
        x = np.asarray(x, dtype=float)
        return np.where(x <= b_dom, w_h(np.minimum(x, b_dom)), 1.0)

    def dw_ext(x):
        x = np.asarray(x, dtype=float)
        return np.where(x <= b_dom, dw_h(np.minimum(x, b_dom)), 0.0)

    def d2w_ext(x):
        x = np.asarray(x, dtype=float)
        return np.where(x <= b_dom, d2w_h(np.minimum(x, b_dom)), 0.0)

    P, Q, P1, Q1, P2, Q2 = assemble_profile(w_ext, dw_ext, d2w_ext, p, std, s)
    metric = WarpedMetric(grid=grid, w=np.sqrt(Q), lapse=np.sqrt(P),
                          topology="capped_right")

    report = {}
    if check:
        R, K_rad, K_sph = _curvature_from_PQ(P, Q, P1, Q1, P2, Q2)
        # the analytic pole value: patch the tip node by parity
        R[-1], K_rad[-1], K_sph[-1] = R[-2], K_rad[-2], K_sph[-2]
        keep = s <= 0.0
        if np.max(np.abs(np.sqrt(Q[keep]) - w_ext(s[keep]))) > 1e-12 or np.max(
            np.abs(P[keep] - 1.0)
        ) > 1e-12:
            raise AssemblyError("output does not coincide with h on s <= 0")
        hR, hK_rad, hK_sph = profile_curvature(s, w_ext(s), None)
        mono = s <= 1.0
        margin = float(np.min((R - hR)[mono]))
        if margin < -1e-8:
            raise AssemblyError(
                f"R-monotonicity fails on s <= 1 by {margin:.3e}", report={"margin": margin}
            )
        if np.min(R) <= 0:
            raise AssemblyError(f"surgery output not PSC: min R = {np.min(R):.3e}")
        sec_in = float(min(np.min(hK_rad[mono]), np.min(hK_sph[mono])))
        sec_out = float(min(np.min(K_rad), np.min(K_sph)))
        if sec_in > 0 and sec_out <= 0:
            raise AssemblyError(
                f"positive sectional input lost positivity: min K out = {sec_out:.3e}"
            )
        report = {
            "c2_deviation": dev,
            "min_R": float(np.min(R)),
            "mono_margin": margin,
            "min_sectional_in": sec_in,
            "min_sectional_out": sec_out,
            "cap_sectional_min": float(
                min(np.min(K_rad[s >= 1.0]), np.min(K_sph[s >= 1.0]))
            ),
        }
    return CappedMetric(metric=metric, params=p, std=std,
                        source_window=(-4.0, 0.0), report=report)


def surgery_param_path(
    h: WarpedMetric,
    eps0: float,
    eps1: float,
    std: StdMetric,
    base: SurgeryParams | None = None,
    n_mu: int = 21,
    n_points: int = 1601,
    tol: float = 1e-8,
) -> MetricPath:
    """Continuous family mu -> h_surg at eps_mu = (1-mu) eps0 + mu eps1."""
    if not (0 < eps0 <= eps1):
        raise PreconditionError("need 0 < eps0 <= eps1")
    base = base or SurgeryParams()
    mu = np.linspace(0.0, 1.0, n_mu)
    metrics = []
    for m_ in mu:
        p = replace(base, eps=(1.0 - m_) * eps0 + m_ * eps1)
        capped = surgery_assemble(h, p, std, n_points=n_points, check=False)
        metrics.append(capped.metric)
    path = MetricPath(mu=mu, metrics=metrics,
                      endpoints={"start": f"surg eps={eps0}", "end": f"surg eps={eps1}"})
    cert = certify_psc(path, tol)
    return attach_certificate(path, cert)


def deform_surgery_cap(
    h: WarpedMetric,
    p: SurgeryParams,
    std: StdMetric,
    n_mu: int = 21,
    n_points: int = 1601,
    tol: float = 1e-8,
) -> MetricPath:
    """Deform the surgered neck to a rotationally symmetric cap.

    The path is mu -> (h_mu)_surg with h_mu = (1 - mu) h + mu g_cyl; it
    restricts to that linear homotopy on s <= 0 and ends at the (already
    rotationally symmetric) surgered cylinder.
    """
    w_h, dw_h, d2w_h = _h_profile(h)
    mu = np.linspace(0.0, 1.0, n_mu)
    metrics = []
    for m_ in mu:
        def w_mu(x, m_=m_):
            return np.sqrt((1.0 - m_) * np.asarray(w_h(x)) ** 2 + m_)

        def dw_mu(x, m_=m_):
            wv = np.asarray(w_h(x))
            return (1.0 - m_) * wv * np.asarray(dw_h(x)) / w_mu(x)

        def d2w_mu(x, m_=m_):
            wv, dv, d2v = np.asarray(w_h(x)), np.asarray(dw_h(x)), np.asarray(d2w_h(x))
            wm = w_mu(x)
            return ((1.0 - m_) * (dv**2 + wv * d2v) - dw_mu(x) ** 2) / wm

        from .warped import Profile

        hm = WarpedMetric(grid=h.grid, w=w_mu(h.r),
                          profile=Profile(w=w_mu, dw=dw_mu, d2w=d2w_mu))
        capped = surgery_assemble(hm, p, std, n_points=n_points, check=False)
        metrics.append(capped.metric)
    path = MetricPath(mu=mu, metrics=metrics,
                      endpoints={"start": "h_surg", "end": "rotationally symmetric cap"})
    cert = certify_psc(path, tol)
    return attach_certificate(path, cert)
