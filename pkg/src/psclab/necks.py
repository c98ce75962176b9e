"""Neck detection, neck alignment, and neck interpolation.

A neck structure is a window where the rescaled metric is close to the
standard cylinder ds^2 + dtheta^2 in a discrete C^2 norm (the C^[1/eps]
closeness of the continuum definition is truncated to two derivatives;
curvature only sees two).  Blending two overlapping neck charts follows the
cutoff construction: the transition map is compared against a rigid model
(A . theta, t + c) fitted by orthogonal Procrustes, the discrepancy is
switched off by a smooth cutoff, and the blended metric is joined to the
scale-interpolated cylinder by a linear homotopy whose positivity is
certified on the product grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import svd

from .errors import (
    CertificationError,
    InvalidMetricError,
    NeckIncompatibilityError,
    PreconditionError,
    RankError,
    StructureError,
)
from .grids import ProductGrid
from .mollify import eta_cutoff
from .paths import MetricPath, attach_certificate, certify_psc
from .product import (
    ProductField,
    _dax,
    angles_to_xyz,
    cylinder_field,
    rotate_sphere_points,
    xyz_to_angles,
)
from .warped import WarpedMetric, c2_deviation_from_cylinder, scalar_curvature_warped

__all__ = [
    "NeckStructure",
    "NeckChart",
    "TransitionMap",
    "JoinedNeck",
    "detect_neck",
    "neck_fit_isometry",
    "neck_blend",
    "chain_join",
    "fibonacci_directions",
]

SCALE_RATIO_BOUND = 0.1  # |h1/h2 - 1| must stay below this for alignment


@dataclass(frozen=True)
class NeckStructure:
    """An eps-neck window found inside a rotationally symmetric metric."""

    eps: float
    scale: float           # h = R(center)^(-1/2)
    center: float          # r-coordinate of the central sphere
    center_index: int
    orientation: int       # sign of d/ds against increasing r
    window: tuple          # (r_lo, r_hi) covered by accepted centers
    quality: float         # achieved discrete C2 deviation after rescaling

    def s_of_r(self, r):
        return self.orientation * (np.asarray(r) - self.center) / self.scale

    def r_of_s(self, s):
        return self.center + self.orientation * self.scale * np.asarray(s)


def detect_neck(
    g: WarpedMetric, eps: float, stride: int = 1
) -> list[NeckStructure]:
    """All maximal eps-neck windows of a rotationally symmetric metric.

    Every interior sample whose full window (center +/- h/eps) fits inside
    the domain is tested; accepted centers are merged into maximal clusters
    and each cluster reports its best center (ties resolved toward the
    cluster midpoint, deterministically).
    """
    if g.lapse is not None:
        raise InvalidMetricError("detect_neck expects an arclength-form metric")
    r = g.r
    hgrid = g.grid.spacing
    R = scalar_curvature_warped(g, engine="fd").R
    accepted = []
    for i in range(0, len(r), stride):
        if R[i] <= 0:
            continue
        h = R[i] ** -0.5
        half = h / eps
        lo, hi = r[i] - half, r[i] + half
        if lo < g.grid.a - 1e-12 or hi > g.grid.b + 1e-12:
            continue
        jlo = int(np.ceil((lo - g.grid.a) / hgrid - 1e-9))
        jhi = int(np.floor((hi - g.grid.a) / hgrid + 1e-9))
        dev = c2_deviation_from_cylinder(g.w[jlo : jhi + 1], h, hgrid)
        if dev <= eps:
            accepted.append((i, h, dev, lo, hi))
    if not accepted:
        return []
    # merge windows of accepted centers into clusters
    accepted.sort(key=lambda a: a[0])
    clusters = [[accepted[0]]]
    for item in accepted[1:]:
        if item[3] <= clusters[-1][-1][4]:  # windows overlap
            clusters[-1].append(item)
        else:
            clusters.append([item])
    out = []
    for cl in clusters:
        w_lo = min(a[3] for a in cl)
        w_hi = max(a[4] for a in cl)
        mid = 0.5 * (w_lo + w_hi)
        best = min(cl, key=lambda a: (round(a[2], 12), abs(r[a[0]] - mid), a[0]))
        out.append(
            NeckStructure(
                eps=eps, scale=best[1], center=float(r[best[0]]),
                center_index=int(best[0]), orientation=1,
                window=(float(w_lo), float(w_hi)), quality=float(best[2]),
            )
        )
    return out


# -- transition maps and Procrustes alignment ------------------------------


@dataclass(frozen=True)
class TransitionMap:
    """Sampled overlap map (theta, t) -> (p(theta,t), tau(theta,t)).

    src_dirs are unit fiber directions (m, 3); src_t the overlap window
    t-values (k,); img_dirs (m, k, 3) and img_t (m, k) the images.
    """

    src_dirs: np.ndarray
    src_t: np.ndarray
    img_dirs: np.ndarray
    img_t: np.ndarray

    def orientation_sign(self) -> float:
        dtau = np.diff(self.img_t, axis=1)
        return float(np.sign(np.mean(dtau)))


def fibonacci_directions(m: int) -> np.ndarray:
    """Deterministic, well-spread unit directions for fiber sampling."""
    i = np.arange(m, dtype=float)
    z = 1.0 - (2.0 * i + 1.0) / m
    phi = i * np.pi * (3.0 - np.sqrt(5.0))
    s = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    return np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=-1)


def sample_transition(
    transition: Callable, t_window: tuple, n_dirs: int = 64, n_t: int = 9
) -> TransitionMap:
    """Sample a transition callable (dirs, t) -> (dirs', t') on an overlap."""
    dirs = fibonacci_directions(n_dirs)
    ts = np.linspace(t_window[0], t_window[1], n_t)
    img_dirs = np.empty((n_dirs, n_t, 3))
    img_t = np.empty((n_dirs, n_t))
    for j, t in enumerate(ts):
        nd, td = transition(dirs, np.full(n_dirs, t))
        img_dirs[:, j, :] = nd
        img_t[:, j] = td
    return TransitionMap(src_dirs=dirs, src_t=ts, img_dirs=img_dirs, img_t=img_t)


def neck_fit_isometry(
    tm: TransitionMap, h1: float | None = None, h2: float | None = None
) -> tuple[np.ndarray, float, float]:
    """Best rigid model (A . theta, t + c) for a sampled transition map.

    Returns the rotation A in SO(3), the shift c, and the achieved discrete
    C^0 residual (max of fiber angle error and axial shift error).
    """
    if h1 is not None and h2 is not None:
        if abs(h1 / h2 - 1.0) >= SCALE_RATIO_BOUND:
            raise NeckIncompatibilityError(
                f"scale ratio h1/h2 = {h1 / h2:.4f} violates |h1/h2 - 1| < {SCALE_RATIO_BOUND}"
            )
    if tm.orientation_sign() <= 0:
        raise NeckIncompatibilityError(
            "transition reverses the axial orientation (needs g(ds1, ds2) > 0)"
        )
    src = tm.src_dirs
    if src.shape[0] < 3 or np.linalg.matrix_rank(src, tol=1e-8) < 3:
        raise RankError("need at least 3 independent fiber sample directions")
    # orthogonal Procrustes over all (direction, t) samples
    k = tm.img_dirs.shape[1]
    M = np.einsum("mkx,my->xy", tm.img_dirs, src)
    U, _, Vt = svd(M)
    D = np.diag([1.0, 1.0, np.sign(np.linalg.det(U @ Vt))])
    A = U @ D @ Vt
    c = float(np.mean(tm.img_t - tm.src_t[None, :]))
    rot = src @ A.T
    ang = np.arccos(np.clip(np.einsum("mx,mkx->mk", rot, tm.img_dirs), -1.0, 1.0))
    res_t = np.abs(tm.img_t - tm.src_t[None, :] - c)
    residual = float(max(np.max(ang), np.max(res_t)))
    return A, c, residual


# -- blending two neck charts ----------------------------------------------


@dataclass(frozen=True)
class NeckChart:
    """A neck with its pulled-back metric as an analytic/callable field.

    ``metric(dirs, t)`` returns the components of psi*(g) at the chart point
    (theta(dirs), phi(dirs), t) in (theta, phi, t) coordinates, shape
    (3, 3) + dirs.shape[:-1].
    """

    eps: float
    scale: float
    metric: Callable
    label: str = "neck"

    def window(self) -> tuple:
        return (-1.0 / self.eps, 1.0 / self.eps)


@dataclass(frozen=True)
class JoinedNeck:
    """Joined parametrization data produced by neck_blend / chain_join."""

    chart: NeckChart             # the joined chart as a composable field
    beta: float                  # joined domain is S^2 x (-1/eps, beta)
    A: np.ndarray                # fitted fiber rotation
    c: float                     # fitted axial shift
    seam: float                  # t-coordinate of the splice band center
    scale_left: float
    scale_right: float
    scale_profile: Callable      # t -> interpolated squared-scale H(t)
    min_jacobian: float          # min det of the splice reparametrization
    residual: float              # Procrustes residual of the transition


def _slerp(a: np.ndarray, b: np.ndarray, frac) -> np.ndarray:
    """Geodesic interpolation between unit vectors a -> b by fraction frac."""
    frac = np.asarray(frac)[..., None]
    dot = np.clip(np.sum(a * b, axis=-1, keepdims=True), -1.0, 1.0)
    ang = np.arccos(dot)
    small = ang[..., 0] < 1e-13
    sa = np.sin((1.0 - frac) * ang)
    sb = np.sin(frac * ang)
    denom = np.sin(ang)
    denom[small] = 1.0
    out = (sa * a + sb * b) / denom
    out[small] = a[small]
    return out / np.linalg.norm(out, axis=-1, keepdims=True)


def _angle_jacobian_rows(n, dn):
    """Rows d(theta', phi')/d(coords) from an embedded map n and its FD dn.

    n has shape (3,) + grid, dn shape (3, 3coords) + grid.
    """
    x, y, z = n[0], n[1], n[2]
    rxy2 = np.maximum(x * x + y * y, 1e-300)
    dth = -dn[2] / np.sqrt(rxy2)
    dph = (x * dn[1] - y * dn[0]) / rxy2
    return dth, dph


def _rigid_pullback(field2, A, shift, theta, phi, t):
    """Exact pullback of a chart field by (theta, t) -> (A theta, t + shift)."""
    TH, PH, T = np.meshgrid(theta, phi, t, indexing="ij")
    n = angles_to_xyz(TH, PH)
    n_img = n @ A.T
    th2, ph2 = xyz_to_angles(n_img)
    g2 = field2(n_img, T + shift)
    # Jacobian of the rotation in angle coordinates via orthonormal frames
    J = _rotation_angle_jacobian(A, TH, PH, th2, ph2)
    out = np.empty_like(g2)
    # indices: a,b image coords (theta,phi); i,j source coords
    out[:2, :2] = np.einsum("ai...,bj...,ab...->ij...", J, J, g2[:2, :2])
    out[2, 2] = g2[2, 2]
    mix = np.einsum("ai...,a...->i...", J, g2[:2, 2])
    out[0, 2] = out[2, 0] = mix[0]
    out[1, 2] = out[2, 1] = mix[1]
    return out


def _rotation_angle_jacobian(A, TH, PH, th2, ph2):
    """2x2 Jacobian d(theta2, phi2)/d(theta, phi) of the rotation A."""
    e_th = np.stack(
        [np.cos(TH) * np.cos(PH), np.cos(TH) * np.sin(PH), -np.sin(TH)], axis=0
    )
    e_ph = np.stack([-np.sin(PH), np.cos(PH), np.zeros_like(PH)], axis=0)  # unit
    f_th = np.stack(
        [np.cos(th2) * np.cos(ph2), np.cos(th2) * np.sin(ph2), -np.sin(th2)], axis=0
    )
    f_ph = np.stack([-np.sin(ph2), np.cos(ph2), np.zeros_like(ph2)], axis=0)
    Ae_th = np.einsum("xy,y...->x...", A, e_th)
    Ae_ph = np.einsum("xy,y...->x...", A, e_ph)
    s = np.sin(TH)
    s2 = np.maximum(np.sin(th2), 1e-300)
    J = np.empty((2, 2) + TH.shape)
    J[0, 0] = np.einsum("x...,x...->...", f_th, Ae_th)
    J[0, 1] = np.einsum("x...,x...->...", f_th, Ae_ph) * s
    J[1, 0] = np.einsum("x...,x...->...", f_ph, Ae_th) / s2
    J[1, 1] = np.einsum("x...,x...->...", f_ph, Ae_ph) * s / s2
    return J


def _splice_map(transition, A, c, seam, dirs, t):
    """The spliced chart map T = rigid o gamma, evaluated pointwise."""
    n_img, t_img = transition(dirs, t)
    p_tilde = n_img @ A  # A^-1 applied (A orthogonal)
    q_tilde = t_img - c - t
    eta = eta_cutoff(t - seam)
    n_gam = _slerp(dirs, p_tilde, eta)
    t_gam = t + eta * q_tilde
    return n_gam @ A.T, t_gam + c


def _spliced_pullback(field2, transition, A, c, seam, th, ph, tt, mid):
    """Pull the chart-2 field back through the cutoff splice map.

    The Jacobian of the splice map is formed as (analytic Jacobian of the
    rigid base map) + (finite differences of the deviation), so it is exact
    to machine precision when the transition is already rigid.
    """
    pad = 3
    jmid = np.where(mid)[0]
    j0, j1 = max(jmid[0] - pad, 0), min(jmid[-1] + pad, len(tt) - 1)
    tslab = tt[j0 : j1 + 1]
    TH, PH, T = np.meshgrid(th, ph, tslab, indexing="ij")
    dirs = angles_to_xyz(TH, PH)
    flat = dirs.reshape(-1, 3)
    nT, tT = _splice_map(transition, A, c, seam, flat, T.ravel())
    nT = nT.reshape(T.shape + (3,))
    tT = tT.reshape(T.shape)

    hs = (th[1] - th[0], ph[1] - ph[0], tslab[1] - tslab[0])
    per = (False, True, False)
    # base map: (theta, phi, t) -> (A . n, t + c); deviations are small
    base_n = dirs @ A.T
    dev_n = nT - base_n
    dev_t = tT - (T + c)
    # analytic Jacobian of the base embedding A . n(theta, phi)
    e_th = np.stack([np.cos(TH) * np.cos(PH), np.cos(TH) * np.sin(PH), -np.sin(TH)])
    e_ph_s = np.stack([-np.sin(TH) * np.sin(PH), np.sin(TH) * np.cos(PH),
                       np.zeros_like(TH)])
    dn = np.zeros((3, 3) + T.shape)  # dn[xyz, coord]
    dn[:, 0] = np.einsum("xy,y...->x...", A, e_th)
    dn[:, 1] = np.einsum("xy,y...->x...", A, e_ph_s)
    for x in range(3):
        for l in range(3):
            dn[x, l] += _dax(dev_n[..., x], hs[l], l, per[l])
    dt_rows = np.stack([_dax(dev_t, hs[l], l, per[l]) for l in range(3)])
    dt_rows[2] += 1.0

    n_arr = np.moveaxis(nT, -1, 0)
    dth_row, dph_row = _angle_jacobian_rows(n_arr, dn)
    J = np.stack([dth_row, dph_row, dt_rows])  # J[a, i] = d coord'_a / d coord_i

    th2, ph2 = xyz_to_angles(nT)
    g2 = field2(nT, tT)
    G = np.einsum("ai...,bj...,ab...->ij...", J, J, g2)
    detJ = (
        J[0, 0] * (J[1, 1] * J[2, 2] - J[1, 2] * J[2, 1])
        - J[0, 1] * (J[1, 0] * J[2, 2] - J[1, 2] * J[2, 0])
        + J[0, 2] * (J[1, 0] * J[2, 1] - J[1, 1] * J[2, 0])
    )
    sin_ratio = np.sin(th2) / np.sin(TH)
    sel = jmid - j0
    minjac = float(np.min((detJ * sin_ratio)[:, :, sel]))
    if minjac <= 0:
        raise CertificationError("spliced parametrization folds a grid cell")
    return G[:, :, :, :, sel], minjac




# -- joined-chart assembly (shared by neck_blend and chain_join) -----------


def _locate_overlap(tr, eps, target=-0.4):
    """t in current coordinates where the next chart's coordinate = target/eps."""
    ts = np.linspace(0.05 / eps, 0.98 / eps, 400)
    north = np.tile(np.array([[0.0, 0.0, 1.0]]), (len(ts), 1))
    _, tau = tr(north, ts)
    want = target / eps
    j = int(np.argmin(np.abs(tau - want)))
    # refine linearly between neighbors
    if 0 < j < len(ts) - 1 and tau[j + 1] != tau[j - 1]:
        frac = (want - tau[j - 1]) / (tau[j + 1] - tau[j - 1])
        return float(ts[j - 1] + frac * (ts[j + 1] - ts[j - 1]))
    return float(ts[j])


def _assemble_joined(charts, transitions, seams=None, n_theta=32, n_phi=64, dt=0.4):
    """Splice a chain of neck charts into one sampled field on one grid.

    Returns (field, grid, seams, rigs, beta, min_jacobian, residuals).
    Between seams the field is the exact rigid pullback of the owning chart;
    each seam band carries the cutoff splice.
    """
    eps = charts[0].eps
    rigs = []  # rigs[k]: rigid motion taking joined coords to chart_(k+1) coords
    residuals = []
    tr_joined = []
    seams_out = []
    A_cum, c_cum = np.eye(3), 0.0
    for k, tr in enumerate(transitions):
        if abs(charts[k + 1].eps - eps) > 1e-12:
            raise PreconditionError("necks must share the configured eps")
        # transition from joined coords to chart_(k+1) coords
        trj = _compose_rigid(tr, A_cum, c_cum)
        tr_joined.append(trj)
        z = seams[k] if seams is not None else _locate_overlap(trj, eps)
        tm = sample_transition(trj, (z - 2.5, z + 2.5))
        A, c, res = neck_fit_isometry(tm, charts[k].scale, charts[k + 1].scale)
        rigs.append((A, c))  # already cumulative: fitted from the composed map
        residuals.append(res)
        seams_out.append(z)
        A_cum, c_cum = A, c
    beta = 1.0 / eps - c_cum if transitions else 1.0 / eps

    t_lo, t_hi = -0.96 / eps, beta - 0.04 / eps
    n_t = max(int(np.ceil((t_hi - t_lo) / dt)) + 1, 9)
    grid = ProductGrid(n_theta=n_theta, n_phi=n_phi, t0=t_lo, t1=t_hi, n_t=n_t)
    th, ph, tt = grid.theta, grid.phi, grid.t
    TH, PH = np.meshgrid(th, ph, indexing="ij")
    dirs = angles_to_xyz(TH, PH)

    G = np.empty((3, 3) + grid.shape)
    filled = np.zeros(grid.n_t, dtype=bool)
    min_jac = 1.0

    # plateau regions: chart k owns (seam_{k-1} + 2, seam_k - 2)
    bounds = [-np.inf] + seams_out + [np.inf]
    for k, chart in enumerate(charts):
        lo = bounds[k] + 2.0 if k > 0 else -np.inf
        hi = bounds[k + 1] - 2.0 if k + 1 <= len(seams_out) else np.inf
        sel = (tt >= lo) & (tt <= hi)
        if sel.any():
            if k == 0:
                for jt in np.where(sel)[0]:
                    G[:, :, :, :, jt] = chart.metric(dirs, np.full(TH.shape, tt[jt]))
            else:
                A_k, c_k = _cumulative_rig(rigs, k)
                G[:, :, :, :, sel] = _rigid_pullback(chart.metric, A_k, c_k,
                                                     th, ph, tt[sel])
            filled |= sel
    # seam bands
    for k, z in enumerate(seams_out):
        band = (tt > z - 2.0) & (tt < z + 2.0)
        if band.any():
            Gband, mj = _spliced_pullback(
                charts[k + 1].metric, tr_joined[k], *rigs[k], z, th, ph, tt, band
            )
            G[:, :, :, :, band] = Gband
            min_jac = min(min_jac, mj)
            filled |= band
    if not filled.all():
        raise StructureError("joined grid has uncovered t-rows; check seam placement")
    field = ProductField(grid=grid, comps=G, eps_param=eps)
    field.check_spd()
    return field, grid, seams_out, rigs, beta, min_jac, residuals


def _cumulative_rig(rigs, k):
    """Rigid motion taking joined coordinates to chart_k coordinates."""
    if k == 0:
        return np.eye(3), 0.0
    return rigs[k - 1]


def _compose_rigid(tr, A, c):
    if c == 0.0 and np.allclose(A, np.eye(3)):
        return tr

    def composed(dirs, t):
        return tr(dirs @ A.T, np.asarray(t) + c)

    return composed


def _scale_profile(charts, seams):
    scales2 = [ch.scale**2 for ch in charts]

    def H(t):
        t = np.asarray(t, dtype=float)
        out = np.full(t.shape, scales2[0])
        for k, z in enumerate(seams):
            e = eta_cutoff(t - z)
            out = e * out + (1.0 - e) * scales2[k + 1]
        return out

    return H


def _certified_linear_path(field, Hprof, eps, n_mu, tol, label):
    grid = field.grid
    ghat = cylinder_field(grid, eps=eps).comps * Hprof(grid.t)[None, None, None, None, :]
    mu = np.linspace(0.0, 1.0, n_mu)
    metrics = [ProductField(grid=grid, comps=(1.0 - m_) * field.comps + m_ * ghat,
                            eps_param=eps) for m_ in mu]
    path = MetricPath(mu=mu, metrics=metrics,
                      endpoints={"start": label, "end": "scale-interpolated cylinder"})
    cert = certify_psc(path, tol)
    return attach_certificate(path, cert)


def neck_blend(
    n1: NeckChart,
    n2: NeckChart,
    transition: Callable,
    z_t1: float | None = None,
    n_theta: int = 32,
    n_phi: int = 64,
    dt: float = 0.4,
    n_mu: int = 21,
    tol: float = 1e-8,
) -> tuple[JoinedNeck, MetricPath]:
    """Join two overlapping neck charts and certify the straightening path.

    `transition` maps chart-1 points to chart-2 points: (dirs, t) ->
    (dirs', t').  The joined field agrees with chart 1 for t <= z - 2 and
    with chart 2 composed with the fitted rigid motion (A, c) for t >= z + 2;
    the returned path is the linear homotopy onto the scale-interpolated
    cylinder, which restricts to the stated linear homotopies on those end
    regions exactly.
    """
    eps = n1.eps
    if z_t1 is None:
        z_t1 = 0.5 / eps
    if not (-0.95 / eps < z_t1 < 0.95 / eps):
        raise PreconditionError("overlap point must lie in the (-0.95, 0.95)/eps window")
    field, grid, seams, rigs, beta, min_jac, residuals = _assemble_joined(
        [n1, n2], [transition], seams=[z_t1], n_theta=n_theta, n_phi=n_phi, dt=dt
    )
    Hprof = _scale_profile([n1, n2], seams)
    path = _certified_linear_path(field, Hprof, eps, n_mu, tol, "psi*(g)")
    A, c = rigs[0]
    joined = JoinedNeck(
        chart=_joined_chart([n1, n2], seams, rigs, eps, n1.scale,
                            f"{n1.label}+{n2.label}", field),
        beta=beta, A=A, c=c, seam=z_t1, scale_left=n1.scale, scale_right=n2.scale,
        scale_profile=Hprof, min_jacobian=min_jac, residual=residuals[0],
    )
    return joined, path


def chain_join(
    charts: list[NeckChart],
    transitions: list[Callable],
    chain_tol: float = 0.05,
    seams: list | None = None,
    n_theta: int = 32,
    n_phi: int = 64,
    dt: float = 0.4,
    n_mu: int = 21,
    tol: float = 1e-8,
) -> tuple[JoinedNeck, MetricPath]:
    """Join a structured chain of eps-necks into one long parametrization.

    Consecutive centers must sit at s_i = 0.9/eps of their predecessor
    (verified on the sampled transitions within relative `chain_tol`);
    splices are made at s(z) = 0.5/eps past each predecessor center and the
    certified path straightens the whole union at once.
    """
    if len(charts) != len(transitions) + 1:
        raise StructureError("need one transition per consecutive chart pair")
    eps = charts[0].eps
    if not charts[1:]:
        joined, path = _single_neck_path(charts[0], n_theta=n_theta, n_phi=n_phi,
                                         dt=dt, n_mu=n_mu, tol=tol)
        return joined, path

    # chain condition: next center at 0.9/eps of the predecessor
    for k, tr in enumerate(transitions):
        center = _locate_overlap(tr, eps, target=0.0)
        if abs(center - 0.9 / eps) > chain_tol * (0.9 / eps):
            raise StructureError(
                f"chain condition fails between necks {k} and {k + 1}: "
                f"s_{k}(x_{k + 1}) = {center:.5g} vs 0.9/eps = {0.9 / eps:.5g}"
            )

    field, grid, seams, rigs, beta, min_jac, residuals = _assemble_joined(
        charts, transitions, seams=seams, n_theta=n_theta, n_phi=n_phi, dt=dt
    )
    if beta <= 1.5 / eps:
        raise StructureError(f"joined length beta = {beta:.4g} <= 1.5/eps")
    Hprof = _scale_profile(charts, seams)
    path = _certified_linear_path(field, Hprof, eps, n_mu, tol, "chain psi*(g)")
    A_end, c_end = _cumulative_rig(rigs, len(charts) - 1)
    joined = JoinedNeck(
        chart=_joined_chart(charts, seams, rigs, eps, charts[0].scale, "chain", field),
        beta=beta, A=A_end, c=c_end, seam=seams[0],
        scale_left=charts[0].scale, scale_right=charts[-1].scale,
        scale_profile=Hprof, min_jacobian=min_jac, residual=float(max(residuals)),
    )
    return joined, path


def _joined_chart(charts, seams, rigs, eps, scale, label, field):
    """Composable chart for the joined neck; seam bands use grid interpolation."""
    interp = field.interpolator(method="linear")

    def metric(dirs_q, t_q):
        t_q = np.asarray(t_q, dtype=float)
        dirs_q = np.asarray(dirs_q, dtype=float)
        out = np.empty((3, 3) + t_q.shape)
        done = np.zeros(t_q.shape, dtype=bool)
        bounds = [-np.inf] + list(seams) + [np.inf]
        for k, chart in enumerate(charts):
            lo = bounds[k] + 2.0 if k > 0 else -np.inf
            hi = bounds[k + 1] - 2.0 if k + 1 <= len(seams) else np.inf
            sel = (t_q >= lo) & (t_q <= hi) & ~done
            if sel.any():
                A, c = _cumulative_rig(rigs, k)
                n_img = dirs_q[sel] @ A.T
                g2 = chart.metric(n_img, t_q[sel] + c)
                th2, ph2 = xyz_to_angles(n_img)
                th1, ph1 = xyz_to_angles(dirs_q[sel])
                J = _rotation_angle_jacobian(A, th1, ph1, th2, ph2)
                blk = np.einsum("ai...,bj...,ab...->ij...", J, J, g2[:2, :2])
                out[:2, :2, sel] = blk
                out[2, 2, sel] = g2[2, 2]
                mix = np.einsum("ai...,a...->i...", J, g2[:2, 2])
                out[0, 2, sel] = out[2, 0, sel] = mix[0]
                out[1, 2, sel] = out[2, 1, sel] = mix[1]
                done |= sel
        if not done.all():
            th1, ph1 = xyz_to_angles(dirs_q[~done])
            out[..., ~done] = interp(th1, ph1, t_q[~done])
        return out

    return NeckChart(eps=eps, scale=scale, metric=metric, label=label)


def _single_neck_path(chart, n_theta=32, n_phi=64, dt=0.4, n_mu=21, tol=1e-8):
    eps = chart.eps
    n_t = max(int(np.ceil(1.92 / eps / dt)) + 1, 9)
    grid = ProductGrid(n_theta=n_theta, n_phi=n_phi, t0=-0.96 / eps, t1=0.96 / eps, n_t=n_t)
    TH, PH = np.meshgrid(grid.theta, grid.phi, indexing="ij")
    dirs = angles_to_xyz(TH, PH)
    G = np.empty((3, 3) + grid.shape)
    for jt, t in enumerate(grid.t):
        G[:, :, :, :, jt] = chart.metric(dirs, np.full(TH.shape, t))
    field = ProductField(grid=grid, comps=G, eps_param=eps)
    Hprof = lambda t: chart.scale**2 + 0.0 * np.asarray(t)
    path = _certified_linear_path(field, Hprof, eps, n_mu, tol, "psi*(g)")
    joined = JoinedNeck(chart=chart, beta=1.0 / eps, A=np.eye(3), c=0.0, seam=0.0,
                        scale_left=chart.scale, scale_right=chart.scale,
                        scale_profile=Hprof, min_jacobian=1.0, residual=0.0)
    return joined, path
