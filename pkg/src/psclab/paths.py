"""Metric homotopies with positivity certificates.

A MetricPath is a sampled family mu in [0,1] -> metric on one fixed grid.
Certificates are numerical witnesses: the minimum of the scalar curvature
over every (sample point, mu), the resolutions that produced it, and the
tolerance it was held against.  Paths are never returned silently negative:
constructors either certify or raise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .conformal import conformal_scalar_curvature, gauss_curvature_conformal, warped_laplacian
from .errors import CertificationError, InvalidMetricError, PreconditionError
from .product import ProductField, scalar_curvature_grid
from .warped import (
    CurvatureReport,
    Metric2D,
    WarpedMetric,
    scalar_curvature_warped,
)

__all__ = ["PSCCertificate", "MetricPath", "certify_psc", "conformal_path", "round_off_path"]

DEFAULT_PSC_TOL = 1e-8
DEFAULT_MU_SAMPLES = 101


@dataclass(frozen=True)
class PSCCertificate:
    """Numerical witness that min R > tolerance > 0 along a path."""

    min_R: float
    tolerance: float
    mu_resolution: int
    space_resolution: tuple
    argmin_mu: float
    argmin_where: object = None
    engine: str = "fd"
    extras: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.tolerance > 0 and self.min_R > self.tolerance

    def summary(self) -> str:
        state = "PASS" if self.passed else "FAIL"
        return (
            f"PSC certificate [{state}]: min R = {self.min_R:.6g} at mu = "
            f"{self.argmin_mu:.4g} (tol {self.tolerance:g}, {self.mu_resolution} mu-samples, "
            f"engine {self.engine})"
        )


@dataclass(frozen=True)
class ConformalSurface:
    """Surface metric e^f g recorded by its base and log conformal factor."""

    base: Metric2D
    f: np.ndarray

    @property
    def grid(self):
        return self.base.grid

    def gauss_curvature(self) -> np.ndarray:
        return gauss_curvature_conformal(self.base, self.f).R


@dataclass(frozen=True)
class MetricPath:
    """Sampled homotopy of metrics sharing one grid and topology tag."""

    mu: np.ndarray
    metrics: list
    certificate: PSCCertificate | None = None
    endpoints: dict = field(default_factory=dict)

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        object.__setattr__(self, "mu", mu)
        if len(mu) != len(self.metrics):
            raise InvalidMetricError("mu samples and metrics must align")
        if len(mu) < 2 or mu[0] != 0.0 or mu[-1] != 1.0 or np.any(np.diff(mu) <= 0):
            raise InvalidMetricError("mu must increase strictly from 0 to 1")
        first = self.metrics[0]
        if isinstance(first, WarpedMetric):
            for m in self.metrics:
                if m.grid != first.grid or m.topology != first.topology:
                    raise InvalidMetricError("path metrics must share grid and topology")
        elif isinstance(first, ProductField):
            for m in self.metrics:
                if m.grid != first.grid:
                    raise InvalidMetricError("path fields must share the product grid")

    def __len__(self):
        return len(self.mu)

    @property
    def kind(self) -> str:
        m = self.metrics[0]
        return {WarpedMetric: "warped", ProductField: "product",
                Metric2D: "surface", ConformalSurface: "surface"}[type(m)]

    def c0_gap(self, i: int, j: int) -> float:
        """Sup-norm distance between the component arrays of two samples."""
        a, b = self.metrics[i], self.metrics[j]
        if isinstance(a, WarpedMetric):
            return float(
                max(
                    np.max(np.abs(a.w**2 - b.w**2)),
                    np.max(np.abs(a.lapse_array() ** 2 - b.lapse_array() ** 2)),
                )
            )
        if isinstance(a, ProductField):
            return float(np.max(np.abs(a.comps - b.comps)))
        if isinstance(a, ConformalSurface):
            scale = np.maximum(a.base.w, 1e-30) ** 2
            return float(np.max(np.abs(np.exp(a.f) - np.exp(b.f)) * scale))
        return float(np.max(np.abs(a.w - b.w)))

    def lipschitz(self) -> float:
        """Max consecutive C0 gap per unit mu (reported continuity modulus)."""
        gaps = [
            self.c0_gap(i, i + 1) / (self.mu[i + 1] - self.mu[i])
            for i in range(len(self) - 1)
        ]
        return float(max(gaps))

    def reversed(self) -> "MetricPath":
        mu = 1.0 - self.mu[::-1]
        return MetricPath(
            mu=mu, metrics=list(self.metrics[::-1]), certificate=self.certificate,
            endpoints={"start": self.endpoints.get("end"), "end": self.endpoints.get("start")},
        )


def _min_R_of(metric) -> tuple[float, object]:
    if isinstance(metric, WarpedMetric):
        rep = scalar_curvature_warped(metric, engine="fd")
    elif isinstance(metric, ProductField):
        rep = scalar_curvature_grid(metric)
    elif isinstance(metric, (Metric2D, ConformalSurface)):
        rep = CurvatureReport(R=metric.gauss_curvature(), where=metric.grid.r)
    else:
        raise InvalidMetricError("unsupported metric type in path")
    _, loc = rep.argmin
    return rep.min, loc


def certify_psc(
    path: MetricPath, tol: float = DEFAULT_PSC_TOL, reports: list | None = None
) -> PSCCertificate:
    """Sweep the whole path and certify min R > tol (raise on failure)."""
    best = np.inf
    arg = (0.0, None)
    for mu, metric in zip(path.mu, path.metrics):
        if reports is not None:
            mn, loc = reports.pop(0)
        else:
            mn, loc = _min_R_of(metric)
        if mn < best:
            best, arg = mn, (float(mu), loc)
    m0 = path.metrics[0]
    space = (m0.grid.n_points,) if not isinstance(m0, ProductField) else m0.grid.shape
    cert = PSCCertificate(
        min_R=float(best), tolerance=tol, mu_resolution=len(path),
        space_resolution=space, argmin_mu=arg[0], argmin_where=arg[1],
    )
    if not cert.passed:
        raise CertificationError(cert.summary(), certificate=cert)
    return cert


def attach_certificate(path: MetricPath, cert: PSCCertificate) -> MetricPath:
    return MetricPath(mu=path.mu, metrics=path.metrics, certificate=cert,
                      endpoints=path.endpoints)


# -- conformal paths -------------------------------------------------------


def conformal_path(
    g, target, n_mu: int = DEFAULT_MU_SAMPLES, tol: float = DEFAULT_PSC_TOL
) -> MetricPath:
    """Straight-line conformal homotopy onto a PSC conformal representative.

    n >= 3 (warped g, target u > 0): g_mu = ((1-mu) + mu u)^4 g; positivity
    along the path follows from convexity once both endpoints are PSC, and
    is certified by sweeping the conformal identity.  n = 2 (surface, target
    f): g_mu = e^(mu f) g certified on Gauss curvature.
    """
    mu = np.linspace(0.0, 1.0, n_mu)
    if isinstance(g, Metric2D):
        f = np.asarray(target, dtype=float)
        mins = []
        metrics = []
        for m_ in mu:
            rep = gauss_curvature_conformal(g, m_ * f)
            mins.append((rep.min, rep.argmin[1]))
            metrics.append(ConformalSurface(base=g, f=m_ * f))
        path = MetricPath(mu=mu, metrics=metrics,
                          endpoints={"start": "g", "end": "e^f g"})
        cert = certify_psc(path, tol, reports=mins)
        if not cert.passed:
            raise CertificationError(cert.summary(), certificate=cert)
        return attach_certificate(path, cert)

    if not isinstance(g, WarpedMetric):
        raise InvalidMetricError("conformal_path expects a warped metric or a surface")
    u = np.asarray(target, dtype=float)
    if np.any(u <= 0):
        raise PreconditionError("target conformal factor must be positive")
    end = conformal_scalar_curvature(g, u)
    if end.min <= tol:
        raise CertificationError(
            f"endpoint u^4 g is not PSC: min R = {end.min:.6g} at r = {end.argmin[1]}",
            certificate=None,
        )
    mins, metrics = [], []
    for m_ in mu:
        u_mu = (1.0 - m_) + m_ * u
        rep = conformal_scalar_curvature(g, u_mu)
        mins.append((rep.min, rep.argmin[1]))
        lp = g.lapse_array() * u_mu**2
        metrics.append(WarpedMetric(grid=g.grid, w=g.w * u_mu**2, dim=g.dim,
                                    topology=g.topology, lapse=lp))
    path = MetricPath(mu=mu, metrics=metrics, endpoints={"start": "g", "end": "u^4 g"})
    cert = certify_psc(path, tol, reports=mins)
    return attach_certificate(path, cert)


# -- the rotationally symmetric round-off path -----------------------------


def _end_bands(w: np.ndarray, band_tol: float) -> tuple[int, int]:
    """Indices (ia, ib) with w == 1 (within tol) on [0, ia] and [ib, end]."""
    flat = np.abs(w - 1.0) <= band_tol
    if not (flat[0] and flat[-1]):
        raise PreconditionError("profile must be cylindrical near both ends")
    ia = int(np.argmin(flat)) - 1 if not flat.all() else len(w) - 1
    ib = len(w) - int(np.argmin(flat[::-1]))
    return ia, ib


def round_off_path(
    m: WarpedMetric,
    n_mu: int = DEFAULT_MU_SAMPLES,
    tol: float = DEFAULT_PSC_TOL,
    band_tol: float = 1e-12,
) -> MetricPath:
    """Deform a rotationally symmetric PSC metric with cylindrical ends into
    the exact cylinder, keeping the metric fixed on the end bands.

    Two stages: a conformal squash onto w^-2 g (mu in [0, 1/2], convex in the
    conformal factor) followed by a linear cylindrical stretch of the radial
    coefficient (mu in [1/2, 1], every metric has R = 1 after a change of
    variables).  The mu = 1 metric is the exact cylinder in the original
    coordinates.
    """
    if n_mu % 2 == 0:
        n_mu += 1  # keep mu = 1/2 on the sample grid
    n = m.dim
    w = m.w
    lp = m.lapse_array()
    _end_bands(w, band_tol)
    if m.lapse is not None and np.max(np.abs(lp - 1.0) * (np.abs(w - 1.0) <= band_tol)) > band_tol:
        raise PreconditionError("end bands must be exact cylinder (unit lapse)")
    base = scalar_curvature_warped(m, engine="fd")
    if base.min <= tol:
        raise CertificationError(
            f"input metric not PSC: min R = {base.min:.6g}", certificate=None
        )
    mu = np.linspace(0.0, 1.0, n_mu)
    metrics, mins = [], []
    expo = 4.0 / (n - 2)
    for m_ in mu:
        if m_ <= 0.5:
            F = (1.0 - 2.0 * m_) + 2.0 * m_ * w ** ((2.0 - n) / 2.0)
            conf = F ** (expo / 2.0)  # metric scales by F^expo; lengths by F^(expo/2)
            metrics.append(
                WarpedMetric(grid=m.grid, w=conf * w, dim=n, topology=m.topology,
                             lapse=conf * lp)
            )
            rep = conformal_scalar_curvature(m, F)
            mins.append((rep.min, rep.argmin[1]))
        else:
            P = (2.0 - 2.0 * m_) * (lp / w) ** 2 + (2.0 * m_ - 1.0)
            mm = WarpedMetric(grid=m.grid, w=np.ones_like(w), dim=n,
                              topology=m.topology, lapse=np.sqrt(P))
            metrics.append(mm)
            rep = scalar_curvature_warped(mm, engine="fd")
            mins.append((rep.min, rep.argmin[1]))
    path = MetricPath(mu=mu, metrics=metrics,
                      endpoints={"start": "g", "end": "cylinder"})
    cert = certify_psc(path, tol, reports=mins)
    return attach_certificate(path, cert)
