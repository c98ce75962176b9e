"""Curvature engine tests against closed forms and the sympy oracle."""

import numpy as np
import pytest

from psclab.errors import InvalidMetricError, PoleConditionError
from psclab.grids import RadialGrid
from psclab.warped import (
    POLE_SLOPE,
    Profile,
    WarpedMetric,
    c2_deviation_from_cylinder,
    cylinder_metric,
    profile_curvature,
    psi_to_unit_fiber,
    resample_arclength,
    round_sphere_metric,
    scalar_curvature_warped,
    sectional_curvatures_warped,
    w_from_unit_fiber,
)

from conftest import dumbbell_flat_ends
from oracles import warped_R_lambdified, warped_sectionals_lambdified


class TestScalarCurvature:
    def test_cylinder_is_scalar_curvature_one(self):
        m = cylinder_metric(0.0, 10.0, 101)
        rep = scalar_curvature_warped(m)
        assert np.max(np.abs(rep.R - 1.0)) < 1e-12

    def test_round_sphere_closed_form(self):
        # R = 6/rho^2 and the pole limit both to 1e-10
        for rho in (1.0, 2.0, 3.5):
            m = round_sphere_metric(rho, 201)
            rep = scalar_curvature_warped(m, engine="closed")
            assert np.max(np.abs(rep.R - 6.0 / rho**2)) < 1e-10

    def test_periodic_profile_matches_symbolic_oracle(self):
        grid = RadialGrid(0.0, 2 * np.pi, 401)
        w = 1.0 + 0.3 * np.sin(grid.r)
        m = WarpedMetric(grid=grid, w=w, topology="periodic")
        R_oracle = warped_R_lambdified("1 + 0.3*sin(r)")(grid.r)
        rep = scalar_curvature_warped(m)
        # max error O(dr^4)
        assert np.max(np.abs(rep.R - R_oracle)) < 50.0 * grid.spacing**4

    def test_fd_convergence_order(self):
        errs = []
        ns = (101, 201, 401)
        for n in ns:
            grid = RadialGrid(0.0, 2 * np.pi, n)
            w = 1.0 + 0.3 * np.sin(grid.r)
            m = WarpedMetric(grid=grid, w=w, topology="periodic")
            R_oracle = warped_R_lambdified("1 + 0.3*sin(r)")(grid.r)
            errs.append(np.max(np.abs(scalar_curvature_warped(m).R - R_oracle)))
        order = np.polyfit(np.log([n - 1 for n in ns]), np.log(errs), 1)[0]
        assert -order >= 3.5

    def test_nonpositive_w_rejected(self):
        grid = RadialGrid(0.0, 1.0, 11)
        w = np.ones(11)
        w[5] = -0.1
        with pytest.raises(InvalidMetricError):
            WarpedMetric(grid=grid, w=w)

    def test_pole_condition_enforced(self):
        grid = RadialGrid(0.0, np.pi, 101)
        w = np.sin(grid.r)  # slope 1 at pole, not 1/sqrt(2)
        with pytest.raises(PoleConditionError):
            WarpedMetric(grid=grid, w=w, topology="capped_both")


class TestSectionalCurvatures:
    def test_cylinder_sectionals(self):
        m = cylinder_metric(0.0, 10.0, 101)
        rep = sectional_curvatures_warped(m)
        assert np.max(np.abs(rep.K_rad)) < 1e-12
        assert np.max(np.abs(rep.K_sph - 0.5)) < 1e-12

    def test_round_sphere_sectionals(self):
        m = round_sphere_metric(2.0, 201)
        rep = sectional_curvatures_warped(m, engine="closed")
        assert np.max(np.abs(rep.K_rad - 0.25)) < 1e-10
        assert np.max(np.abs(rep.K_sph - 0.25)) < 1e-10

    def test_sectionals_match_riemann_oracle(self):
        grid = RadialGrid(0.0, 2 * np.pi, 401)
        w = 1.0 + 0.2 * np.sin(grid.r)
        m = WarpedMetric(grid=grid, w=w, topology="periodic")
        rep = sectional_curvatures_warped(m)
        k_rad_o, k_sph_o = warped_sectionals_lambdified("1 + 0.2*sin(r)")
        assert np.max(np.abs(rep.K_rad - k_rad_o(grid.r))) < 1e-5
        assert np.max(np.abs(rep.K_sph - k_sph_o(grid.r))) < 1e-5

    def test_dumbbell_signs(self):
        m = dumbbell_flat_ends()
        rep = sectional_curvatures_warped(m)
        waist = np.argmin(m.w)
        assert rep.K_sph[waist] > 0
        # flanks: radial curvature must go negative somewhere off the waist
        assert np.min(rep.K_rad) < 0


class TestHelpers:
    def test_fiber_conversion_roundtrip(self):
        w = np.linspace(0.5, 1.5, 11)
        assert np.allclose(psi_to_unit_fiber(w_from_unit_fiber(w)), w)
        # unit-fiber cylinder psi0 has R = 2/psi0^2; converted profile agrees
        psi0 = 1.3
        m = cylinder_metric(0.0, 5.0, 101).with_w(np.full(101, psi0 / np.sqrt(2.0)))
        rep = scalar_curvature_warped(m)
        assert np.allclose(rep.R, 2.0 / psi0**2, atol=1e-10)

    def test_c2_deviation_zero_for_cylinder(self):
        w = np.ones(51)
        assert c2_deviation_from_cylinder(w, 1.0, 0.1) == 0.0

    def test_resample_arclength_identity_when_unit_lapse(self):
        m = cylinder_metric(0.0, 5.0, 101)
        assert resample_arclength(m) is m

    def test_resample_arclength_of_conformal_stretch(self):
        # lapse-form cylinder P dr^2 + dtheta^2 resamples to a unit cylinder
        grid = RadialGrid(0.0, 5.0, 401)
        lapse = 1.0 + 0.3 * np.sin(grid.r) ** 2
        m = WarpedMetric(grid=grid, w=np.ones(401), lapse=lapse)
        ms = resample_arclength(m)
        assert ms.lapse is None
        rep = scalar_curvature_warped(ms)
        assert np.max(np.abs(rep.R - 1.0)) < 1e-6

    def test_profile_curvature_unit_fiber_round_sphere(self):
        # unit-radius fiber convention: psi = sin(r) gives the unit S^3, R = 6
        grid = RadialGrid(0.0, np.pi, 401)
        psi = np.sin(grid.r)
        R, K_rad, K_sph = profile_curvature(
            grid.r, psi, k_fiber=1.0, topology="capped_both"
        )
        assert np.max(np.abs(R - 6.0)) < 1e-5
        assert abs(POLE_SLOPE * np.sqrt(2.0) - 1.0) < 1e-14
