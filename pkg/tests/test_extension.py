import numpy as np
import pytest

from pressure_lab import extension as ext
from pressure_lab.bounded_solver import solve_disk_pressure
from pressure_lab.errors import PreconditionError
from pressure_lab.extension import (CollarBump, advective_flux, default_bumps,
                                    extended_equation_residual, jump_diagnostic,
                                    metric_lipschitz, mirror, one_sided_traces, pressure_flux,
                                    reflect, restrict, sheet_divergence, weak_divergence_residual)
from pressure_lab.fields import StreamSpec, disk_velocity_exact, synth_disk_tangent
from pressure_lab.geometry import PolarGrid, collar_from_polar, disk_metric, scalar_to_collar


@pytest.fixture(scope="module")
def lacunary_collar():
    grid = PolarGrid.from_n(256)
    u = disk_velocity_exact(StreamSpec(0.4, 3, seed=1), grid)
    ur, ut, m = collar_from_polar(u, 0.5)
    return grid, ur, ut, m


class TestReflect:
    def test_constant_tangential(self):
        m = disk_metric(0.5, 16, 32)
        rc = reflect(np.zeros(m.shape), np.ones(m.shape), m)
        assert np.all(rc.ur == 0.0) and np.all(rc.ut == 1.0)
        assert rc.r.size == 33 and rc.r[rc.K] == 0.0

    def test_parities_and_restrict(self, rng):
        m = disk_metric(0.5, 8, 16)
        ur = rng.normal(size=m.shape)
        ur[0] = 0.0
        ut, p = rng.normal(size=m.shape), rng.normal(size=m.shape)
        rc = reflect(ur, ut, m, p)
        back = restrict(rc)
        np.testing.assert_array_equal(back[0], ur)
        np.testing.assert_array_equal(back[1], ut)
        np.testing.assert_array_equal(back[2], p)
        rc2 = mirror(rc)
        np.testing.assert_array_equal(rc2.ur, rc.ur)
        np.testing.assert_array_equal(rc2.p, rc.p)

    def test_rejects_non_tangent(self):
        m = disk_metric(0.5, 8, 16)
        with pytest.raises(PreconditionError, match="tangent"):
            reflect(np.ones(m.shape), np.zeros(m.shape), m)

    def test_odd_extension_smooth(self):
        m = disk_metric(0.5, 64, 16)
        f = 1.0 + 0.5 * np.cos(m.theta)
        ur = np.sin(np.pi * m.r / 0.5)[:, None] * f
        rc = reflect(ur, np.zeros(m.shape), m)
        d = ext._piecewise_r(rc.ur, rc.h, rc.K)
        plus, minus = one_sided_traces(d, rc.K)
        assert np.max(np.abs(plus - minus)) <= 1e-10
        np.testing.assert_allclose(plus[0], 2 * np.pi * f, rtol=1e-6)

    def test_solver_pressure_is_even(self):
        grid = PolarGrid.from_n(64)
        u = synth_disk_tangent(StreamSpec(0.4, 3, seed=0), grid)
        sol, _ = solve_disk_pressure(u)
        ur, ut, m = collar_from_polar(u, 0.5)
        rc = reflect(ur, ut, m, scalar_to_collar(sol.p, grid, 0.5))
        np.testing.assert_array_equal(rc.p, rc.p[::-1])
        d = ext._piecewise_r(rc.p, rc.h, rc.K)
        plus, minus = one_sided_traces(d, rc.K)
        assert np.max(np.abs(plus + minus)) <= 1e-12


class TestWeakDivergence:
    def test_zero_field(self):
        m = disk_metric(0.5, 16, 32)
        z = np.zeros(m.shape)
        assert weak_divergence_residual(reflect(z, z, m)) == 0.0

    def test_differenced_field_second_order(self):
        # differencing error of the polar stream field, not a sheet: O(h^2)
        vals = []
        for n in (128, 256):
            u = synth_disk_tangent(StreamSpec(0.4, 3, seed=0), PolarGrid.from_n(n))
            vals.append(weak_divergence_residual(reflect(*collar_from_polar(u, 0.5))))
        assert vals[1] <= 1e-5 and vals[0] / vals[1] >= 3.5

    def test_exact_samples_analytic_pairing(self, lacunary_collar):
        _, ur, ut, m = lacunary_collar
        assert weak_divergence_residual(reflect(ur, ut, m), pairing="analytic") <= 1e-6

    def test_sheet_detected(self, lacunary_collar):
        _, ur, ut, m = lacunary_collar
        rc = reflect(ur + 1.0 / m.G, ut, m, check=False)
        assert weak_divergence_residual(rc, pairing="analytic") >= 0.1

    def test_sheet_matches_closed_form(self):
        # the discontinuous row r = 0 costs O(h) in the quadrature
        errs = []
        for n in (128, 256):
            grid = PolarGrid.from_n(n)
            ur, ut, m = collar_from_polar(disk_velocity_exact(StreamSpec(0.4, 3, seed=1), grid), 0.5)
            rc = reflect(ur + 1.0 / m.G, ut, m, check=False)
            _, per = weak_divergence_residual(rc, pairing="analytic", per_bump=True)
            worst = 0.0
            for phi, val in zip(default_bumps(0.5), per):
                ar, at = phi.grad(rc.r, rc.theta)
                norm = max(np.max(np.abs(phi.value(rc.r, rc.theta))), np.max(np.abs(ar)),
                           np.max(np.abs(at)))
                exact = abs(sheet_divergence(rc, phi)) / norm
                worst = max(worst, abs(val - exact) / exact)
            errs.append(worst)
        assert errs[1] <= 0.05 and errs[0] / errs[1] >= 1.8

    def test_unknown_pairing(self, lacunary_collar):
        _, ur, ut, m = lacunary_collar
        with pytest.raises(ValueError):
            weak_divergence_residual(reflect(ur, ut, m), pairing="magic")

    def test_bump_gradient(self):
        phi = CollarBump(0.05, 0.2, 1.0)
        r = np.linspace(-0.3, 0.3, 2001)
        th = np.array([0.9, 1.0, 1.3])
        dr, _ = phi.grad(r, th)
        num = np.gradient(phi.value(r, th), r, axis=0)
        assert np.max(np.abs(dr - num)[1:-1]) <= 1e-3


class TestJumps:
    def test_advective_flux_continuous(self, lacunary_collar):
        _, ur, ut, m = lacunary_collar
        rc = reflect(ur, ut, m)
        assert np.max(np.abs(jump_diagnostic(advective_flux(rc), rc))) <= 1e-6

    def test_sign_flip_detected(self):
        m = disk_metric(0.5, 32, 16)
        K = m.r.size - 1
        F = np.where(np.arange(2 * K + 1)[:, None] >= K, 1.0, -1.0) * (2.0 + np.cos(m.theta))
        jumps = jump_diagnostic(F, K=K)
        np.testing.assert_allclose(jumps[0], 2 * (2.0 + np.cos(m.theta)), rtol=1e-12)

    def test_angular_pressure_flux(self, lacunary_collar):
        grid, ur, ut, m = lacunary_collar
        R, T = grid.mesh()
        p = (R ** 3 - 0.3) * np.sin(3 * T)
        rc = reflect(ur, ut, m, scalar_to_collar(p, grid, 0.5))
        assert np.max(np.abs(jump_diagnostic(pressure_flux(rc), rc)[1])) <= 1e-8

    def test_non_neumann_pressure(self, lacunary_collar):
        grid, ur, ut, m = lacunary_collar
        R, _ = grid.mesh()
        rc = reflect(ur, ut, m, scalar_to_collar(R ** 2, grid, 0.5))
        jumps = jump_diagnostic(pressure_flux(rc), rc)
        # G d_r p = -2 on r = 0+ and +2 on r = 0-
        np.testing.assert_allclose(jumps[0], -4.0, atol=1e-8)

    def test_pressure_required(self):
        m = disk_metric(0.5, 8, 16)
        z = np.zeros(m.shape)
        with pytest.raises(PreconditionError):
            pressure_flux(reflect(z, z, m))


class TestMetric:
    def test_lipschitz_across_boundary(self):
        m = disk_metric(0.5, 64, 16)
        z = np.zeros(m.shape)
        rep = metric_lipschitz(reflect(z, z, m))
        assert rep["lipschitz"] <= rep["lipschitz_bound"]
        assert rep["second_derivative"] <= rep["second_derivative_bound"] * 1.01

    def test_extended_equation_matches(self):
        grid = PolarGrid.from_n(64)
        u = synth_disk_tangent(StreamSpec(0.4, 3, seed=0), grid)
        sol, _ = solve_disk_pressure(u)
        ur, ut, m = collar_from_polar(u, 0.5)
        p = scalar_to_collar(sol.p, grid, 0.5)
        rc = reflect(ur, ut, m, p)
        _, _, mismatch = extended_equation_residual(rc, ur, ut, p, m)
        assert mismatch <= 1e-9
