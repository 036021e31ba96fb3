import numpy as np
import pytest

from pressure_lab.errors import ConfigurationError, NonEllipticError
from pressure_lab.geometry import disk_metric
from pressure_lab.spectral_core import GridField
from pressure_lab.symbols import (SymbolGrid, box_coordinates, build_parametrix,
                                  collar_box_metric, collar_cutoffs, constant_metric,
                                  flat_laplacian_symbol, full_cutoffs, mode_remainder,
                                  parametrix_remainder_order, quantize_apply,
                                  reconstruction_error, remainder_sweep, sharp_flat_split,
                                  sharp_levels, sharp_second_order, verify_sharp_ellipticity)


def _grid(n):
    x = box_coordinates(n)
    return np.meshgrid(x, x, indexing="ij")


def _disk_symbol(n, r0=0.5, delta=0.25):
    m = disk_metric(r0, n // 2, n)
    metric = collar_box_metric(m, n)
    return m, metric, sharp_second_order(metric, delta)


@pytest.fixture(scope="module")
def disk64():
    m, metric, e2 = _disk_symbol(64)
    M0 = verify_sharp_ellipticity(e2, m.c, collar_cutoffs(64, m.r0).inner)
    return m, e2, collar_cutoffs(64, m.r0, M0), M0


class TestQuantize:
    n = 32

    def test_variable_first_order(self):
        X1, X2 = _grid(self.n)
        b = 2.0 + np.cos(X1) * np.sin(X2)
        u = np.sin(2 * X1) * np.cos(3 * X2)
        a = SymbolGrid(self.n, 1.0, 0.0, b[None].astype(complex),
                       lambda k1, k2: np.atleast_2d(1j * k1))
        out = quantize_apply(a, GridField(u[None]))
        np.testing.assert_allclose(out.data[0], b * 2 * np.cos(2 * X1) * np.cos(3 * X2),
                                   atol=1e-10)

    def test_identity(self, rng):
        u = rng.normal(size=(self.n, self.n))
        one = SymbolGrid.multiplier(self.n, lambda a, b: np.ones_like(a), 0.0)
        np.testing.assert_allclose(quantize_apply(one, GridField(u[None])).data[0], u, atol=1e-12)

    def test_flat_laplacian(self):
        X1, X2 = _grid(self.n)
        u = np.cos(3 * X1 + X2) + np.sin(5 * X2)
        out = quantize_apply(flat_laplacian_symbol(self.n), GridField(u[None]))
        np.testing.assert_allclose(out.data[0], 10 * np.cos(3 * X1 + X2) + 25 * np.sin(5 * X2),
                                   atol=1e-12)

    def test_dense_matches_separable(self, rng):
        X1, _ = _grid(16)
        b = (1.5 + np.sin(X1))[None]
        a = SymbolGrid(16, 1.0, 0.0, b, lambda k1, k2: np.atleast_2d(k1 * k1 + k2))
        u = rng.normal(size=(16, 16)) + 0j
        np.testing.assert_allclose(quantize_apply(a, u, dense=True), quantize_apply(a, u),
                                   atol=1e-10)

    def test_from_function_matches_separable(self, rng):
        X1, X2 = _grid(16)
        sep = SymbolGrid(16, 2.0, 0.0, (1 + 0.3 * np.cos(X2))[None],
                         lambda k1, k2: np.atleast_2d(k1 * k1))
        gen = SymbolGrid.from_function(16, lambda x1, x2, k1, k2: (1 + 0.3 * np.cos(x2)) * k1 ** 2,
                                       2.0)
        u = rng.normal(size=(16, 16)) + 0j
        np.testing.assert_allclose(quantize_apply(gen, u), quantize_apply(sep, u), atol=1e-9)

    def test_rejects_bad_coefs(self):
        with pytest.raises(ConfigurationError):
            SymbolGrid(8, 1.0, 0.0, np.ones((1, 4, 4)), lambda a, b: a)
        with pytest.raises(ConfigurationError):
            SymbolGrid(8, 1.0, 1.0, np.ones((1, 8, 8)), lambda a, b: a)


class TestSplit:
    def test_constant_metric_has_no_flat_part(self):
        n = 32
        metric = constant_metric(n, ((2.0, 0.3), (0.3, 1.0)))
        sharp, flat = sharp_flat_split(metric, 0.25)
        k = np.arange(-n // 2, n // 2, dtype=float)
        for f in flat:
            assert np.max(np.abs(f.at(k, k[::-1]))) <= 1e-12
        assert reconstruction_error(sharp, flat, metric) <= 1e-12

    @pytest.mark.parametrize("M, delta, expected", [
        (256, 0.25, [1, 2, 4]), (16, 0.25, [1, 2]), (1, 0.25, [1]), (4096, 0.25, [1, 2, 4, 8]),
        (256, 0.49, [1, 2, 4, 8]),
    ])
    def test_sharp_levels(self, M, delta, expected):
        assert sharp_levels(M, delta) == expected

    def test_disk_reconstruction(self):
        _, metric, _ = _disk_symbol(64)
        sharp, flat = sharp_flat_split(metric, 0.25)
        assert reconstruction_error(sharp, flat, metric) <= 1e-12

    @pytest.mark.parametrize("delta", [0.0, 0.5, -0.1, 0.7])
    def test_delta_range(self, delta):
        with pytest.raises(ConfigurationError):
            sharp_flat_split(constant_metric(16), delta)


class TestEllipticity:
    def test_identity(self):
        e2 = sharp_second_order(constant_metric(32), 0.25)
        assert verify_sharp_ellipticity(e2, 1.0) == 2

    def test_disk_stable_under_refinement(self, disk64):
        m, _, _, M0 = disk64
        _, _, e2 = _disk_symbol(32)
        M0_coarse = verify_sharp_ellipticity(e2, m.c, collar_cutoffs(32, m.r0).inner)
        assert np.isfinite(M0)
        assert max(M0, M0_coarse) / min(M0, M0_coarse) <= 2

    def test_degenerate_metric_raises(self):
        _, metric, _ = _disk_symbol(32)
        e2 = sharp_second_order(metric.scaled(0.01), 0.25)
        with pytest.raises(NonEllipticError):
            verify_sharp_ellipticity(e2, 1.0)

    def test_empty_region(self):
        e2 = sharp_second_order(constant_metric(16), 0.25)
        with pytest.raises(ConfigurationError):
            verify_sharp_ellipticity(e2, 1.0, np.zeros((16, 16), bool))


class TestParametrix:
    def test_flat_inverse_exact(self):
        n = 32
        e2 = flat_laplacian_symbol(n)
        cut = full_cutoffs(n, 2.0)
        b = build_parametrix(e2, cut, 1)
        for N in (8, 12):
            assert mode_remainder(b, e2, cut, (N, N)) <= 1e-12
        assert parametrix_remainder_order(b, e2, cut, (4, 8)).exact

    def test_bad_order(self, disk64):
        _, e2, cut, _ = disk64
        with pytest.raises(ConfigurationError):
            build_parametrix(e2, cut, 3)

    def test_order_one_decays(self, disk64):
        _, e2, cut, _ = disk64
        b = build_parametrix(e2, cut, 1)
        fit = parametrix_remainder_order(b, e2, cut, (8, 16, 32, 64))
        assert not fit.exact
        assert fit.slope <= -0.6

    def test_order_two_improves(self, disk64):
        _, e2, cut, _ = disk64
        rows1 = dict(remainder_sweep(build_parametrix(e2, cut, 1), e2, cut, (32, 64)))
        rows2 = dict(remainder_sweep(build_parametrix(e2, cut, 2), e2, cut, (32, 64)))
        assert rows2[64] <= 0.7 * rows1[64]
        assert rows2[64] < rows2[32]

    def test_mode_remainder_bounded_by_cutoff(self, disk64):
        _, e2, cut, _ = disk64
        b = build_parametrix(e2, cut, 1)
        assert mode_remainder(b, e2, cut, (0, 0)) == pytest.approx(1.0)
