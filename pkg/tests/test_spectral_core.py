import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pressure_lab.errors import ConfigurationError, EmptyBlockError, ResolutionError
from pressure_lab.spectral_core import (GridField, bernstein_ratio, block_decomposition,
                                        bump, dft_forward, dft_inverse, lattice_radius,
                                        load_field, make_partition, project_block,
                                        save_field, smooth_ramp)


def field_1d(values):
    return GridField(np.asarray(values, dtype=float)[None])


class TestGridField:
    def test_rejects_non_power_of_two(self):
        with pytest.raises(ConfigurationError):
            GridField(np.zeros((1, 12, 12)))

    def test_rejects_non_square(self):
        with pytest.raises(ConfigurationError):
            GridField(np.zeros((1, 8, 16)))

    def test_from_function_components(self):
        f = GridField.from_function(lambda x, y: (np.cos(x), np.sin(y)), 16)
        assert f.components == 2 and f.n == 16 and f.dim == 2

    def test_roundtrip_file(self, tmp_path, rng):
        f = GridField(rng.normal(size=(2, 16, 16)))
        path = save_field(f, tmp_path / "u.bin")
        g = load_field(path)
        np.testing.assert_array_equal(f.data, g.data)
        assert (tmp_path / "u.json").exists()


class TestDFT:
    def test_constant(self):
        F = dft_forward(field_1d(np.full(32, 2.5)))
        assert F.coefficient(0) == pytest.approx(2.5)
        others = np.delete(F.coeffs[0], 0)
        assert np.max(np.abs(others)) < 1e-15

    def test_cosine_coefficients(self):
        x = 2 * np.pi * np.arange(64) / 64
        F = dft_forward(field_1d(np.cos(3 * x)))
        assert F.coefficient(3) == pytest.approx(0.5, abs=1e-14)
        assert F.coefficient(-3) == pytest.approx(0.5, abs=1e-14)
        mask = np.ones(64, bool)
        mask[[3, -3]] = False
        assert np.max(np.abs(F.coeffs[0][mask])) <= 1e-14

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2 ** 31 - 1), st.sampled_from([8, 16, 32]))
    def test_roundtrip(self, seed, n):
        f = GridField(np.random.default_rng(seed).normal(size=(2, n, n)))
        g = dft_inverse(dft_forward(f))
        assert np.max(np.abs(g.data - f.data)) <= 1e-12 * f.sup()


class TestPartition:
    def test_bump_plateau_and_support(self):
        r = np.linspace(0, 3, 301)
        b = bump(r)
        assert np.all(b[r <= 1] == 1.0)
        assert np.all(b[r >= 2] == 0.0)
        assert np.all(np.diff(b) <= 1e-15)

    def test_ramp_symmetry(self):
        s = np.linspace(0.01, 0.99, 50)
        np.testing.assert_allclose(smooth_ramp(s) + smooth_ramp(1 - s), 1.0, atol=1e-14)

    @pytest.mark.parametrize("J", [3, 6, 8])
    def test_partition_of_unity(self, J):
        part = make_partition(J)
        r = lattice_radius(4 * 2 ** J, 2)
        inside = r <= 2 ** J
        total = sum(part.multiplier(N, r[inside]) for N in part.levels)
        assert np.max(np.abs(total - 1.0)) <= 1e-14

    def test_low_block_is_one_on_unit_ball(self):
        part = make_partition(4)
        assert np.all(part.multiplier(1, np.linspace(0, 1, 11)) == 1.0)

    @pytest.mark.parametrize("N", [2, 4, 16])
    def test_block_vanishes_at_four_N(self, N):
        assert make_partition(6).multiplier(N, 4.0 * N) == 0.0

    def test_make_partition_rejects_small(self):
        with pytest.raises(ConfigurationError):
            make_partition(1)


class TestProjectBlock:
    @pytest.mark.parametrize("N", [2, 4, 8, 16])
    def test_single_mode_in_one_block(self, N):
        # phi(1) - phi(2) = 1 at |xi| = N, neighbours vanish there
        part = make_partition(5)
        f = GridField.from_function(lambda x, y: np.cos(N * x), 128)
        for M in part.resolvable_levels(128):
            block = project_block(f, M, part)
            if M == N:
                assert np.max(np.abs(block.data - f.data)) <= 1e-14
            else:
                assert block.sup() <= 1e-14

    def test_constant_only_in_low_block(self):
        part = make_partition(4)
        f = GridField(np.full((1, 32, 32), 3.0))
        blocks = block_decomposition(f, part)
        np.testing.assert_allclose(blocks[1].data, 3.0, atol=1e-15)
        assert all(b.sup() <= 1e-15 for N, b in blocks.items() if N > 1)

    def test_reconstruction(self, rng):
        n = 64
        spec = np.zeros((n, n), complex)
        spec[:8, :8] = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
        f = GridField(np.fft.ifft2(spec).real[None])
        part = make_partition(4)
        total = sum(b.data for b in block_decomposition(f, part).values())
        assert np.max(np.abs(total - f.data)) <= 1e-13 * max(1.0, f.sup())

    def test_unresolvable_level(self):
        f = GridField(np.zeros((1, 32, 32)))
        with pytest.raises(ResolutionError):
            project_block(f, 16)

    def test_non_dyadic_level(self):
        f = GridField(np.zeros((1, 32, 32)))
        with pytest.raises(ConfigurationError):
            project_block(f, 3)


class TestBernstein:
    def test_cosine_exact(self):
        f = GridField.from_function(lambda x, y: np.cos(8 * x), 64)
        assert bernstein_ratio(f, 8, 1.0) == pytest.approx(1.0, abs=1e-13)

    def test_s_zero(self):
        f = GridField.from_function(lambda x, y: np.cos(4 * x + 3 * y), 64)
        assert bernstein_ratio(f, 4, 0.0) == 1.0

    def test_lacunary_block(self):
        from pressure_lab.fields import LacunarySpec, synth_lacunary_divfree
        u = synth_lacunary_divfree(LacunarySpec(0.4, 5, 0), 128)
        for N in (4, 8, 16):
            assert 0.25 <= bernstein_ratio(u.component(0), N, 1.0) <= 4.0

    def test_empty_block(self):
        f = GridField.from_function(lambda x, y: np.cos(2 * x), 64)
        with pytest.raises(EmptyBlockError):
            bernstein_ratio(f, 8, 1.0)
