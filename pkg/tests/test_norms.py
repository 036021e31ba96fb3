import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pressure_lab.acceptance import xlogx_field
from pressure_lab.errors import DegenerateFitError
from pressure_lab.fields import LacunarySpec, synth_lacunary_divfree
from pressure_lab.norms import (BlockProfile, block_profile, default_fit_range,
                                fit_decay_exponent, fit_log_growth, fit_power_law,
                                holder_norm, loglip_norm, second_difference_norm,
                                zygmund_norm)
from pressure_lab.spectral_core import GridField, make_partition


def window(func, n, lo=-1.0, hi=1.0):
    x = lo + (hi - lo) * np.arange(n) / n
    return GridField(func(x)[None], extent=hi - lo, origin=lo, periodic=False)


class TestZygmund:
    def test_zero(self):
        assert zygmund_norm(GridField(np.zeros((1, 32, 32))), 0.5, make_partition(3)) == 0.0

    def test_single_block(self):
        f = GridField.from_function(lambda x, y: np.cos(8 * x), 64)
        assert zygmund_norm(f, 1.0, make_partition(4)) == pytest.approx(8.0, abs=1e-12)

    def test_lacunary_amplitude(self):
        # shells carry sup 2^(-gamma j), so N^gamma ||u_N|| is of unit size
        u = synth_lacunary_divfree(LacunarySpec(0.4, 6, 0), 256)
        val = zygmund_norm(u, 0.4, make_partition(6))
        assert 1 / 3 <= val <= 3

    def test_rejects_large_index(self):
        with pytest.raises(ValueError):
            zygmund_norm(GridField(np.zeros((1, 16, 16))), 2.5, make_partition(2))


class TestSecondDifference:
    def test_affine_annihilated(self):
        f = window(lambda x: 2 * x, 256)
        value, profile = second_difference_norm(f)
        assert max(profile.values()) <= 1e-12
        assert value == pytest.approx(f.sup())

    def test_xlogx_log_growth(self):
        _, profile = second_difference_norm(xlogx_field(2 ** 14))
        a, _ = fit_log_growth(profile)
        assert a == pytest.approx(2.0, rel=0.2)

    def test_xlogx_quotient_at_origin(self):
        # at x = 0 the quotient is exactly 2 |log h|
        _, profile = second_difference_norm(xlogx_field(2 ** 12))
        for h, q in profile.items():
            assert q == pytest.approx(2 * abs(math.log(h)), rel=1e-12)

    def test_sine_taylor_bound(self):
        # |sin(x+h) + sin(x-h) - 2 sin x| / h = 2 (1 - cos h) |sin x| / h <= h ||f''||
        f = GridField.from_function(lambda x, y: np.sin(x), 128)
        value, profile = second_difference_norm(f)
        for h, q in profile.items():
            assert q <= h + 1e-12
            assert q == pytest.approx(2 * (1 - math.cos(h)) / h, rel=1e-3)
        assert np.isfinite(value)


class TestLogLip:
    def test_constant(self):
        f = window(lambda x: np.full_like(x, -3.0), 64)
        assert loglip_norm(f) == pytest.approx(3.0)

    def test_xlogx_stable(self):
        a, b = loglip_norm(xlogx_field(2 ** 12)), loglip_norm(xlogx_field(2 ** 14))
        assert max(a, b) / min(a, b) <= 1.1

    def test_square_root_diverges(self):
        vals = [loglip_norm(window(lambda x: np.sqrt(np.abs(x)), n)) for n in (2 ** 10, 2 ** 12, 2 ** 14)]
        assert vals[1] >= 1.3 * vals[0] and vals[2] >= 1.3 * vals[1]


class TestHolder:
    def test_zero(self):
        assert holder_norm(GridField(np.zeros((1, 16, 16))), 0.5) == 0.0

    def test_cosine_lipschitz(self):
        f = GridField.from_function(lambda x, y: np.cos(x), 512)
        assert holder_norm(f, 1.0) == pytest.approx(2.0, rel=0.01)

    @pytest.mark.parametrize("gamma,seed", [(0.4, 0), (0.4, 1), (0.5, 2)])
    def test_equivalent_to_zygmund(self, gamma, seed):
        u = synth_lacunary_divfree(LacunarySpec(gamma, 6, seed), 256)
        ratio = holder_norm(u, gamma) / zygmund_norm(u, gamma, make_partition(6))
        assert 0.25 <= ratio <= 4

    def test_rejects_gamma(self):
        with pytest.raises(ValueError):
            holder_norm(GridField(np.zeros((1, 16, 16))), 1.5)


class TestFits:
    def test_exact_power_law(self):
        prof = BlockProfile((8, 16, 32, 64), tuple(1.0 / N for N in (8, 16, 32, 64)))
        fit = fit_decay_exponent(prof, (8, 64))
        assert fit.slope == pytest.approx(-1.0, abs=1e-12)
        assert fit.r_squared == pytest.approx(1.0)

    def test_constant_profile(self):
        prof = BlockProfile((8, 16, 32, 64), (2.0,) * 4)
        assert fit_decay_exponent(prof, (8, 64)).slope == pytest.approx(0.0, abs=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(-3, 1), st.floats(0.1, 10))
    def test_recovers_slope(self, slope, c):
        levels = (4, 8, 16, 32, 64)
        prof = BlockProfile(levels, tuple(c * N ** slope for N in levels))
        assert fit_decay_exponent(prof, (4, 64)).slope == pytest.approx(slope, abs=1e-9)

    def test_too_few_levels(self):
        prof = BlockProfile((8, 16), (1.0, 0.5))
        with pytest.raises(DegenerateFitError):
            fit_decay_exponent(prof, (8, 16))

    def test_zero_block(self):
        prof = BlockProfile((8, 16, 32, 64), (1.0, 0.0, 0.5, 0.2))
        with pytest.raises(DegenerateFitError):
            fit_decay_exponent(prof, (8, 64))

    def test_default_range(self):
        assert default_fit_range(8) == (8, 64)

    def test_power_law_natural_log(self):
        fit = fit_power_law([1, 2, 4], [1, 0.25, 0.0625])
        assert fit.slope == pytest.approx(-2.0)

    def test_profile_validation(self):
        with pytest.raises(ValueError):
            BlockProfile((2, 1), (1.0, 1.0))

    def test_block_profile_levels(self):
        f = GridField.from_function(lambda x, y: np.cos(4 * x), 64)
        prof = block_profile(f, make_partition(3))
        assert prof.as_dict()[4] == pytest.approx(1.0, abs=1e-14)
