import numpy as np
import pytest
import sympy as sp

from pressure_lab.acceptance import cosine_oracle
from pressure_lab.errors import PreconditionError, ResolutionError
from pressure_lab.fields import LacunarySpec, lacunary_shell, synth_lacunary_divfree
from pressure_lab.norms import zygmund_norm
from pressure_lab.pressure_periodic import (borderline_ratio, low_frequency_bound, much_less,
                                            paraproduct_split, pressure_diagnostics,
                                            run_regularity_cell, similar, solve_pressure_torus,
                                            split_IN_JN, verify_double_regularity)
from pressure_lab.spectral_core import GridField, make_partition


def test_cosine_oracle_symbolic():
    x, y, k = sp.symbols("x y k", positive=True)
    u = (sp.cos(k * y), sp.cos(k * x))
    dd = sum(sp.diff(u[i] * u[j], v, w) for i, v in enumerate((x, y)) for j, w in enumerate((x, y)))
    p = sp.sin(k * x) * sp.sin(k * y)
    assert sp.simplify(-sp.diff(p, x, 2) - sp.diff(p, y, 2) - dd) == 0


class TestSolver:
    @pytest.mark.parametrize("k", [2, 8, 32, 64])
    def test_cosine_oracle(self, k):
        assert cosine_oracle(k, 256) <= 1e-10

    def test_constant_velocity(self):
        u = GridField(np.stack([np.full((32, 32), 0.7), np.full((32, 32), -1.2)]))
        assert solve_pressure_torus(u).sup() <= 1e-15

    def test_zero_mean(self):
        u = synth_lacunary_divfree(LacunarySpec(0.4, 5, 0), 128)
        assert abs(solve_pressure_torus(u).data.mean()) <= 1e-15

    def test_rejects_divergent(self):
        u = GridField.from_function(lambda x, y: (np.cos(x), 0 * y), 32)
        with pytest.raises(PreconditionError):
            solve_pressure_torus(u)

    def test_residual_of_equation(self):
        # -Delta p = d_i d_j (u^i u^j), checked spectrally on the 2x grid
        u = synth_lacunary_divfree(LacunarySpec(0.4, 4, 1), 64)
        p = solve_pressure_torus(u)
        big = 256
        k = np.fft.fftfreq(big, 1.0 / big)
        K1, K2 = np.meshgrid(k, k, indexing="ij")

        def upsample(a):
            A = np.fft.fft2(a)
            out = np.zeros((big, big), complex)
            h = a.shape[0] // 2
            for s1 in (slice(0, h), slice(-h, None)):
                for s2 in (slice(0, h), slice(-h, None)):
                    out[s1, s2] = A[s1, s2]
            return np.fft.ifft2(out).real * (big / a.shape[0]) ** 2

        U = [upsample(c) for c in u.data]
        T = [np.fft.fft2(U[0] * U[0]), np.fft.fft2(U[0] * U[1]), np.fft.fft2(U[1] * U[1])]
        dd = -(K1 * K1 * T[0] + 2 * K1 * K2 * T[1] + K2 * K2 * T[2])
        lap = (K1 ** 2 + K2 ** 2) * np.fft.fft2(upsample(p.data[0]))
        keep = (np.abs(K1) < 32) & (np.abs(K2) < 32)
        assert np.max(np.abs((lap - dd)[keep])) / big ** 2 <= 1e-12

    def test_zygmund_constant_reported(self):
        part = make_partition(6)
        u = synth_lacunary_divfree(LacunarySpec(0.25, 6, 0), 256)
        p = solve_pressure_torus(u)
        C = zygmund_norm(p, 0.5, part) / zygmund_norm(u, 0.25, part) ** 2
        assert 0 < C < 10


class TestLowFrequency:
    def test_zero(self):
        assert low_frequency_bound(GridField(np.zeros((2, 32, 32)))) == 0.0

    def test_single_high_shell(self):
        u = GridField(lacunary_shell(1024, 8, seed=0))
        assert low_frequency_bound(u) <= 1e-8

    def test_lacunary_bounded(self):
        u = synth_lacunary_divfree(LacunarySpec(0.4, 5, 3), 128)
        assert low_frequency_bound(u) <= 2.0 * u.sup() ** 2


class TestSplit:
    def test_relations(self):
        assert similar(4, 16) and not similar(4, 32)
        assert much_less(4, 32) and not much_less(4, 16)

    def test_identity(self):
        u = synth_lacunary_divfree(LacunarySpec(0.4, 5, 2), 128)
        diag = pressure_diagnostics(u, make_partition(5))
        assert diag.identity_defect <= 1e-12

    def test_single_shell_has_no_low_high(self):
        u = GridField(lacunary_shell(128, 4, seed=1))
        split = paraproduct_split(u)
        part = make_partition(5)
        for N in (2, 4, 8, 16):
            I, J = split_IN_JN(u, N, part, split)
            q = split.block("q", N)
            assert J.sup() <= 1e-14
            assert np.max(np.abs(I.data[0] - q)) <= 1e-13

    def test_unresolvable(self):
        u = GridField(lacunary_shell(64, 3, seed=1))
        with pytest.raises(ResolutionError):
            split_IN_JN(u, 1, make_partition(4))


class TestDriver:
    def test_cell_record(self):
        run = run_regularity_cell(0.25, 0, 256, 6, with_split=True, fit_range=(2, 16))
        rec = run.record()
        assert rec["split_identity_defect"] <= 1e-12
        assert len(run.csv_rows()) == len(run.p_profile.levels)

    def test_borderline_ratio_positive(self):
        u = synth_lacunary_divfree(LacunarySpec(0.5, 5, 0), 128)
        p = solve_pressure_torus(u)
        assert 0 < borderline_ratio(u, p, make_partition(5)) < 1

    def test_empty_gamma_list(self):
        assert verify_double_regularity([], [0], 256, 6) == []

    def test_rejects_gamma(self):
        with pytest.raises(ValueError):
            verify_double_regularity([0.7], [0], 256, 6)
