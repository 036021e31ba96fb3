"""Spectral pressure solver on the torus and the paraproduct splitting of
its dyadic blocks.

The pressure solves ``-Delta p = d_i d_j (u^i u^j)`` with zero mean.  All
quadratic products are formed on a zero-padded grid (default 2x) and then
truncated back to the original lattice, so retained modes are alias-free.
Internally the real-to-complex FFT layout is used: an ``n x n`` real field
has spectrum of shape ``(n, n//2 + 1)``.

Splitting of a block ``q_N = P_N q`` (``N >= 2``)::

    I_N = sum_{M ~ K}  A d_i d_j P_N (u^i_M u^j_K)                (1/4 <= M/K <= 4)
    J_N = sum_{M << K} A P_N (d_j u^i_K d_i u^j_M + d_j u^i_M d_i u^j_K)   (K >= 8M)

with ``A = Op((1 - chi(xi)) / |xi|^2)``, ``chi(xi) = phi(2 xi)``, the inverse of
``-Delta`` away from ``xi = 0``.  Then ``q_N = I_N + J_N`` to round-off.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .errors import PreconditionError, ResolutionError
from .fields import LacunarySpec, divergence_residual, synth_lacunary_divfree
from .norms import (BlockProfile, ExponentFit, block_profile, default_fit_range,
                    fit_decay_exponent, holder_norm, zygmund_norm)
from .spectral_core import (DyadicPartition, GridField, block_multiplier, lattice_r2,
                            make_partition, radial_multiplier)

DIV_TOL = 1e-8


# ---------------------------------------------------------------------------
# rfft lattice helpers
# ---------------------------------------------------------------------------

def _rfft_lattice(n: int):
    k1 = np.fft.fftfreq(n, d=1.0 / n)[:, None]
    k2 = np.fft.rfftfreq(n, d=1.0 / n)[None, :]
    return k1, k2


def _nyquist_free(n: int) -> np.ndarray:
    k1, k2 = _rfft_lattice(n)
    return (np.abs(k1) < n // 2) & (k2 < n // 2)


def _pad(U: np.ndarray, n: int, m: int) -> np.ndarray:
    """Embed an ``n``-grid rfft spectrum into the ``m``-grid layout (Nyquist dropped)."""
    out = np.zeros((m, m // 2 + 1), dtype=complex)
    h = n // 2
    out[:h, :h] = U[:h, :h]
    out[m - h + 1:, :h] = U[h + 1:, :h]
    return out


def _truncate(V: np.ndarray, n: int, m: int) -> np.ndarray:
    """Restrict an ``m``-grid rfft spectrum to ``|xi_i| < n/2`` on the ``n`` grid."""
    out = np.zeros((n, n // 2 + 1), dtype=complex)
    h = n // 2
    out[:h, :h] = V[:h, :h]
    out[h + 1:, :h] = V[m - h + 1:, :h]
    return out


def _to_physical(U: np.ndarray, n: int, m: int) -> np.ndarray:
    """Samples on the ``m`` grid of the trigonometric polynomial with ``n``-grid spectrum ``U``."""
    return sfft.irfft2(_pad(U, n, m), s=(m, m)) * (m / n) ** 2


def _to_spectrum(a: np.ndarray, n: int, m: int) -> np.ndarray:
    """``n``-grid rfft spectrum of the ``m``-grid samples ``a`` (truncated)."""
    return _truncate(sfft.rfft2(a), n, m) * (n / m) ** 2


@dataclass
class _Spectral:
    """Velocity spectrum in rfft layout with cached lattice quantities."""

    n: int
    pad: int
    U: list

    @property
    def m(self) -> int:
        return self.pad * self.n

    @classmethod
    def of(cls, u: GridField, pad: int) -> "_Spectral":
        mask = _nyquist_free(u.n)
        return cls(u.n, pad, [sfft.rfft2(c) * mask for c in u.data])


def _inverse_laplacian_symbol(n: int) -> np.ndarray:
    """``(1 - chi)/|xi|^2`` with ``chi = phi(2 xi)``; only ``xi = 0`` is cut on the lattice."""
    r2 = lattice_r2(n, 2, real=True)
    chi = radial_multiplier(r2, 1, scale=2.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(r2 > 0, (1.0 - chi) / np.maximum(r2, 1), 0.0)


def _double_divergence_spectrum(T11, T12, T22, n):
    """Spectrum of ``d_i d_j T^{ij}`` for a symmetric tensor given by spectra."""
    k1, k2 = _rfft_lattice(n)
    return -(k1 * k1 * T11 + 2.0 * k1 * k2 * T12 + k2 * k2 * T22)


def _rfft_block(n: int, N: int) -> np.ndarray:
    return block_multiplier(n, 2, N, real=True)


def _check_divergence(u: GridField, tol: float):
    res = divergence_residual(u)
    if res > tol * max(1.0, u.sup()):
        raise PreconditionError(f"velocity is not divergence-free (residual {res:.3e})")


# ---------------------------------------------------------------------------
# Solver
# ---------------------------------------------------------------------------

def pressure_spectrum(u: GridField, pad: int = 2) -> np.ndarray:
    """rfft spectrum (unnormalized, ``n``-grid) of the zero-mean pressure."""
    if u.dim != 2 or u.components != 2:
        raise PreconditionError("torus pressure solver expects a 2D vector field")
    sp = _Spectral.of(u, pad)
    n, m = sp.n, sp.m
    phys = [_to_physical(U, n, m) for U in sp.U]
    T11 = _to_spectrum(phys[0] * phys[0], n, m)
    T12 = _to_spectrum(phys[0] * phys[1], n, m)
    T22 = _to_spectrum(phys[1] * phys[1], n, m)
    del phys
    dd = _double_divergence_spectrum(T11, T12, T22, n)
    return _inverse_laplacian_symbol(n) * dd


def solve_pressure_torus(u: GridField, pad: int = 2, div_tol: float = DIV_TOL) -> GridField:
    """Zero-mean solution of ``-Delta p = d_i d_j (u^i u^j)`` on the torus.

    Parameters
    ----------
    u : GridField
        Divergence-free 2-component field on the standard ``2 pi`` torus.
    pad : int
        Zero-padding factor for the quadratic product (2 removes aliasing
        on all retained modes).
    div_tol : float
        Allowed divergence residual relative to ``max(1, ||u||_inf)``.

    Raises
    ------
    PreconditionError
        If ``u`` is not divergence-free within tolerance.
    """
    _check_divergence(u, div_tol)
    P = pressure_spectrum(u, pad)
    return GridField(sfft.irfft2(P, s=(u.n, u.n))[None], u.extent)


def low_frequency_bound(u: GridField, p: GridField | None = None, pad: int = 2) -> float:
    """``||P_1 p||_inf`` of the torus pressure of ``u``."""
    if p is None:
        if not np.any(u.data):
            return 0.0
        P = pressure_spectrum(u, pad)
    else:
        P = sfft.rfft2(p.data[0])
    return float(np.max(np.abs(sfft.irfft2(P * _rfft_block(u.n, 1), s=(u.n, u.n)))))


# ---------------------------------------------------------------------------
# Paraproduct splitting
# ---------------------------------------------------------------------------

def similar(M: int, K: int) -> bool:
    """``M ~ K``: ``1/4 <= M/K <= 4``."""
    return K <= 4 * M and M <= 4 * K


def much_less(M: int, K: int) -> bool:
    """``M << K``: ``K >= 8 M``."""
    return K >= 8 * M


@dataclass
class ParaproductSplit:
    """Spectra of the two splitting terms, before dyadic projection.

    ``I_hat`` and ``J_hat`` are rfft spectra on the ``n`` grid with
    ``I_hat + J_hat`` equal to the pressure spectrum up to round-off.
    """

    n: int
    I_hat: np.ndarray
    J_hat: np.ndarray
    q_hat: np.ndarray

    def block(self, which: str, N: int) -> np.ndarray:
        spec = {"I": self.I_hat, "J": self.J_hat, "q": self.q_hat}[which]
        return sfft.irfft2(spec * _rfft_block(self.n, N), s=(self.n, self.n))


def paraproduct_split(u: GridField, pad: int = 2, div_tol: float = DIV_TOL) -> ParaproductSplit:
    """Compute the high-high (``I``) and low-high (``J``) parts of the pressure.

    The velocity is decomposed with the full dyadic partition (levels up to
    ``n``) so that the blocks sum to ``u`` exactly on the lattice.
    """
    _check_divergence(u, div_tol)
    sp = _Spectral.of(u, pad)
    n, m = sp.n, sp.m
    k1, k2 = _rfft_lattice(n)
    kk = (k1, k2)
    levels = [2 ** j for j in range(int(math.log2(n)) + 1)]
    blocks = {}
    for N in levels:
        mult = _rfft_block(n, N)
        B = [U * mult for U in sp.U]
        if max(np.max(np.abs(b)) for b in B) > 0:
            blocks[N] = B
    active = sorted(blocks)

    TI = np.zeros((3, m, m))
    TJ = np.zeros((m, m))
    for K in active:
        uK = [_to_physical(b, n, m) for b in blocks[K]]
        near = [M for M in active if similar(M, K)]
        S = [_to_physical(sum(blocks[M][c] for M in near), n, m) for c in range(2)]
        TI[0] += uK[0] * S[0]
        TI[1] += 0.5 * (uK[0] * S[1] + uK[1] * S[0])
        TI[2] += uK[1] * S[1]
        low = [M for M in active if much_less(M, K)]
        if low:
            L = [sum(blocks[M][c] for M in low) for c in range(2)]
            for i in range(2):
                for j in range(2):
                    d_j_uK_i = _to_physical(1j * kk[j] * blocks[K][i], n, m)
                    d_i_L_j = _to_physical(1j * kk[i] * L[j], n, m)
                    TJ += 2.0 * d_j_uK_i * d_i_L_j
        del uK, S

    A = _inverse_laplacian_symbol(n)
    I_dd = _double_divergence_spectrum(*(_to_spectrum(t, n, m) for t in TI), n)
    J_src = _to_spectrum(TJ, n, m)
    I_hat = A * I_dd
    J_hat = A * J_src
    q_hat = pressure_spectrum(u, pad)
    return ParaproductSplit(n, I_hat, J_hat, q_hat)


def split_IN_JN(u: GridField, N: int, part: DyadicPartition,
                split: ParaproductSplit | None = None) -> tuple[GridField, GridField]:
    """Blocks ``(I_N, J_N)`` of the paraproduct splitting of the pressure.

    Raises
    ------
    ResolutionError
        If ``N < 2`` or the block is not resolvable.
    """
    if N < 2 or 2 * N > u.n // 2 or N > 2 ** part.J_max:
        raise ResolutionError(f"split needs 2 <= N with 2N <= n/2; got N={N}, n={u.n}")
    split = split if split is not None else paraproduct_split(u)
    return (GridField(split.block("I", N)[None], u.extent),
            GridField(split.block("J", N)[None], u.extent))


@dataclass
class PressureDiag:
    """Block profiles of the pressure and its two splitting terms."""

    q_blocks: BlockProfile
    I_blocks: BlockProfile
    J_blocks: BlockProfile
    low_freq_sup: float
    identity_defect: float

    def fits(self, fit_range) -> dict:
        return {name: fit_decay_exponent(prof, fit_range)
                for name, prof in (("q", self.q_blocks), ("I", self.I_blocks),
                                   ("J", self.J_blocks))}


def pressure_diagnostics(u: GridField, part: DyadicPartition, pad: int = 2) -> PressureDiag:
    """Block profiles of ``q``, ``I``, ``J`` and the splitting identity defect.

    The defect is ``max_N ||q_N - I_N - J_N||_inf / ||q||_inf`` over
    resolvable ``N >= 2``.
    """
    split = paraproduct_split(u, pad)
    levels = part.resolvable_levels(u.n)
    q_full = sfft.irfft2(split.q_hat, s=(u.n, u.n))
    qsup = float(np.max(np.abs(q_full))) or 1.0
    qs, Is, Js, defect = [], [], [], 0.0
    for N in levels:
        qN, IN, JN = split.block("q", N), split.block("I", N), split.block("J", N)
        qs.append(np.max(np.abs(qN)))
        Is.append(np.max(np.abs(IN)))
        Js.append(np.max(np.abs(JN)))
        if N >= 2:
            defect = max(defect, float(np.max(np.abs(qN - IN - JN))) / qsup)
    low = float(np.max(np.abs(split.block("q", 1))))
    return PressureDiag(BlockProfile(tuple(levels), tuple(qs)),
                        BlockProfile(tuple(levels), tuple(Is)),
                        BlockProfile(tuple(levels), tuple(Js)), low, defect)


# ---------------------------------------------------------------------------
# Experiment driver
# ---------------------------------------------------------------------------

@dataclass
class RegularityRun:
    """One (gamma, seed) cell of the periodic regularity experiment."""

    gamma: float
    seed: int
    n: int
    J_max: int
    u_profile: BlockProfile
    p_profile: BlockProfile
    u_fit: ExponentFit
    p_fit: ExponentFit
    zyg_u: float
    zyg_p: float
    ratio: float
    low_freq_sup: float
    borderline: float | None = None
    diag: PressureDiag | None = None
    seconds: float = 0.0

    def record(self) -> dict:
        rec = {
            "gamma": self.gamma, "seed": self.seed, "n": self.n, "J_max": self.J_max,
            "u_fit": self.u_fit.as_dict(), "p_fit": self.p_fit.as_dict(),
            "zygmund_u": self.zyg_u, "zygmund_p": self.zyg_p,
            "ratio_zyg_p_over_zyg_u_sq": self.ratio,
            "low_freq_sup": self.low_freq_sup, "seconds": self.seconds,
        }
        if self.borderline is not None:
            rec["borderline_sup_N_pN_over_holder_sq"] = self.borderline
        if self.diag is not None:
            rec["split_identity_defect"] = self.diag.identity_defect
        return rec

    def csv_rows(self):
        """Rows ``(level, u_sup, p_sup, I_sup, J_sup)``; I/J blank without a split."""
        rows = []
        for k, N in enumerate(self.p_profile.levels):
            I = self.diag.I_blocks.sup_norms[k] if self.diag else float("nan")
            J = self.diag.J_blocks.sup_norms[k] if self.diag else float("nan")
            rows.append((N, self.u_profile.sup_norms[k], self.p_profile.sup_norms[k], I, J))
        return rows


def run_regularity_cell(gamma: float, seed: int, n: int, J_max: int,
                        with_split: bool = False, pad: int = 2,
                        fit_range=None) -> RegularityRun:
    """Synthesize a lacunary field, solve for the pressure and measure both."""
    import time
    t0 = time.perf_counter()
    part = make_partition(J_max)
    u = synth_lacunary_divfree(LacunarySpec(gamma, J_max, seed), n)
    p = solve_pressure_torus(u, pad)
    up = block_profile(u, part)
    pp = block_profile(p, part)
    fr = fit_range or default_fit_range(J_max)
    zu = zygmund_norm(u, gamma, part, up)
    zp = zygmund_norm(p, 2 * gamma, part, pp)
    run = RegularityRun(gamma, seed, n, J_max, up, pp, fit_decay_exponent(up, fr),
                        fit_decay_exponent(pp, fr), zu, zp, zp / zu ** 2,
                        low_frequency_bound(u, p))
    if abs(gamma - 0.5) < 1e-12:
        run.borderline = borderline_ratio(u, p, part, pp)
    if with_split:
        run.diag = pressure_diagnostics(u, part, pad)
    run.seconds = time.perf_counter() - t0
    return run


def borderline_ratio(u: GridField, p: GridField, part: DyadicPartition,
                     p_profile: BlockProfile | None = None) -> float:
    """``sup_N N ||p_N||_inf / ||u||_{C^{1/2}}^2``."""
    pp = p_profile if p_profile is not None else block_profile(p, part)
    return max(N * s for N, s in zip(pp.levels, pp.sup_norms)) / holder_norm(u, 0.5) ** 2


def verify_double_regularity(gamma_list, seeds, n: int, J_max: int,
                             with_split: bool = False) -> list[RegularityRun]:
    """Run every ``(gamma, seed)`` cell.

    Raises
    ------
    ValueError
        If some gamma is outside ``(0, 1/2]``.
    """
    for g in gamma_list:
        if not 0.0 < g <= 0.5:
            raise ValueError(f"gamma must lie in (0, 1/2]; got {g}")
    return [run_regularity_cell(g, s, n, J_max, with_split) for g in gamma_list for s in seeds]
