"""Divergence-free velocity fields of prescribed Hoelder regularity.

Torus fields are lacunary sums of plane waves with polarization orthogonal
to the wavevector.  Disk fields are perpendicular gradients of stream
functions that vanish on the unit circle, so they are tangent to the
boundary by construction.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigurationError, ResolutionError
from .geometry import (MetricPatch, PolarField, PolarGrid, collar_divergence,
                       theta_derivative)
from .spectral_core import TWO_PI, GridField, lattice

MODES_PER_SHELL = 8
# Wavevector magnitudes are drawn from [2^j, BAND * 2^j), the inner part of
# the dyadic shell, so each shell lands (up to a ~2% tail) in the single
# Littlewood-Paley block N = 2^j.
BAND = 1.25


def shell_rng(seed: int, shell: int) -> np.random.Generator:
    """Independent generator for one dyadic shell, derived from ``seed``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(shell)]))


@dataclass(frozen=True)
class LacunarySpec:
    """Parameters of a lacunary divergence-free torus field.

    Shells ``j = 2..J`` carry wavevectors with ``2^j <= |k| < 1.25 * 2^j``
    (inside the dyadic shell ``[2^j, 2^(j+1))``) and sup-norm
    ``amplitude * 2^(-gamma j)``.
    """

    gamma: float
    J: int
    seed: int = 0
    amplitude: float = 1.0
    dim: int = 2

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigurationError(f"gamma must lie in (0, 1]; got {self.gamma}")
        if self.J < 2:
            raise ConfigurationError("J must be >= 2")
        if self.dim != 2:
            raise ConfigurationError("only dim = 2 is supported")
        if not self.amplitude > 0:
            raise ConfigurationError("amplitude must be positive")


def _shell_wavevectors(rng: np.random.Generator, j: int, count: int) -> np.ndarray:
    """Distinct lattice vectors with ``2^j <= |k| < BAND 2^j`` in a half plane."""
    lo, hi = 2.0 ** j, BAND * 2.0 ** j
    k = np.arange(-int(hi) - 1, int(hi) + 2)
    K1, K2 = np.meshgrid(k, k, indexing="ij")
    r2 = K1 ** 2 + K2 ** 2
    half = (K1 > 0) | ((K1 == 0) & (K2 > 0))
    mask = (r2 >= lo * lo) & (r2 < hi * hi) & half
    cand = np.stack([K1[mask], K2[mask]], 1)
    return cand[rng.choice(len(cand), size=count, replace=False)]


def lacunary_shell(n: int, j: int, seed: int) -> np.ndarray:
    """Unnormalized shell ``sum_m A_m cos(k_m . x + phi_m)``, shape ``(2, n, n)``."""
    rng = shell_rng(seed, j)
    ks = _shell_wavevectors(rng, j, MODES_PER_SHELL)
    phases = rng.uniform(0.0, TWO_PI, MODES_PER_SHELL)
    mags = rng.uniform(0.5, 1.0, MODES_PER_SHELL) * rng.choice([-1.0, 1.0], MODES_PER_SHELL)
    x = np.arange(n) * (TWO_PI / n)
    out = np.zeros((2, n, n))
    for (k1, k2), ph, a in zip(ks, phases, mags):
        wave = np.real(np.outer(np.exp(1j * (k1 * x + ph)), np.exp(1j * k2 * x)))
        norm = np.hypot(k1, k2)
        out[0] += (-a * k2 / norm) * wave
        out[1] += (a * k1 / norm) * wave
    return out


def synth_lacunary_divfree(spec: LacunarySpec, n: int) -> GridField:
    """Lacunary divergence-free field on the ``n x n`` torus grid.

    Each shell is normalized to unit grid sup before weighting by
    ``amplitude * 2^(-gamma j)``.

    Raises
    ------
    ResolutionError
        If ``2^J > n/4``.
    """
    if 2 ** spec.J > n // 4:
        raise ResolutionError(f"J={spec.J} needs n >= {4 * 2 ** spec.J}; got n={n}")
    u = np.zeros((2, n, n))
    for j in range(2, spec.J + 1):
        shell = lacunary_shell(n, j, spec.seed)
        u += (spec.amplitude * 2.0 ** (-spec.gamma * j) / np.max(np.abs(shell))) * shell
    return GridField(u)


def divergence_residual(u, metric: MetricPatch | None = None) -> float:
    """Sup norm of the discrete divergence.

    * :class:`GridField` on the torus: spectral derivatives.
    * :class:`PolarField` on the disk: ``rho^{-1}[d_rho(rho u_rho) + d_theta u_theta]``
      with centered radial differences on rings ``1..n_rho-1`` (the flux
      ``rho u_rho`` vanishes at the pole) and spectral ``d_theta``.
    * coordinate components ``(u^r, u^theta)`` with a :class:`MetricPatch`:
      the metric divergence ``G^{-1} d_i(G u^i)`` on interior collar rows.
    """
    if metric is not None:
        ur, ut = u
        return float(np.max(np.abs(collar_divergence(ur, ut, metric)[1:-1])))
    if isinstance(u, PolarField):
        return float(np.max(np.abs(polar_divergence(u)[:-1])))
    if u.components != u.dim:
        raise ConfigurationError("divergence needs one component per dimension")
    axes = tuple(range(1, u.dim + 1))
    ks = lattice(u.n, u.dim)
    scale = TWO_PI / u.extent
    total = np.zeros(u.data.shape[1:], dtype=complex)
    for i in range(u.dim):
        ki = np.where(np.abs(ks[i]) == u.n // 2, 0.0, ks[i])
        total += 1j * scale * ki * np.fft.fftn(u.data[i], axes=tuple(a - 1 for a in axes))
    return float(np.max(np.abs(np.fft.ifftn(total).real)))


def polar_divergence(u: PolarField) -> np.ndarray:
    """Discrete polar divergence on rings; the last row uses a one-sided stencil."""
    g = u.grid
    flux = g.rho[:, None] * u.data[0]
    d = np.empty_like(flux)
    d[1:-1] = (flux[2:] - flux[:-2]) / (2 * g.h)
    d[0] = flux[1] / (2 * g.h)
    d[-1] = (3 * flux[-1] - 4 * flux[-2] + flux[-3]) / (2 * g.h)
    return (d + theta_derivative(u.data[1])) / g.rho[:, None]


# ---------------------------------------------------------------------------
# Disk fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StreamSpec:
    """Lacunary stream function ``psi = b(rho) * L(x, y)`` on the unit disk.

    ``L`` is a sum over shells ``j = 2..J`` of eight plane waves with
    ``|k| in [2^j, 1.25 * 2^j)`` and weight ``2^(-(1+gamma) j)``; ``b`` is the
    boundary factor, ``1 - rho^2`` unless overridden.
    """

    gamma: float
    J: int
    seed: int = 0
    amplitude: float = 1.0
    boundary_factor: Callable | None = None

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigurationError(f"gamma must lie in (0, 1]; got {self.gamma}")
        if self.J < 2:
            raise ConfigurationError("J must be >= 2")

    def factor(self, rho):
        if self.boundary_factor is None:
            return 1.0 - rho ** 2
        return self.boundary_factor(rho)

    def _waves(self) -> np.ndarray:
        """Rows ``(k1, k2, phase, coefficient)`` of the plane-wave sum ``L``."""
        waves = []
        for j in range(2, self.J + 1):
            rng = shell_rng(self.seed, 1000 + j)
            mag = rng.uniform(2.0 ** j, BAND * 2.0 ** j, MODES_PER_SHELL)
            ang = rng.uniform(0.0, TWO_PI, MODES_PER_SHELL)
            phase = rng.uniform(0.0, TWO_PI, MODES_PER_SHELL)
            coef = rng.uniform(0.5, 1.0, MODES_PER_SHELL) * rng.choice([-1.0, 1.0], MODES_PER_SHELL)
            weight = self.amplitude * 2.0 ** (-(1.0 + self.gamma) * j) / np.sqrt(MODES_PER_SHELL)
            for m, a, ph, c in zip(mag, ang, phase, coef):
                waves.append((m * np.cos(a), m * np.sin(a), ph, weight * c))
        return np.array(waves)

    def stream(self) -> Callable:
        """Vectorized ``psi(x, y)``."""
        waves = self._waves()

        def psi(x, y):
            x = np.asarray(x, dtype=float)
            y = np.asarray(y, dtype=float)
            total = np.zeros(np.broadcast(x, y).shape)
            for k1, k2, ph, c in waves:
                total += c * np.sin(k1 * x + k2 * y + ph)
            return self.factor(np.hypot(x, y)) * total

        return psi

    def velocity(self) -> Callable:
        """Exact ``(u_x, u_y) = (-psi_y, psi_x)`` for the default boundary factor.

        Raises
        ------
        ConfigurationError
            If a custom boundary factor is set (its derivative is unknown).
        """
        if self.boundary_factor is not None:
            raise ConfigurationError("exact velocity needs the default boundary factor")
        waves = self._waves()

        def vel(x, y):
            x = np.asarray(x, dtype=float)
            y = np.asarray(y, dtype=float)
            L = np.zeros(np.broadcast(x, y).shape)
            Lx = np.zeros_like(L)
            Ly = np.zeros_like(L)
            for k1, k2, ph, c in waves:
                arg = k1 * x + k2 * y + ph
                L += c * np.sin(arg)
                cs = c * np.cos(arg)
                Lx += k1 * cs
                Ly += k2 * cs
            b = 1.0 - x * x - y * y
            psi_x = -2.0 * x * L + b * Lx
            psi_y = -2.0 * y * L + b * Ly
            return -psi_y, psi_x

        return vel

    @property
    def max_wavenumber(self) -> float:
        return BAND * 2.0 ** self.J


def disk_field_from_stream(psi: Callable, grid: PolarGrid) -> PolarField:
    """Discrete perpendicular gradient ``u = (-psi_theta / rho, psi_rho)``.

    ``psi_theta`` is spectral and ``psi_rho`` a centered difference that
    evaluates ``psi`` at the pole and at a ghost ring ``rho = 1 + h``.  The
    two discrete derivatives commute, so :func:`polar_divergence` of the
    result vanishes to round-off on rings ``1..n_rho-1``; ``u_rho`` vanishes
    identically on ``rho = 1`` whenever ``psi`` does.
    """
    h = grid.h
    rho_ext = np.arange(0, grid.n_rho + 2) * h
    R, T = np.meshgrid(rho_ext, grid.theta, indexing="ij")
    vals = np.asarray(psi(R * np.cos(T), R * np.sin(T)), dtype=float)
    vals[0] = vals[0].mean()  # single pole value
    rho = rho_ext[1:-1, None]
    u_rho = -theta_derivative(vals[1:-1]) / rho
    u_theta = (vals[2:] - vals[:-2]) / (2 * h)
    return PolarField(np.stack([u_rho, u_theta]), grid)


def synth_disk_tangent(spec: StreamSpec, grid: PolarGrid) -> PolarField:
    """Lacunary tangent divergence-free field on the unit disk.

    Raises
    ------
    ResolutionError
        If the grid has fewer than 8 radial points per shortest wavelength or
        too few angles for the top shell.
    """
    kmax = spec.max_wavenumber
    if kmax * grid.h > TWO_PI / 8:
        raise ResolutionError(
            f"n_rho={grid.n_rho} under-resolves shell J={spec.J} (|k| up to {kmax:g})")
    if grid.n_theta < 2 * (kmax + 24):
        raise ResolutionError(f"n_theta={grid.n_theta} under-resolves shell J={spec.J}")
    return disk_field_from_stream(spec.stream(), grid)


def disk_velocity_exact(spec: StreamSpec, grid: PolarGrid) -> PolarField:
    """Exact samples of ``grad^perp psi`` in polar components ``(u_rho, u_theta)``.

    Unlike :func:`synth_disk_tangent` the samples carry no differencing
    error, so their discrete divergence is only O(h^2) small; use them where
    the continuous field itself is under test.
    """
    X, Y = grid.cartesian()
    ux, uy = spec.velocity()(X, Y)
    R, T = grid.mesh()
    c, s = np.cos(T), np.sin(T)
    u_rho = ux * c + uy * s
    u_rho[-1] = 0.0  # zero analytically; drop the rounding residue
    return PolarField(np.stack([u_rho, -ux * s + uy * c]), grid)


def tangency_defect(u: PolarField) -> float:
    """``max_theta |u . e_rho|`` on the boundary ring."""
    return float(np.max(np.abs(u.data[0, -1])))


def polar_holder_norm(u: PolarField, gamma: float) -> float:
    """Hoelder norm on the disk from radial and angular grid offsets.

    Offsets are dyadic multiples of the grid steps; angular pairs use the
    chord length ``2 rho sin(dtheta/2)`` as distance.  Vectors are compared
    in Cartesian components.
    """
    g = u.grid
    comps = np.stack(u.cartesian_components()) if u.components == 2 else u.data
    best = 0.0
    k = 1
    while k <= g.n_rho // 4:
        diff = np.max(np.abs(comps[:, k:] - comps[:, :-k]))
        best = max(best, diff / (k * g.h) ** gamma)
        k *= 2
    k = 1
    while k <= g.n_theta // 8:
        chord = 2 * g.rho * np.sin(k * g.dtheta / 2)
        diff = np.max(np.abs(np.roll(comps, -k, axis=2) - comps), axis=(0, 2))
        best = max(best, float(np.max(diff / chord ** gamma)))
        k *= 2
    return float(np.max(np.abs(comps))) + best
