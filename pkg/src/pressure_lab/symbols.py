"""Symbols on the periodic box, their quantization, the sharp/flat
splitting of a variable collar metric and a two-term parametrix.

Symbols live on the ``n x n`` torus grid ``x_j = 2 pi j / n`` and are
evaluated lazily at any set of integer frequencies ``xi``.  Quantization is
the left (Kohn-Nirenberg) rule

    Op(a)u(x) = sum_xi exp(i x.xi) a(x, xi) u_hat(xi),

so that ``Op(i b(x) xi_k) = b d_k``.  With this convention the leading
composition correction is ``sigma(Op(b)Op(a)) = b a - i grad_xi b . grad_x a
+ ...`` and the second parametrix term is ``b_2 = (i/a) grad_xi b_1 . grad_x a``.

The collar ``[-r0, r0] x S^1`` of the reflected metric is embedded in the box
with ``r = x_1 - pi``; outside the collar the metric is blended to the
identity with the spatial cutoff ``psi_x``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError, DegenerateFitError, NonEllipticError
from .geometry import MetricPatch
from .norms import ExponentFit, fit_power_law
from .spectral_core import (TWO_PI, DyadicPartition, GridField, block_multiplier,
                            bump, integer_wavenumbers, make_partition)

DEFAULT_DELTA = 0.25
_CHUNK = 1 << 22  # target number of (xi, x) samples evaluated at once


def _as_points(xi1, xi2):
    xi1 = np.atleast_1d(np.asarray(xi1, dtype=float))
    xi2 = np.atleast_1d(np.asarray(xi2, dtype=float))
    xi1, xi2 = np.broadcast_arrays(xi1, xi2)
    return xi1.ravel(), xi2.ravel()


def box_coordinates(n: int) -> np.ndarray:
    return np.arange(n) * (TWO_PI / n)


def lattice_points(n: int) -> tuple[np.ndarray, np.ndarray]:
    """All ``n^2`` integer frequencies of the grid, FFT order, flattened."""
    k = integer_wavenumbers(n).astype(float)
    K1, K2 = np.meshgrid(k, k, indexing="ij")
    return K1.ravel(), K2.ravel()


@dataclass
class SymbolGrid:
    """Lazily evaluated symbol ``a(x, xi)`` on the ``n x n`` box.

    A symbol is either separable, ``a = sum_t c_t(x) m_t(xi)`` with the
    ``x`` factors stored in ``coefs`` (shape ``(T, n, n)``) and the ``xi``
    factors produced by ``mults(xi1, xi2) -> (T, L)``, or general, given by
    ``func(xi1, xi2) -> (L, n, n)``.

    Attributes
    ----------
    order : float
        Order ``m`` of the symbol class ``S^m_{1, delta}``.
    delta : float
        Type ``delta`` of the class.
    """

    n: int
    order: float
    delta: float = 0.0
    coefs: np.ndarray | None = None
    mults: Callable | None = None
    func: Callable | None = None
    label: str = ""

    def __post_init__(self):
        if (self.func is None) == (self.coefs is None):
            raise ConfigurationError("give either separable factors or a general func")
        if self.coefs is not None:
            self.coefs = np.asarray(self.coefs)
            if self.coefs.ndim != 3 or self.coefs.shape[1:] != (self.n, self.n):
                raise ConfigurationError("coefs must have shape (T, n, n)")
        if not 0.0 <= self.delta < 1.0:
            raise ConfigurationError("delta must lie in [0, 1)")

    @property
    def separable(self) -> bool:
        return self.coefs is not None

    @classmethod
    def multiplier(cls, n: int, func: Callable, order: float, label: str = "") -> "SymbolGrid":
        """x-independent symbol ``m(xi) = func(xi1, xi2)``."""
        return cls(n, order, 0.0, np.ones((1, n, n)),
                   lambda a, b: np.atleast_2d(func(a, b)), label=label)

    @classmethod
    def from_function(cls, n: int, func: Callable, order: float, delta: float = 0.0,
                      label: str = "") -> "SymbolGrid":
        """General symbol from ``func(X1, X2, xi1, xi2)`` with broadcasting.

        ``X1, X2`` have shape ``(1, n, n)``, ``xi1, xi2`` shape ``(L, 1, 1)``.
        """
        x = box_coordinates(n)
        X1, X2 = (a[None] for a in np.meshgrid(x, x, indexing="ij"))

        def ev(a, b):
            out = func(X1, X2, a[:, None, None], b[:, None, None])
            return np.broadcast_to(out, (a.size, n, n))

        return cls(n, order, delta, func=ev, label=label)

    def at(self, xi1, xi2) -> np.ndarray:
        """Values ``a(x, xi)`` for every grid ``x``: shape ``(L, n, n)``."""
        xi1, xi2 = _as_points(xi1, xi2)
        if not self.separable:
            return np.asarray(self.func(xi1, xi2))
        m = np.asarray(self.mults(xi1, xi2))
        live = np.any(m != 0, axis=1)
        if not np.any(live):
            return np.zeros((xi1.size, self.n, self.n))
        c = self.coefs[live].reshape(int(live.sum()), -1)
        return (m[live].T @ c).reshape(xi1.size, self.n, self.n)

    def __add__(self, other: "SymbolGrid") -> "SymbolGrid":
        if other.n != self.n:
            raise ConfigurationError("symbols live on different grids")
        order = max(self.order, other.order)
        delta = max(self.delta, other.delta)
        if self.separable and other.separable:

            def mults(a, b):
                return np.concatenate([self.mults(a, b), other.mults(a, b)])

            return SymbolGrid(self.n, order, delta,
                              np.concatenate([self.coefs, other.coefs]), mults)
        return SymbolGrid(self.n, order, delta,
                          func=lambda a, b: self.at(a, b) + other.at(a, b))

    def grad_x(self, k: int) -> "SymbolGrid":
        """Spectral ``d/dx_k`` of a separable symbol."""
        if not self.separable:
            raise ConfigurationError("x-derivatives need a separable symbol")
        kk = integer_wavenumbers(self.n).astype(float)
        kk[np.abs(kk) == self.n // 2] = 0.0
        shape = (1, self.n, 1) if k == 0 else (1, 1, self.n)
        spec = np.fft.fft2(self.coefs) * (1j * kk.reshape(shape))
        d = np.fft.ifft2(spec)
        if np.isrealobj(self.coefs):
            d = d.real
        return SymbolGrid(self.n, self.order, self.delta, d, self.mults)


def _chunk_size(n: int) -> int:
    return max(1, _CHUNK // (n * n))


def _spectrum(u, n):
    if isinstance(u, GridField):
        if u.dim != 2 or u.components != 1 or u.n != n:
            raise ConfigurationError("quantize_apply needs a scalar field on the symbol grid")
        return np.fft.fft2(u.data[0]) / (n * n)
    u = np.asarray(u)
    if u.shape != (n, n):
        raise ConfigurationError(f"expected samples of shape {(n, n)}; got {u.shape}")
    return np.fft.fft2(u) / (n * n)


def quantize_apply(a: SymbolGrid, u, dense: bool | None = None):
    """``Op(a)u(x) = sum_xi exp(i x.xi) a(x, xi) u_hat(xi)``.

    Parameters
    ----------
    a : SymbolGrid
    u : GridField or complex ndarray of shape ``(n, n)``
        Band-limited samples.  The Nyquist row and column are treated as the
        frequency ``-n/2``.
    dense : bool, optional
        Force the direct ``O(n^4)`` synthesis.  By default separable symbols
        use one inverse FFT per term and general symbols stream the lattice
        in chunks, skipping frequencies where ``u_hat`` vanishes.

    Returns
    -------
    GridField or ndarray
        A :class:`GridField` holding the real part when ``u`` is a
        :class:`GridField` (symbols with ``a(x,-xi) = conj a(x,xi)``), the
        complex samples otherwise.
    """
    n = a.n
    uh = _spectrum(u, n)
    if dense is None:
        dense = not a.separable
    if not dense:
        k1, k2 = lattice_points(n)
        m = np.asarray(a.mults(k1, k2)).reshape(-1, n, n)
        out = np.zeros((n, n), dtype=complex)
        for c, mt in zip(a.coefs, m):
            out += c * np.fft.ifft2(mt * uh) * (n * n)
    else:
        out = _dense_apply(a, uh)
    if isinstance(u, GridField):
        return GridField(out.real[None], u.extent, u.origin, u.periodic)
    return out


def _dense_apply(a: SymbolGrid, uh: np.ndarray) -> np.ndarray:
    n = a.n
    k1, k2 = lattice_points(n)
    coef = uh.ravel()
    keep = coef != 0
    k1, k2, coef = k1[keep], k2[keep], coef[keep]
    x = box_coordinates(n)
    out = np.zeros((n, n), dtype=complex)
    step = _chunk_size(n)
    for s in range(0, k1.size, step):
        a1, a2, c = k1[s:s + step], k2[s:s + step], coef[s:s + step]
        waves = (np.exp(1j * np.outer(a1, x))[:, :, None]
                 * np.exp(1j * np.outer(a2, x))[:, None, :])
        out += np.einsum("l,lij,lij->ij", c, waves, a.at(a1, a2))
    return out


# ---------------------------------------------------------------------------
# Collar metric on the box
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CutoffSet:
    """Spatial cutoffs ``psi_x``, ``chi_x`` and the frequency cutoff radius ``R``.

    ``psi_xi(xi) = 1 - phi(|xi| / R)`` vanishes for ``|xi| <= R`` and equals 1
    for ``|xi| >= 2R``.
    """

    psi_x: np.ndarray
    chi_x: np.ndarray
    R: float

    def __post_init__(self):
        if self.psi_x.shape != self.chi_x.shape:
            raise ConfigurationError("cutoffs must share the grid")
        if not self.R > 0:
            raise ConfigurationError("R must be positive")
        if np.any((self.chi_x != 0) & ~self.inner):
            raise ConfigurationError("supp chi_x must lie inside {psi_x = 1}")

    @property
    def inner(self) -> np.ndarray:
        """Mask of ``{psi_x = 1}``."""
        return self.psi_x >= 1.0 - 1e-14

    def psi_xi(self, xi1, xi2) -> np.ndarray:
        return 1.0 - bump(np.hypot(xi1, xi2) / self.R)


def collar_cutoffs(n: int, r0: float, M0: int = 2) -> CutoffSet:
    """``psi_x = phi(2|r|/r0)``, ``chi_x = phi(4|r|/r0)`` and ``R = 2 M0``."""
    r = np.abs(box_coordinates(n) - np.pi)
    psi = np.broadcast_to(bump(2.0 * r / r0)[:, None], (n, n)).copy()
    chi = np.broadcast_to(bump(4.0 * r / r0)[:, None], (n, n)).copy()
    return CutoffSet(psi, chi, 2.0 * M0)


def full_cutoffs(n: int, R: float) -> CutoffSet:
    """Trivial spatial cutoffs ``psi_x = chi_x = 1``."""
    one = np.ones((n, n))
    return CutoffSet(one, one.copy(), R)


@dataclass(frozen=True)
class BoxMetric:
    """Inverse metric ``g^{ij}`` sampled on the box, shape ``(2, 2, n, n)``."""

    g: np.ndarray
    r0: float | None = None

    @property
    def n(self) -> int:
        return self.g.shape[-1]

    def scaled(self, factor: float) -> "BoxMetric":
        return BoxMetric(self.g * factor, self.r0)


def constant_metric(n: int, matrix=((1.0, 0.0), (0.0, 1.0))) -> BoxMetric:
    m = np.asarray(matrix, dtype=float)
    return BoxMetric(np.broadcast_to(m[:, :, None, None], (2, 2, n, n)).copy())


def collar_box_metric(m: MetricPatch, n: int) -> BoxMetric:
    """Reflected collar metric, cut off and blended to the identity.

    ``g^{theta theta}`` is extended evenly to ``r in [-r0, r0]``, linearly
    interpolated in ``|r|`` at the box nodes ``r = x_1 - pi`` and blended as
    ``psi_x g + (1 - psi_x) I``.

    Raises
    ------
    ConfigurationError
        If the patch does not have ``n`` angles or the collar is wider than
        the box.
    """
    if m.theta.size != n:
        raise ConfigurationError(f"metric patch needs {n} angles; got {m.theta.size}")
    if not m.r0 < np.pi:
        raise ConfigurationError("collar does not fit in the box")
    cut = collar_cutoffs(n, m.r0)
    r = np.abs(box_coordinates(n) - np.pi)
    rr = np.minimum(r, m.r0)
    gtt = np.stack([np.interp(rr, m.r, m.g_theta_theta[:, j]) for j in range(n)], axis=1)
    grr = np.ones((n, n))
    grt = np.zeros((n, n))
    psi = cut.psi_x
    g = np.empty((2, 2, n, n))
    g[0, 0] = psi * grr + (1 - psi)
    g[1, 1] = psi * gtt + (1 - psi)
    g[0, 1] = g[1, 0] = psi * grt
    return BoxMetric(g, m.r0)


# ---------------------------------------------------------------------------
# Sharp / flat splitting
# ---------------------------------------------------------------------------

def sharp_levels(M: int, delta: float) -> list[int]:
    """Dyadic ``K`` with ``K <= M^delta`` (relative slack ``1e-12``)."""
    top = M ** delta * (1 + 1e-12)
    out, K = [], 1
    while K <= top:
        out.append(K)
        K *= 2
    return out


def _x_levels(n: int) -> list[int]:
    # P_K summed up to K = n covers every lattice frequency (|k| <= n/sqrt 2).
    return [2 ** j for j in range(int(np.log2(n)) + 1)]


def _x_blocks(g: np.ndarray, n: int) -> dict[int, np.ndarray]:
    gh = np.fft.fft2(g)
    return {K: np.fft.ifft2(gh * block_multiplier(n, 2, K)).real for K in _x_levels(n)}


def default_symbol_partition(n: int) -> DyadicPartition:
    """Frequency partition whose blocks sum to one for ``|xi| <= 4n``."""
    return make_partition(int(np.log2(n)) + 2)


def _block_mults(part: DyadicPartition, levels, extra):
    """``xi`` factors ``P_M(xi) * extra(xi)`` for every ``M`` in ``levels``."""

    def mults(a, b):
        rad = np.hypot(a, b)
        e = extra(a, b)
        return np.stack([part.multiplier(M, rad) * e for M in levels])

    return mults


def _split_component(blocks, levels, delta, i, sharp: bool):
    coefs = []
    for M in levels:
        keep = set(sharp_levels(M, delta))
        for j in range(2):
            Ks = [K for K in blocks[i][j] if (K in keep) == sharp]
            coefs.append(sum((blocks[i][j][K] for K in Ks), np.zeros_like(blocks[0][0][1])))
    return np.array(coefs)


def _paired_mults(part, levels, k_of):
    def mults(a, b):
        rad = np.hypot(a, b)
        xi = (a, b)
        rows = []
        for M in levels:
            PM = part.multiplier(M, rad)
            for j in range(2):
                rows.append(PM * k_of(xi, j))
        return np.stack(rows)

    return mults


def sharp_flat_split(metric: BoxMetric, delta: float = DEFAULT_DELTA,
                     part: DyadicPartition | None = None):
    """Split ``g^{ij}(x) xi_j`` into ``e_sharp_1`` and ``e_flat``.

    ``e_sharp_{1,i} = sum_M sum_{K <= M^delta} g^{ij}_K(x) P_M(xi) xi_j`` and
    ``e_flat_i = sum_M sum_{K > M^delta} g^{ij}_K(x) P_M(xi) xi_j``, where
    ``g_K`` is the ``K``-th x-frequency block of the sampled metric.

    Returns
    -------
    (list of SymbolGrid, list of SymbolGrid)
        ``[e_sharp_{1,1}, e_sharp_{1,2}]`` and ``[e_flat_1, e_flat_2]``.
    """
    if not 0.0 < delta < 0.5:
        raise ConfigurationError(f"delta must lie in (0, 1/2); got {delta}")
    n = metric.n
    part = part or default_symbol_partition(n)
    levels = part.levels
    blocks = [[_x_blocks(metric.g[i, j], n) for j in range(2)] for i in range(2)]
    mults = _paired_mults(part, levels, lambda xi, j: xi[j])
    sharp, flat = [], []
    for i in range(2):
        sharp.append(SymbolGrid(n, 1.0, delta, _split_component(blocks, levels, delta, i, True),
                                mults, label=f"e_sharp_1[{i}]"))
        flat.append(SymbolGrid(n, 1.0, delta, _split_component(blocks, levels, delta, i, False),
                               mults, label=f"e_flat[{i}]"))
    return sharp, flat


def sharp_second_order(metric: BoxMetric, delta: float = DEFAULT_DELTA,
                       part: DyadicPartition | None = None) -> SymbolGrid:
    """``e_sharp_2 = sum_M sum_{K <= M^delta} g^{ij}_K(x) P_M(xi) xi_i xi_j``."""
    sharp, _ = sharp_flat_split(metric, delta, part)
    part = part or default_symbol_partition(metric.n)
    coefs = np.concatenate([sharp[0].coefs, sharp[1].coefs])
    m_i = [_paired_mults(part, part.levels, lambda xi, j, i=i: xi[i] * xi[j]) for i in range(2)]

    def mults(a, b):
        return np.concatenate([m_i[0](a, b), m_i[1](a, b)])

    return SymbolGrid(metric.n, 2.0, delta, coefs, mults, label="e_sharp_2")


def flat_laplacian_symbol(n: int) -> SymbolGrid:
    """``|xi|^2``, the symbol of ``-Delta``."""
    return SymbolGrid.multiplier(n, lambda a, b: a * a + b * b, 2.0, label="|xi|^2")


def full_symbol_component(metric: BoxMetric, i: int) -> SymbolGrid:
    """Unsplit ``g^{ij}(x) xi_j``."""
    return SymbolGrid(metric.n, 1.0, 0.0, metric.g[i].copy(),
                      lambda a, b: np.stack([a, b]), label=f"g xi[{i}]")


def reconstruction_error(sharp: Sequence[SymbolGrid], flat: Sequence[SymbolGrid],
                         metric: BoxMetric, xi_max: float | None = None) -> float:
    """Max over the grid and the lattice of ``|e_sharp + e_flat - g xi|``."""
    n = metric.n
    k1, k2 = lattice_points(n)
    if xi_max is not None:
        keep = np.hypot(k1, k2) <= xi_max
        k1, k2 = k1[keep], k2[keep]
    worst = 0.0
    step = _chunk_size(n)
    for i in range(2):
        full = full_symbol_component(metric, i)
        for s in range(0, k1.size, step):
            a, b = k1[s:s + step], k2[s:s + step]
            d = sharp[i].at(a, b) + flat[i].at(a, b) - full.at(a, b)
            worst = max(worst, float(np.max(np.abs(d))))
    return worst


# ---------------------------------------------------------------------------
# Ellipticity and parametrix
# ---------------------------------------------------------------------------

def verify_sharp_ellipticity(e2: SymbolGrid, c: float, region: np.ndarray | None = None) -> int:
    """Smallest dyadic ``M0 >= 2`` with ``e2(x, xi) >= (c/2)|xi|^2`` beyond it.

    Every lattice frequency and every ``x`` in ``region`` (default: the whole
    grid) is checked.

    Raises
    ------
    NonEllipticError
        If the bound fails at lattice frequencies with ``|xi| >= n/2``.
    """
    n = e2.n
    mask = np.ones((n, n), bool) if region is None else np.asarray(region, bool)
    if not np.any(mask):
        raise ConfigurationError("empty verification region")
    k1, k2 = lattice_points(n)
    rad = np.hypot(k1, k2)
    order = np.argsort(rad)
    k1, k2, rad = k1[order], k2[order], rad[order]
    worst = 0.0
    npts = int(mask.sum())
    step = max(1, _CHUNK // npts)
    for s in range(0, k1.size, step):
        a, b, r = k1[s:s + step], k2[s:s + step], rad[s:s + step]
        vals = e2.at(a, b)[:, mask]
        low = np.min(vals.real, axis=1)
        bad = low < 0.5 * c * r * r * (1 - 1e-12)
        if np.any(bad):
            worst = max(worst, float(np.max(r[bad])))
    M0 = 2
    while M0 <= worst:
        M0 *= 2
    if M0 > n // 2:
        raise NonEllipticError(
            f"sharp symbol violates e2 >= (c/2)|xi|^2 up to |xi| = {worst:.3g} "
            f"on the n={n} lattice (c={c:g}); metric not elliptic with this constant")
    return M0


def _parametrix_1(e2: SymbolGrid, cut: CutoffSet, c: float):
    chi = cut.chi_x[None]
    region = chi != 0

    def b1(a, b):
        a, b = _as_points(a, b)
        e = e2.at(a, b)
        psi = cut.psi_xi(a, b)[:, None, None]
        r2 = (a * a + b * b)[:, None, None]
        support = (psi > 0) & region
        if np.any(support & (np.abs(e) < 0.25 * c * r2)):
            raise NonEllipticError("parametrix division by a degenerate sharp symbol")
        safe = np.where(support, e, 1.0)
        return np.where(support, chi * psi / safe, 0.0)

    return b1


def build_parametrix(e2: SymbolGrid, cut: CutoffSet, order: int = 1,
                     c: float = 1.0) -> SymbolGrid:
    """Parametrix ``b = chi psi_xi / e2`` (order 1) plus ``(i/e2) grad_xi b . grad_x e2``.

    ``grad_xi`` is the centered lattice difference of the order-1 symbol and
    ``grad_x`` the spectral derivative of ``e2``.
    """
    if order not in (1, 2):
        raise ConfigurationError("parametrix order must be 1 or 2")
    b1 = _parametrix_1(e2, cut, c)
    if order == 1:
        return SymbolGrid(e2.n, -e2.order, e2.delta, func=b1, label="b1")
    dx = [e2.grad_x(k) for k in range(2)]

    def b12(a, b):
        a, b = _as_points(a, b)
        base = b1(a, b)
        e = e2.at(a, b)
        corr = np.zeros_like(base, dtype=complex)
        for k, (s1, s2) in enumerate(((1.0, 0.0), (0.0, 1.0))):
            dxi = 0.5 * (b1(a + s1, b + s2) - b1(a - s1, b - s2))
            corr += dxi * dx[k].at(a, b)
        safe = np.where(base != 0, e, 1.0)
        return base + np.where(base != 0, 1j * corr / safe, 0.0)

    return SymbolGrid(e2.n, -e2.order, e2.delta, func=b12, label="b1+b2")


def mode_remainder(b: SymbolGrid, e2: SymbolGrid, cut: CutoffSet, xi) -> float:
    """``sup_x |Op(b)Op(e2) e_xi - chi e_xi|`` for the pure mode ``e_xi = exp(i x.xi)``.

    ``Op(e2) e_xi = e2(x, xi) e_xi`` exactly; its envelope ``e2(., xi)`` is
    band-limited, so ``Op(b)`` acts on finitely many frequencies ``xi + eta``
    and the carrier factors out of the sup norm.  ``xi`` need not lie on the
    grid's lattice.
    """
    n = e2.n
    xi = np.asarray(xi, dtype=float)
    env = e2.at([xi[0]], [xi[1]])[0]
    spec = np.fft.fft2(env) / (n * n)
    live = np.abs(spec) > 1e-15 * np.max(np.abs(spec))
    k = integer_wavenumbers(n).astype(float)
    K1, K2 = np.meshgrid(k, k, indexing="ij")
    e1, e2_, coef = K1[live], K2[live], spec[live]
    x = box_coordinates(n)
    out = np.zeros((n, n), dtype=complex)
    step = _chunk_size(n)
    for s in range(0, e1.size, step):
        a1, a2, cc = e1[s:s + step], e2_[s:s + step], coef[s:s + step]
        waves = (np.exp(1j * np.outer(a1, x))[:, :, None]
                 * np.exp(1j * np.outer(a2, x))[:, None, :])
        out += np.einsum("l,lij,lij->ij", cc, waves, b.at(a1 + xi[0], a2 + xi[1]))
    return float(np.max(np.abs(out - cut.chi_x)))


def mode_vector(N: int, direction=(1, 1)) -> np.ndarray:
    """Lattice mode ``N * direction``."""
    return N * np.asarray(direction, dtype=float)


def remainder_sweep(b: SymbolGrid, e2: SymbolGrid, cut: CutoffSet, N_list,
                    direction=(1, 1)) -> list[tuple[int, float]]:
    """``(N, error)`` for the modes ``N * direction``."""
    return [(int(N), mode_remainder(b, e2, cut, mode_vector(N, direction))) for N in N_list]


EXACT_TOL = 1e-12


def parametrix_remainder_order(b: SymbolGrid, e2: SymbolGrid, cut: CutoffSet,
                               N_list=(8, 16, 32, 64), direction=(1, 1)) -> ExponentFit:
    """Slope of ``log sup|Op(b)Op(e2)e_N - chi e_N|`` against ``log N``.

    When every error is below ``1e-12`` the parametrix is an exact inverse
    on the swept modes and the fit is flagged ``exact`` with slope ``-inf``.
    """
    if len(N_list) < 2:
        raise DegenerateFitError("need at least two modes")
    rows = remainder_sweep(b, e2, cut, N_list, direction)
    Ns = [r[0] for r in rows]
    errs = [r[1] for r in rows]
    if max(errs) < EXACT_TOL:
        return ExponentFit(-np.inf, -np.inf, 1.0, (min(Ns), max(Ns)), len(Ns), exact=True)
    return fit_power_law(Ns, errs)
