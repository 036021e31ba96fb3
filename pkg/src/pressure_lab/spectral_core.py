"""Uniform periodic grids, discrete Fourier transforms and the smooth
dyadic (Littlewood-Paley) partition of unity.

Frequencies are integer wavevectors: a grid of ``n`` points per axis on a
period of ``extent`` carries the lattice ``xi in Z^dim`` with
``|xi_i| <= n/2``.  Dyadic levels ``N = 1, 2, 4, ...`` are measured in
lattice units, so ``cos(N x)`` on the standard ``2*pi`` torus lives in the
block ``N``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, EmptyBlockError, ResolutionError

TWO_PI = 2.0 * np.pi

# Gauss-Legendre rule used to integrate the mollifier into the ramp of the
# bump.  96 nodes reproduce adaptive quadrature to ~2e-15.
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(96)


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridField:
    """Real samples of a scalar, vector or tensor field on a uniform grid.

    Parameters
    ----------
    data : ndarray
        Array of shape ``(components, n)`` in 1D or ``(components, n, n)``
        in 2D.  Axis ``k+1`` is the ``k``-th spatial coordinate.
    extent : float
        Length of the sampled window along every axis (period length for
        periodic grids).
    origin : float
        Coordinate of the first sample along every axis.
    periodic : bool
        Whether samples wrap around.  Non-periodic windows are only used by
        the difference-quotient estimators.
    """

    data: np.ndarray
    extent: float = TWO_PI
    origin: float = 0.0
    periodic: bool = True

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim not in (2, 3):
            raise ConfigurationError(
                f"data must have shape (components, n[, n]); got {data.shape}")
        n = data.shape[1]
        if any(s != n for s in data.shape[1:]):
            raise ConfigurationError(f"grid must be square; got {data.shape[1:]}")
        if n < 4 or not _is_power_of_two(n):
            raise ConfigurationError(f"n_per_axis must be a power of two >= 4; got {n}")
        if not self.extent > 0:
            raise ConfigurationError("extent must be positive")
        object.__setattr__(self, "data", data)

    @property
    def dim(self) -> int:
        return self.data.ndim - 1

    @property
    def n(self) -> int:
        return self.data.shape[1]

    @property
    def components(self) -> int:
        return self.data.shape[0]

    @property
    def spacing(self) -> float:
        return self.extent / self.n

    def coords(self) -> np.ndarray:
        """1D sample coordinates shared by every axis."""
        return self.origin + self.spacing * np.arange(self.n)

    def mesh(self) -> tuple[np.ndarray, ...]:
        x = self.coords()
        return np.meshgrid(*([x] * self.dim), indexing="ij")

    def component(self, i: int) -> "GridField":
        return self.with_data(self.data[i:i + 1])

    def with_data(self, data) -> "GridField":
        return GridField(np.asarray(data, dtype=float), self.extent, self.origin, self.periodic)

    def sup(self) -> float:
        """Grid maximum of the absolute value over all components."""
        return float(np.max(np.abs(self.data))) if self.data.size else 0.0

    @classmethod
    def from_function(cls, func, n: int, dim: int = 2, extent: float = TWO_PI,
                      origin: float = 0.0, periodic: bool = True) -> "GridField":
        """Sample ``func(*coords)`` (scalar or sequence of components)."""
        x = origin + (extent / n) * np.arange(n)
        mesh = np.meshgrid(*([x] * dim), indexing="ij")
        values = func(*mesh)
        if isinstance(values, (list, tuple)):
            arr = np.stack([np.broadcast_to(np.asarray(v, dtype=float), mesh[0].shape)
                            for v in values])
        else:
            arr = np.broadcast_to(np.asarray(values, dtype=float), mesh[0].shape)[None]
        return cls(np.array(arr), extent, origin, periodic)


@dataclass(frozen=True)
class SpectralField:
    """Fourier coefficients of a :class:`GridField`.

    ``coeffs[c][idx]`` is the coefficient of ``exp(i xi . x)`` for the
    integer wavevector ``xi`` at FFT index ``idx`` (numpy ordering), scaled
    so that ``cos(3x)`` has coefficients ``1/2`` at ``xi = +-3``.
    """

    coeffs: np.ndarray
    extent: float = TWO_PI

    @property
    def dim(self) -> int:
        return self.coeffs.ndim - 1

    @property
    def n(self) -> int:
        return self.coeffs.shape[1]

    @property
    def components(self) -> int:
        return self.coeffs.shape[0]

    def wavevectors(self) -> tuple[np.ndarray, ...]:
        return lattice(self.n, self.dim)

    def coefficient(self, xi, component: int = 0) -> complex:
        """Coefficient at an integer wavevector ``xi``."""
        idx = tuple(int(k) % self.n for k in np.atleast_1d(xi))
        return complex(self.coeffs[(component,) + idx])


def integer_wavenumbers(n: int) -> np.ndarray:
    """Integer frequencies in FFT order, ``0, 1, ..., n/2-1, -n/2, ..., -1``."""
    return np.fft.fftfreq(n, d=1.0 / n)


@lru_cache(maxsize=64)
def _lattice_cached(n: int, dim: int):
    k = integer_wavenumbers(n)
    grids = np.meshgrid(*([k] * dim), indexing="ij")
    for g in grids:
        g.setflags(write=False)
    return tuple(grids)


def lattice(n: int, dim: int) -> tuple[np.ndarray, ...]:
    """Integer wavevector components on an ``n^dim`` grid (read-only)."""
    return _lattice_cached(int(n), int(dim))


@lru_cache(maxsize=64)
def _radius_cached(n: int, dim: int):
    r = np.sqrt(sum(g * g for g in lattice(n, dim)))
    r.setflags(write=False)
    return r


def lattice_radius(n: int, dim: int) -> np.ndarray:
    """``|xi|`` on the FFT lattice (read-only)."""
    return _radius_cached(int(n), int(dim))


def dft_forward(f: GridField) -> SpectralField:
    """Trigonometric interpolation coefficients of ``f``."""
    axes = tuple(range(1, f.dim + 1))
    coeffs = np.fft.fftn(f.data, axes=axes) / f.n ** f.dim
    return SpectralField(coeffs, f.extent)


def dft_inverse(F: SpectralField, origin: float = 0.0) -> GridField:
    """Real part of the trigonometric sum with coefficients ``F``."""
    axes = tuple(range(1, F.dim + 1))
    data = np.fft.ifftn(F.coeffs * F.n ** F.dim, axes=axes).real
    return GridField(data, F.extent, origin)


def apply_multiplier(f: GridField, multiplier: np.ndarray) -> GridField:
    """Apply a real Fourier multiplier (array on the FFT lattice)."""
    axes = tuple(range(1, f.dim + 1))
    fh = np.fft.fftn(f.data, axes=axes)
    return f.with_data(np.fft.ifftn(fh * multiplier, axes=axes).real)


def spectral_derivative(f: GridField, axis: int, order: int = 1) -> GridField:
    """``d^order f / dx_axis^order`` computed spectrally.

    The Nyquist mode is dropped for odd orders so that real fields stay real.
    """
    k = lattice(f.n, f.dim)[axis] * (TWO_PI / f.extent)
    mult = (1j * k) ** order
    if order % 2 == 1:
        mult = np.where(np.abs(lattice(f.n, f.dim)[axis]) == f.n // 2, 0.0, mult)
    axes = tuple(range(1, f.dim + 1))
    fh = np.fft.fftn(f.data, axes=axes)
    return f.with_data(np.fft.ifftn(fh * mult, axes=axes).real)


# ---------------------------------------------------------------------------
# Bump profile and dyadic partition
# ---------------------------------------------------------------------------

def _mollifier(t):
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    ti = t[inside]
    out[inside] = np.exp(-1.0 / (1.0 - ti * ti))
    return out


_RAMP_CHUNK = 1 << 15
_MOLLIFIER_MASS = float(_mollifier(_GL_NODES) @ _GL_WEIGHTS)


def smooth_ramp(s) -> np.ndarray:
    """C-infinity monotone ramp: 0 for ``s <= 0``, 1 for ``s >= 1``.

    The ramp is the normalized integral of ``exp(-1/(1-t^2))`` over
    ``[-1, 2s-1]``, evaluated with a fixed Gauss-Legendre rule.
    """
    s = np.asarray(s, dtype=float)
    out = np.where(s >= 1.0, 1.0, 0.0)
    mid = (s > 0.0) & (s < 1.0)
    if np.any(mid):
        vals, inverse = np.unique(s[mid], return_inverse=True)
        ramp = np.empty_like(vals)
        for lo in range(0, vals.size, _RAMP_CHUNK):
            half = vals[lo:lo + _RAMP_CHUNK]  # half-length of [-1, 2s-1]
            nodes = -1.0 + half[:, None] * (_GL_NODES[None, :] + 1.0)
            ramp[lo:lo + _RAMP_CHUNK] = (_mollifier(nodes) @ _GL_WEIGHTS) * half / _MOLLIFIER_MASS
        out[mid] = np.clip(ramp, 0.0, 1.0)[inverse]
    return out


def bump(r) -> np.ndarray:
    """Radial bump profile: 1 on ``[0, 1]``, 0 on ``[2, inf)``, smooth between."""
    r = np.abs(np.asarray(r, dtype=float))
    return 1.0 - smooth_ramp(r - 1.0)


def bump_fingerprint() -> str:
    """Short hash of the bump samples, recorded in report provenance."""
    import hashlib
    samples = bump(np.linspace(0.0, 2.0, 257))
    return hashlib.sha256(samples.tobytes()).hexdigest()[:16]


@dataclass(frozen=True)
class DyadicPartition:
    """Smooth dyadic partition ``{P_N}``, ``N = 1, 2, ..., 2^J_max``.

    ``P_1 = phi`` and ``P_N(xi) = phi(xi/N) - phi(2 xi/N)`` for ``N >= 2``.
    """

    J_max: int
    description: str = field(default="integrated exp(-1/(1-t^2)) ramp on [1,2]")

    @property
    def levels(self) -> list[int]:
        return [2 ** j for j in range(self.J_max + 1)]

    def multiplier(self, N: int, radius) -> np.ndarray:
        """``P_N`` evaluated at frequencies of magnitude ``radius``."""
        radius = np.asarray(radius, dtype=float)
        if N == 1:
            return bump(radius)
        return _block_from_bump(radius, N)

    def resolvable_levels(self, n: int) -> list[int]:
        """Levels with ``2N <= n/2``, i.e. blocks free of Nyquist aliasing."""
        return [N for N in self.levels if 2 * N <= n // 2]


def _block_from_bump(radius, N):
    return bump(radius / N) - bump(2.0 * radius / N)


def make_partition(J_max: int) -> DyadicPartition:
    """Dyadic partition with largest level ``2^J_max``."""
    if J_max < 2:
        raise ConfigurationError(f"J_max must be >= 2; got {J_max}")
    return DyadicPartition(int(J_max))


_CACHE_LIMIT = 2 ** 20  # lattice sizes above this are recomputed, not cached


def _lattice_r2_uncached(n: int, dim: int, real: bool) -> np.ndarray:
    k = integer_wavenumbers(n).astype(np.int64)
    axes = [k] * dim
    if real:
        axes[-1] = np.arange(n // 2 + 1, dtype=np.int64)
    r2 = np.zeros([len(a) for a in axes], dtype=np.int64)
    for i, a in enumerate(axes):
        shape = [1] * dim
        shape[i] = len(a)
        r2 = r2 + (a * a).reshape(shape)
    return r2


@lru_cache(maxsize=16)
def _lattice_r2_cached(n: int, dim: int, real: bool):
    out = _lattice_r2_uncached(n, dim, real)
    out.setflags(write=False)
    return out


def lattice_r2(n: int, dim: int, real: bool = False) -> np.ndarray:
    """Integer ``|xi|^2`` on the FFT lattice; ``real`` selects the rfft half-lattice."""
    if n ** dim <= _CACHE_LIMIT:
        return _lattice_r2_cached(int(n), int(dim), bool(real))
    return _lattice_r2_uncached(int(n), int(dim), bool(real))


@lru_cache(maxsize=64)
def _radial_table(N: int, scale: float, limit: int) -> np.ndarray:
    """``P_N(scale * sqrt(m))`` for ``m = 0..min((2N/scale)^2, limit)``; zero beyond."""
    top = min(int(np.ceil((2.0 * N / scale) ** 2)), limit)
    r = scale * np.sqrt(np.arange(top + 1, dtype=float))
    table = bump(r) if N == 1 else _block_from_bump(r, N)
    table.setflags(write=False)
    return table


def radial_multiplier(r2: np.ndarray, N: int, scale: float = 1.0) -> np.ndarray:
    """``P_N(scale |xi|)`` from integer ``|xi|^2`` by table lookup.

    The table stops at the largest ``|xi|^2`` present (rounded up to a power
    of two so that lattices of one size share it).
    """
    r2max = int(np.max(r2)) if np.size(r2) else 0
    limit = 1 << max(r2max, 1).bit_length()
    table = _radial_table(int(N), float(scale), limit)
    return table[np.minimum(r2, len(table) - 1)]


@lru_cache(maxsize=64)
def _block_multiplier_cached(n: int, dim: int, N: int, real: bool):
    out = radial_multiplier(lattice_r2(n, dim, real), N)
    out.setflags(write=False)
    return out


def block_multiplier(n: int, dim: int, N: int, real: bool = False) -> np.ndarray:
    """``P_N`` sampled on the FFT lattice of an ``n^dim`` grid.

    No resolvability check is applied; internal splittings use the full
    partition, including levels past the Nyquist guard.  With ``real`` the
    multiplier is laid out for ``rfftn``.
    """
    if n ** dim <= _CACHE_LIMIT:
        return _block_multiplier_cached(int(n), int(dim), int(N), bool(real))
    return radial_multiplier(lattice_r2(n, dim, real), N)


def _check_level(N: int, n: int, part: DyadicPartition | None):
    if N < 1 or not _is_power_of_two(N):
        raise ConfigurationError(f"level N must be a dyadic integer; got {N}")
    if part is not None and N > 2 ** part.J_max:
        raise ResolutionError(f"N={N} exceeds partition top level 2^{part.J_max}")
    if 2 * N > n // 2:
        raise ResolutionError(f"block N={N} is not resolvable on n={n} (needs 2N <= n/2)")


def project_block(f: GridField, N: int, part: DyadicPartition | None = None) -> GridField:
    """Littlewood-Paley block ``f_N = P_N f``.

    Raises
    ------
    ResolutionError
        If ``2N > n/2`` or ``N`` exceeds the partition.
    """
    _check_level(N, f.n, part)
    return apply_multiplier(f, block_multiplier(f.n, f.dim, N))


def block_decomposition(f: GridField, part: DyadicPartition) -> dict[int, GridField]:
    """All resolvable blocks of ``f`` keyed by level."""
    return {N: project_block(f, N, part) for N in part.resolvable_levels(f.n)}


def block_sups(f: GridField, levels) -> list[float]:
    """``||P_N f||_inf`` for each level, from a single real FFT of ``f``."""
    import scipy.fft as sfft
    for N in levels:
        _check_level(N, f.n, None)
    axes = tuple(range(1, f.dim + 1))
    shape = (f.n,) * f.dim
    fh = sfft.rfftn(f.data, axes=axes)
    out = []
    for N in levels:
        block = sfft.irfftn(fh * block_multiplier(f.n, f.dim, N, real=True), s=shape, axes=axes)
        out.append(float(np.max(np.abs(block))))
    return out


def bernstein_ratio(f: GridField, N: int, s: float, part: DyadicPartition | None = None) -> float:
    """``|| |grad|^s f_N ||_inf / (N^s || f_N ||_inf)``.

    Raises
    ------
    EmptyBlockError
        If the block vanishes.
    """
    fN = project_block(f, N, part)
    denom = fN.sup()
    if denom <= 1e-14 * max(f.sup(), 1e-300):
        raise EmptyBlockError(f"block N={N} is empty")
    if s == 0:
        return 1.0
    radius = lattice_radius(f.n, f.dim)
    frac = apply_multiplier(fN, radius ** s)
    return frac.sup() / (N ** s * denom)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def save_field(f: GridField, path, extra: dict | None = None) -> Path:
    """Write flat float64 samples to ``path`` and a JSON header beside it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.ascontiguousarray(f.data, dtype="<f8").tofile(path)
    header = {
        "dim": f.dim,
        "n_per_axis": f.n,
        "extent": f.extent,
        "components": f.components,
        "origin": f.origin,
        "periodic": f.periodic,
    }
    if extra:
        header.update(extra)
    path.with_suffix(".json").write_text(json.dumps(header, indent=2, sort_keys=True))
    return path


def load_field(path) -> GridField:
    """Inverse of :func:`save_field`."""
    path = Path(path)
    header = json.loads(path.with_suffix(".json").read_text())
    n, dim, comps = header["n_per_axis"], header["dim"], header["components"]
    flat = np.fromfile(path, dtype="<f8")
    if flat.size != comps * n ** dim:
        raise ConfigurationError(
            f"{path}: expected {comps * n ** dim} samples, found {flat.size}")
    data = flat.reshape((comps,) + (n,) * dim)
    return GridField(data, header["extent"], header.get("origin", 0.0),
                     header.get("periodic", True))
