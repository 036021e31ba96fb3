"""Polar grids on the unit disk and normal geodesic (collar) coordinates.

On the unit disk the distance to the boundary is ``r = 1 - rho`` and the
normal geodesic coordinates are ``(r, theta)`` with

    ds^2 = dr^2 + (1 - r)^2 dtheta^2,   g^{rr} = 1,  g^{theta theta} = (1-r)^{-2},
    G = sqrt(det g_lower) = 1 - r.

Collar operators use second-order centered differences in ``r`` and
spectral differentiation in the periodic variable ``theta``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError

TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# Polar grid on the unit disk
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PolarGrid:
    """Node-centered polar grid ``rho_i = i/n_rho`` (``i = 1..n_rho``),
    ``theta_j = 2 pi j / n_theta``.  The pole ``rho = 0`` is a separate node.
    """

    n_rho: int
    n_theta: int

    def __post_init__(self):
        if self.n_rho < 4 or self.n_theta < 8 or self.n_theta % 2:
            raise ConfigurationError(
                f"polar grid too small or odd n_theta: ({self.n_rho}, {self.n_theta})")

    @classmethod
    def from_n(cls, n: int, theta_factor: int = 4) -> "PolarGrid":
        """Grid with ``n`` radial intervals and ``theta_factor * n`` angles."""
        return cls(int(n), int(theta_factor * n))

    @property
    def h(self) -> float:
        return 1.0 / self.n_rho

    @property
    def dtheta(self) -> float:
        return TWO_PI / self.n_theta

    @property
    def rho(self) -> np.ndarray:
        return np.arange(1, self.n_rho + 1) * self.h

    @property
    def theta(self) -> np.ndarray:
        return np.arange(self.n_theta) * self.dtheta

    def mesh(self):
        return np.meshgrid(self.rho, self.theta, indexing="ij")

    def cartesian(self):
        R, T = self.mesh()
        return R * np.cos(T), R * np.sin(T)

    def ring_weights(self) -> np.ndarray:
        """Area of the control volume of each ring node (per unit angle).

        Interior rings own ``[rho_i - h/2, rho_i + h/2]``; the boundary ring
        owns the half cell ``[1 - h/2, 1]``.
        """
        h = self.h
        inner = np.maximum(self.rho - h / 2, 0.0)
        outer = np.minimum(self.rho + h / 2, 1.0)
        return 0.5 * (outer ** 2 - inner ** 2)

    @property
    def pole_weight(self) -> float:
        """Area of the pole control volume (full angle)."""
        return np.pi * (self.h / 2) ** 2

    def integrate(self, values: np.ndarray, pole_value: float | None = None) -> float:
        """Control-volume quadrature of node values over the disk."""
        vals = np.asarray(values, dtype=float)
        total = float(np.sum(vals.sum(axis=1) * self.ring_weights()) * self.dtheta)
        if pole_value is None:
            pole_value = float(vals[0].mean())
        return total + self.pole_weight * pole_value

    def integrate_smooth(self, values: np.ndarray) -> float:
        """Fourth-order quadrature of smooth node values over the disk.

        Composite Simpson in ``rho`` on ``[0, 1]`` (the integrand ``rho F``
        vanishes at the pole) and the trapezoid rule in ``theta``.  Falls back
        to the trapezoid rule in ``rho`` for odd ``n_rho``.
        """
        vals = np.asarray(values, dtype=float)
        radial = np.concatenate([[0.0], self.rho * vals.sum(axis=1) * self.dtheta])
        if self.n_rho % 2:
            w = np.full(radial.size, self.h)
            w[[0, -1]] = self.h / 2
        else:
            w = np.full(radial.size, 2.0)
            w[1::2] = 4.0
            w[[0, -1]] = 1.0
            w *= self.h / 3
        return float(radial @ w)

    def boundary_integral(self, values: np.ndarray) -> float:
        """Trapezoid rule over the unit circle."""
        return float(np.sum(values) * self.dtheta)


@dataclass(frozen=True)
class PolarField:
    """Samples on a :class:`PolarGrid`.

    ``data`` has shape ``(components, n_rho, n_theta)``.  Vectors use the
    orthonormal frame ``(e_rho, e_theta)``.
    """

    data: np.ndarray
    grid: PolarGrid

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim == 2:
            data = data[None]
        if data.shape[1:] != (self.grid.n_rho, self.grid.n_theta):
            raise ConfigurationError(
                f"polar data shape {data.shape[1:]} does not match grid "
                f"({self.grid.n_rho}, {self.grid.n_theta})")
        object.__setattr__(self, "data", data)

    @property
    def components(self) -> int:
        return self.data.shape[0]

    def sup(self) -> float:
        return float(np.max(np.abs(self.data)))

    def cartesian_components(self) -> tuple[np.ndarray, np.ndarray]:
        """Convert a 2-vector from ``(e_rho, e_theta)`` to ``(e_x, e_y)``."""
        _, T = self.grid.mesh()
        ur, ut = self.data[0], self.data[1]
        c, s = np.cos(T), np.sin(T)
        return ur * c - ut * s, ur * s + ut * c


def save_polar_field(u: PolarField, path, extra: dict | None = None) -> Path:
    """Write flat float64 samples to ``path`` and a JSON header beside it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.ascontiguousarray(u.data, dtype="<f8").tofile(path)
    header = {"kind": "polar", "components": u.components,
              "n_rho": u.grid.n_rho, "n_theta": u.grid.n_theta}
    if extra:
        header.update(extra)
    path.with_suffix(".json").write_text(json.dumps(header, indent=2, sort_keys=True))
    return path


def load_polar_field(path) -> PolarField:
    """Inverse of :func:`save_polar_field`."""
    path = Path(path)
    header = json.loads(path.with_suffix(".json").read_text())
    grid = PolarGrid(header["n_rho"], header["n_theta"])
    shape = (header["components"], grid.n_rho, grid.n_theta)
    flat = np.fromfile(path, dtype="<f8")
    if flat.size != int(np.prod(shape)):
        raise ConfigurationError(f"{path}: expected {int(np.prod(shape))} samples, found {flat.size}")
    return PolarField(flat.reshape(shape), grid)


def theta_derivative(a: np.ndarray, order: int = 1) -> np.ndarray:
    """Spectral derivative along the last (periodic, ``2 pi``) axis."""
    n = a.shape[-1]
    k = np.fft.fftfreq(n, d=1.0 / n)
    mult = (1j * k) ** order
    if order % 2 == 1:
        mult = np.where(np.abs(k) == n // 2, 0.0, mult)
    return np.fft.ifft(np.fft.fft(a, axis=-1) * mult, axis=-1).real


def polar_radial_derivative(a: np.ndarray, h: float, inner: np.ndarray | None = None,
                            outer: np.ndarray | None = None) -> np.ndarray:
    """Centered ``d/drho`` of ring data ``a[i]`` at ``rho_{i+1}``.

    ``inner`` supplies the row at ``rho = 0`` (pole value broadcast over
    theta) and ``outer`` a ghost row at ``rho = 1 + h``.  Without ``outer``
    the last row uses the second-order one-sided stencil.
    """
    d = np.empty_like(a)
    d[1:-1] = (a[2:] - a[:-2]) / (2 * h)
    if inner is not None:
        d[0] = (a[1] - inner) / (2 * h)
    else:
        d[0] = (-3 * a[0] + 4 * a[1] - a[2]) / (2 * h)
    if outer is not None:
        d[-1] = (outer - a[-2]) / (2 * h)
    else:
        d[-1] = (3 * a[-1] - 4 * a[-2] + a[-3]) / (2 * h)
    return d


# ---------------------------------------------------------------------------
# Collar metric
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MetricPatch:
    """Block-diagonal collar metric ``g = diag(1, g^{theta theta})``.

    Attributes
    ----------
    r : ndarray
        Uniform nodes ``r_k = k h_r`` on ``[0, r0]``.
    theta : ndarray
        Uniform periodic nodes on ``[0, 2 pi)``.
    g_theta_theta, G, a : ndarray
        Samples of ``g^{theta theta}``, ``sqrt(det g_lower)`` and ``1/G`` with
        shape ``(len(r), len(theta))``.
    c : float
        Ellipticity constant of ``g`` on the sampled patch.
    r0 : float
        Collar width.
    """

    r: np.ndarray
    theta: np.ndarray
    g_theta_theta: np.ndarray
    G: np.ndarray
    a: np.ndarray
    c: float
    r0: float

    @property
    def h(self) -> float:
        return float(self.r[1] - self.r[0])

    @property
    def shape(self):
        return self.G.shape

    @property
    def g_rr(self) -> np.ndarray:
        return np.ones_like(self.G)

    @property
    def g_r_theta(self) -> np.ndarray:
        return np.zeros_like(self.G)


def _collar_axes(r0: float, n_r: int, n_theta: int):
    if n_r < 3:
        raise ConfigurationError("collar needs at least 3 radial intervals")
    return np.linspace(0.0, r0, n_r + 1), np.arange(n_theta) * (TWO_PI / n_theta)


def disk_metric(r0: float, n_r: int, n_theta: int) -> MetricPatch:
    """Collar metric of the unit disk, ``r in [0, r0]`` with ``n_r`` intervals.

    Raises
    ------
    ConfigurationError
        If ``r0`` is outside ``(0, 1/2]``; the coordinates degenerate at
        ``r = 1`` (the center).
    """
    if not 0.0 < r0 <= 0.5:
        raise ConfigurationError(f"collar width must lie in (0, 1/2]; got {r0}")
    r, theta = _collar_axes(r0, n_r, n_theta)
    R = np.broadcast_to(r[:, None], (r.size, theta.size))
    G = 1.0 - R
    gtt = 1.0 / G ** 2
    m = MetricPatch(r, theta, np.array(gtt), np.array(G), 1.0 / G, 0.0, r0)
    return _with_c(m)


def annulus_metric(outer_radius: float, r0: float, n_r: int, n_theta: int) -> MetricPatch:
    """Collar at the outer boundary of an annulus of radius ``outer_radius``.

    With ``r = R - rho``: ``g^{theta theta} = (R - r)^{-2}``, ``G = R - r``.
    """
    if not 0.0 < r0 < outer_radius:
        raise ConfigurationError("collar width must be in (0, outer radius)")
    r, theta = _collar_axes(r0, n_r, n_theta)
    R = np.broadcast_to(r[:, None], (r.size, theta.size))
    G = outer_radius - R
    m = MetricPatch(r, theta, np.array(1.0 / G ** 2), np.array(G), 1.0 / G, 0.0, r0)
    return _with_c(m)


def identity_metric(r0: float, n_r: int, n_theta: int) -> MetricPatch:
    """Flat metric ``g = I``, ``G = 1`` on a collar-shaped patch."""
    r, theta = _collar_axes(r0, n_r, n_theta)
    one = np.ones((r.size, theta.size))
    return _with_c(MetricPatch(r, theta, one, one.copy(), one.copy(), 0.0, r0))


def _with_c(m: MetricPatch) -> MetricPatch:
    return MetricPatch(m.r, m.theta, m.g_theta_theta, m.G, m.a, ellipticity_constant(m), m.r0)


def ellipticity_constant(m: MetricPatch) -> float:
    """Minimum over the grid of the smallest eigenvalue of ``diag(1, g^{theta theta})``."""
    return float(min(1.0, np.min(m.g_theta_theta)))


# ---------------------------------------------------------------------------
# Collar differential operators
# ---------------------------------------------------------------------------

def _d_r(a: np.ndarray, h: float) -> np.ndarray:
    """Second-order ``d/dr`` along axis 0 with one-sided edges."""
    d = np.empty_like(a)
    d[1:-1] = (a[2:] - a[:-2]) / (2 * h)
    d[0] = (-3 * a[0] + 4 * a[1] - a[2]) / (2 * h)
    d[-1] = (3 * a[-1] - 4 * a[-2] + a[-3]) / (2 * h)
    return d


def _d_rr(a: np.ndarray, h: float) -> np.ndarray:
    """Second-order ``d^2/dr^2`` along axis 0 with one-sided edges."""
    d = np.empty_like(a)
    d[1:-1] = (a[2:] - 2 * a[1:-1] + a[:-2]) / h ** 2
    d[0] = (2 * a[0] - 5 * a[1] + 4 * a[2] - a[3]) / h ** 2
    d[-1] = (2 * a[-1] - 5 * a[-2] + 4 * a[-3] - a[-4]) / h ** 2
    return d


def laplace_beltrami(p: np.ndarray, m: MetricPatch) -> np.ndarray:
    """``Delta_g p = G^{-1} d_i(G g^{ij} d_j p)`` on the collar.

    Interior rows use the conservative centered stencil with ``G`` averaged
    to half nodes; the two edge rows use second-order one-sided
    differences of the expanded form ``p_rr + (G_r / G) p_r``.
    """
    p = np.asarray(p, dtype=float)
    h, G = m.h, m.G
    out = np.empty_like(p)
    Gh = 0.5 * (G[1:] + G[:-1])
    flux = Gh * (p[1:] - p[:-1]) / h
    out[1:-1] = (flux[1:] - flux[:-1]) / h
    out[0] = _d_rr(p, h)[0] * G[0] + _d_r(G, h)[0] * _d_r(p, h)[0]
    out[-1] = _d_rr(p, h)[-1] * G[-1] + _d_r(G, h)[-1] * _d_r(p, h)[-1]
    out += theta_derivative(G * m.g_theta_theta * theta_derivative(p))
    return out / G


def double_divergence(uu, m: MetricPatch, metric_terms: bool = True) -> np.ndarray:
    """Double divergence ``nabla_i nabla_j T^{ij}`` of a symmetric 2-tensor.

    Parameters
    ----------
    uu : sequence of ndarray
        Coordinate components ``(T^{rr}, T^{r theta}, T^{theta theta})``.
    m : MetricPatch
    metric_terms : bool
        Include the Christoffel contribution
        ``G^{-1} d_i(G Gamma^i_{jk} T^{jk})``.  Without it the result is the
        coordinate expression ``G^{-1} d_ij(G T^{ij})``, which equals the
        double divergence only when that contribution vanishes (for example
        for constant-speed tangential flow).
    """
    Trr, Trt, Ttt = (np.asarray(t, dtype=float) for t in uu)
    h, G = m.h, m.G
    out = _d_rr(G * Trr, h)
    out += 2.0 * _d_r(theta_derivative(G * Trt), h)
    out += theta_derivative(G * Ttt, order=2)
    if metric_terms:
        gam = 1.0 / m.g_theta_theta  # lower g_{theta theta}
        dgam_r = _d_r(gam, h)
        gamma_r_tt = -0.5 * dgam_r
        gamma_t_rt = 0.5 * dgam_r / gam
        gamma_t_tt = 0.5 * theta_derivative(gam) / gam
        out += _d_r(G * gamma_r_tt * Ttt, h)
        out += theta_derivative(G * (2.0 * gamma_t_rt * Trt + gamma_t_tt * Ttt))
    return out / G


def collar_divergence(ur: np.ndarray, ut: np.ndarray, m: MetricPatch) -> np.ndarray:
    """``G^{-1} d_i(G F^i)`` for coordinate components ``(F^r, F^theta)``."""
    return (_d_r(m.G * ur, m.h) + theta_derivative(m.G * ut)) / m.G


# ---------------------------------------------------------------------------
# Disk <-> collar transfer
# ---------------------------------------------------------------------------

def collar_row_indices(grid: PolarGrid, r0: float) -> np.ndarray:
    """Polar ring indices (0-based) ordered by increasing ``r = 1 - rho``."""
    k_max = int(round(r0 * grid.n_rho))
    if abs(k_max - r0 * grid.n_rho) > 1e-9:
        raise ConfigurationError("collar width must be a multiple of the radial step")
    return grid.n_rho - 1 - np.arange(k_max + 1)


def collar_from_polar(u: PolarField, r0: float):
    """Coordinate velocity ``(u^r, u^theta)`` on the collar and its metric.

    ``u^r = -u_rho`` because ``r`` increases inward, and
    ``u^theta = u_theta / rho`` converts the orthonormal component.
    """
    grid = u.grid
    rows = collar_row_indices(grid, r0)
    rho = grid.rho[rows][:, None]
    ur = -u.data[0][rows]
    ut = u.data[1][rows] / rho
    m = disk_metric(r0, rows.size - 1, grid.n_theta)
    return ur, ut, m


def scalar_to_collar(p: np.ndarray, grid: PolarGrid, r0: float) -> np.ndarray:
    """Restrict ring data ``p`` (shape ``(n_rho, n_theta)``) to collar rows."""
    return np.asarray(p)[collar_row_indices(grid, r0)]
