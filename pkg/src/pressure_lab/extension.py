"""Reflection of collar data across the boundary ``r = 0``.

The collar ``[0, r0] x S^1`` is doubled to ``[-r0, r0] x S^1`` by

    u^r(-r) = -u^r(r),   u^theta(-r) = u^theta(r),   p(-r) = p(r),
    g^{theta theta}(-r) = g^{theta theta}(r),   G(-r) = G(r).

The reflected grid is node-centered and shares the row ``r = 0``.  The
diagnostics here check that the reflected velocity stays weakly
divergence-free and that the fluxes entering the extended pressure equation
have no jump across ``r = 0``.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .errors import PreconditionError
from .geometry import (MetricPatch, double_divergence, ellipticity_constant,
                       laplace_beltrami, theta_derivative)

TANGENCY_TOL = 1e-10


def _even(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return np.concatenate([a[:0:-1], a], axis=0)


def _odd(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return np.concatenate([-a[:0:-1], a], axis=0)


@dataclass(frozen=True)
class ReflectedCollar:
    """Collar data on ``r in [-r0, r0]``; row ``K = len(r) // 2`` is ``r = 0``."""

    r: np.ndarray
    theta: np.ndarray
    ur: np.ndarray
    ut: np.ndarray
    p: np.ndarray | None
    g_theta_theta: np.ndarray
    G: np.ndarray

    @property
    def K(self) -> int:
        return self.r.size // 2

    @property
    def h(self) -> float:
        return float(self.r[1] - self.r[0])

    @property
    def dtheta(self) -> float:
        return 2.0 * np.pi / self.theta.size

    def metric(self) -> MetricPatch:
        """The reflected metric as a :class:`MetricPatch` over ``[-r0, r0]``."""
        m = MetricPatch(self.r, self.theta, self.g_theta_theta, self.G, 1.0 / self.G, 0.0,
                        float(self.r[-1]))
        return replace(m, c=ellipticity_constant(m))


def reflect(ur, ut, m: MetricPatch, p=None, check: bool = True,
            tol: float = TANGENCY_TOL) -> ReflectedCollar:
    """Odd/even extension of collar data across ``r = 0``.

    Parameters
    ----------
    ur, ut : ndarray, shape (n_r + 1, n_theta)
        Coordinate components ``u^r``, ``u^theta`` on the collar rows of ``m``.
    m : MetricPatch
    p : ndarray, optional
        Pressure samples on the same rows.
    check : bool
        Enforce tangency.  With ``check=False`` the raw ``u^r`` row at
        ``r = 0`` is kept, which is how deliberately non-compliant inputs are
        built for the detectors.

    Raises
    ------
    PreconditionError
        If ``|u^r(0, theta)|`` exceeds ``tol * max(1, ||u||)``: the odd
        extension of a non-tangent field carries a sheet of divergence on
        ``r = 0``.
    """
    ur = np.asarray(ur, dtype=float)
    ut = np.asarray(ut, dtype=float)
    if ur.shape != m.shape or ut.shape != m.shape:
        raise PreconditionError("velocity samples do not match the collar grid")
    if check:
        scale = max(1.0, float(np.max(np.abs(ur))), float(np.max(np.abs(ut))))
        defect = float(np.max(np.abs(ur[0])))
        if defect > tol * scale:
            raise PreconditionError(
                "velocity must be tangent to the boundary (u^r = 0 on r = 0) for its "
                f"reflection to stay divergence-free; max |u^r(0)| = {defect:.3e}")
    ur_ext = _odd(ur)
    K = ur.shape[0] - 1
    if check:
        ur_ext[K] = 0.0
    else:
        ur_ext[K] = ur[0]
    r = np.concatenate([-m.r[:0:-1], m.r])
    return ReflectedCollar(r, m.theta, ur_ext, _even(ut),
                           None if p is None else _even(p),
                           _even(m.g_theta_theta), _even(m.G))


def mirror(rc: ReflectedCollar) -> ReflectedCollar:
    """Apply ``r -> -r`` with the field parities; compliant data is a fixed point."""
    flip = lambda a: None if a is None else a[::-1]
    return ReflectedCollar(rc.r, rc.theta, -rc.ur[::-1], rc.ut[::-1], flip(rc.p),
                           rc.g_theta_theta[::-1], rc.G[::-1])


def restrict(rc: ReflectedCollar):
    """Samples on ``r >= 0``: ``(u^r, u^theta, p)``."""
    K = rc.K
    return rc.ur[K:], rc.ut[K:], None if rc.p is None else rc.p[K:]


# ---------------------------------------------------------------------------
# Differences on the reflected grid
# ---------------------------------------------------------------------------

def _centered_r(a: np.ndarray, h: float) -> np.ndarray:
    """Centered ``d/dr`` on interior rows; edge rows one-sided (second order)."""
    d = np.empty_like(a)
    d[1:-1] = (a[2:] - a[:-2]) / (2 * h)
    d[0] = (-3 * a[0] + 4 * a[1] - a[2]) / (2 * h)
    d[-1] = (3 * a[-1] - 4 * a[-2] + a[-3]) / (2 * h)
    return d


@lru_cache(maxsize=None)
def _fd_weights(offsets: tuple) -> np.ndarray:
    """First-derivative weights on integer ``offsets`` (unit spacing)."""
    k = len(offsets)
    V = np.vander(np.asarray(offsets, dtype=float), k, increasing=True).T
    rhs = np.zeros(k)
    rhs[1] = 1.0
    return np.linalg.solve(V, rhs)


def _high_order_r(a: np.ndarray, h: float, width: int = 7) -> np.ndarray:
    """Sixth-order ``d/dr`` on one smooth piece; stencils shift inward at the ends."""
    L = a.shape[0]
    half = width // 2
    d = np.empty_like(a)
    for i in range(L):
        start = min(max(i - half, 0), L - width)
        offs = tuple(range(start - i, start - i + width))
        d[i] = np.tensordot(_fd_weights(offs), a[start:start + width], axes=(0, 0))
    return d / h


def _piecewise_r(a: np.ndarray, h: float, K: int) -> np.ndarray:
    """``d/dr`` computed separately on ``r <= 0`` and ``r >= 0``.

    No stencil crosses ``r = 0``, so one-sided traces of the result see
    only data from their own side.  Row ``K`` keeps the ``r >= 0`` value.
    """
    d = np.empty_like(a, dtype=float)
    d[:K + 1] = _high_order_r(a[:K + 1], h)
    d[K:] = _high_order_r(a[K:], h)
    return d


# ---------------------------------------------------------------------------
# Weak divergence
# ---------------------------------------------------------------------------

def _mollifier(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    ti = t[inside]
    out[inside] = np.exp(-1.0 / (1.0 - ti * ti))
    return out


def _mollifier_deriv(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    ti = t[inside]
    out[inside] = np.exp(-1.0 / (1.0 - ti * ti)) * (-2.0 * ti / (1.0 - ti * ti) ** 2)
    return out


@dataclass(frozen=True)
class CollarBump:
    """``phi(r, theta) = q(s) m(s) m(t)`` with ``s = (r - center)/width``,
    ``t = wrap(theta - theta_c)/theta_width``, ``m`` the standard mollifier and
    ``q(s) = 1 + s/2``.
    """

    center: float
    width: float
    theta_c: float
    theta_width: float = 1.0

    def _st(self, r, theta):
        s = (np.asarray(r)[:, None] - self.center) / self.width
        dth = np.angle(np.exp(1j * (np.asarray(theta)[None, :] - self.theta_c)))
        return s, dth / self.theta_width

    def value(self, r, theta):
        s, t = self._st(r, theta)
        return (1 + s / 2) * _mollifier(s) * _mollifier(t)

    def grad(self, r, theta):
        s, t = self._st(r, theta)
        ms, mt = _mollifier(s), _mollifier(t)
        d_r = (0.5 * ms + (1 + s / 2) * _mollifier_deriv(s)) * mt / self.width
        d_t = (1 + s / 2) * ms * _mollifier_deriv(t) / self.theta_width
        return d_r, d_t


def default_bumps(r0: float) -> list[CollarBump]:
    """Twelve bumps: three widths times four centers, each straddling ``r = 0``."""
    out = []
    for i, w in enumerate((0.2 * r0, 0.4 * r0, 0.6 * r0)):
        for j, c in enumerate((-w / 2, -w / 6, w / 6, w / 2)):
            out.append(CollarBump(c, w, theta_c=0.7 * (4 * i + j), theta_width=1.0))
    return out


# Gregory end weights, exact for polynomials of degree <= 5 on a half line.
_GREGORY = np.array([19087, 84199, 37738, 75242, 55031, 61343]) / 60480.0


def _kink_weights(n_rows: int, K: int) -> np.ndarray:
    """Row weights (units of ``h``) for integrands smooth on each side of ``r = 0``.

    Uniform weights, corrected on both sides of row ``K`` with Gregory end
    weights.  Integrands vanishing near ``r = +-r0`` need no other correction.
    """
    w = np.ones(n_rows)
    m = _GREGORY.size
    w[K + 1:K + m] = _GREGORY[1:]
    w[K - m + 1:K] = _GREGORY[1:][::-1]
    w[K] = 2 * _GREGORY[0]
    return w


def weak_divergence_residual(rc: ReflectedCollar, battery=None, pairing: str = "discrete",
                             per_bump: bool = False):
    """``max_phi |sum G u . grad phi dr dtheta| / ||phi||_C1``.

    Parameters
    ----------
    pairing : {"discrete", "analytic"}
        ``"discrete"`` differentiates the sampled ``phi`` with the same
        centered stencil (and spectral ``theta`` derivative) used for the
        discrete divergence, so by summation by parts the residual is the
        ``phi``-weighted discrete collar divergence: the O(h^2) truncation
        error of that stencil for compliant data, a sheet of size
        ``2 int phi G u^r(0)`` for non-tangent data.
        ``"analytic"`` uses exact gradients of ``phi`` and a quadrature with
        Gregory corrections on both sides of ``r = 0``, where the reflected
        integrand has a kink.  For exactly sampled fields the residual is
        then O(h^6); for differenced fields it contains their O(h^2)
        truncation error.
    """
    battery = battery if battery is not None else default_bumps(float(rc.r[-1]))
    h, dth = rc.h, rc.dtheta
    w = np.ones(rc.r.size) if pairing == "discrete" else _kink_weights(rc.r.size, rc.K)
    out = []
    for phi in battery:
        val = phi.value(rc.r, rc.theta)
        if pairing == "discrete":
            d_r = _centered_r(val, h)
            d_t = theta_derivative(val)
        elif pairing == "analytic":
            d_r, d_t = phi.grad(rc.r, rc.theta)
        else:
            raise ValueError(f"unknown pairing {pairing!r}")
        total = float(w @ np.sum(rc.G * (rc.ur * d_r + rc.ut * d_t), axis=1)) * h * dth
        ar, at = phi.grad(rc.r, rc.theta)
        norm = max(float(np.max(np.abs(val))), float(np.max(np.abs(ar))),
                   float(np.max(np.abs(at))))
        out.append(abs(total) / norm)
    worst = max(out) if out else 0.0
    return (worst, out) if per_bump else worst


def sheet_divergence(rc: ReflectedCollar, phi: CollarBump) -> float:
    """Closed-form pairing of a divergence sheet on ``r = 0``.

    For the odd extension of a field with trace ``u^r(0+) != 0`` the
    distributional divergence tested against ``phi`` is
    ``-2 int phi(0, theta) G(0, theta) u^r(0+, theta) dtheta``.
    """
    plus, _ = one_sided_traces(rc.ur, rc.K)
    val0 = phi.value(np.array([0.0]), rc.theta)[0]
    return float(-2.0 * np.sum(val0 * rc.G[rc.K] * plus[0]) * rc.dtheta)


# ---------------------------------------------------------------------------
# Jump diagnostic
# ---------------------------------------------------------------------------

# Lagrange weights extrapolating to 0 from nodes 1..6 (degree-5 polynomial).
_EXTRAP = np.array([6.0, -15.0, 20.0, -15.0, 6.0, -1.0])


def one_sided_traces(F: np.ndarray, K: int):
    """Traces ``F(0+)`` and ``F(0-)`` extrapolated from rows ``+-h..+-6h``."""
    F = np.asarray(F, dtype=float)
    if F.ndim == 2:
        F = F[None]
    plus = np.tensordot(_EXTRAP, F[:, K + 1:K + 7], axes=(0, 1))
    minus = np.tensordot(_EXTRAP, F[:, K - 1:K - 7:-1], axes=(0, 1))
    return plus, minus


def jump_diagnostic(F: np.ndarray, rc: ReflectedCollar | None = None, K: int | None = None):
    """Per-``theta`` jump ``F(0+) - F(0-)`` of each component.

    ``F`` has shape ``(components, 2K+1, n_theta)`` (or one component
    without the leading axis).  Traces exclude the shared row ``r = 0`` and
    are degree-5 one-sided extrapolations, so a smooth field gives a jump of
    order ``(k h)^6`` and a discontinuity of height ``J`` gives ``J``.
    """
    K = rc.K if rc is not None else K
    plus, minus = one_sided_traces(F, K)
    return plus - minus


def advective_flux(rc: ReflectedCollar) -> np.ndarray:
    """``G u^j d_j u^i`` on the reflected grid, components ``(r, theta)``.

    Radial derivatives are taken separately on each side of ``r = 0``.
    """
    out = []
    for comp in (rc.ur, rc.ut):
        d_r = _piecewise_r(comp, rc.h, rc.K)
        out.append(rc.G * (rc.ur * d_r + rc.ut * theta_derivative(comp)))
    return np.stack(out)


def pressure_flux(rc: ReflectedCollar) -> np.ndarray:
    """``G g^{ij} d_j p`` on the reflected grid, components ``(r, theta)``.

    Radial derivatives are taken separately on each side of ``r = 0``.
    """
    if rc.p is None:
        raise PreconditionError("reflected collar carries no pressure")
    return np.stack([rc.G * _piecewise_r(rc.p, rc.h, rc.K),
                     rc.G * rc.g_theta_theta * theta_derivative(rc.p)])


def jump_profile_rows(jumps: np.ndarray, theta: np.ndarray):
    """CSV rows ``(theta, component, jump)``."""
    jumps = np.atleast_2d(jumps)
    return [(float(t), c, float(jumps[c, j])) for c in range(jumps.shape[0])
            for j, t in enumerate(theta)]


# ---------------------------------------------------------------------------
# Metric regularity and the extended equation
# ---------------------------------------------------------------------------

def metric_lipschitz(rc: ReflectedCollar) -> dict:
    """Regularity of the reflected ``g^{theta theta}`` in ``r``.

    Returns the largest first-difference quotient (Lipschitz constant across
    ``r = 0``) and the largest second-difference quotient on rows away from
    ``r = 0``, with the analytic bounds ``2 / (1 - r0)^3`` and
    ``6 / (1 - r0)^4`` of ``(1 - |r|)^{-2}``.
    """
    g, h, K = rc.g_theta_theta, rc.h, rc.K
    r0 = float(rc.r[-1])
    lip = float(np.max(np.abs(np.diff(g, axis=0)))) / h
    d2 = (g[2:] - 2 * g[1:-1] + g[:-2]) / h ** 2
    rows = np.abs(np.arange(1, g.shape[0] - 1) - K) >= 1
    second = float(np.max(np.abs(d2[rows])))
    return {"lipschitz": lip, "lipschitz_bound": 2.0 / (1.0 - r0) ** 3,
            "second_derivative": second, "second_derivative_bound": 6.0 / (1.0 - r0) ** 4}


def equation_residual(ur, ut, p, m: MetricPatch, metric_terms: bool = True) -> np.ndarray:
    """``d_i(g^{ij} G d_j p) + G div div(u (x) u)`` on a collar patch."""
    lap = laplace_beltrami(p, m)
    dd = double_divergence((ur * ur, ur * ut, ut * ut), m, metric_terms=metric_terms)
    return m.G * (lap + dd)


def extended_equation_residual(rc: ReflectedCollar, ur, ut, p, m: MetricPatch):
    """Compare the extended-equation residual with the collar residual.

    Returns ``(reflected, original, mismatch)`` where ``mismatch`` is the
    maximum difference over rows ``2..n_r-2`` and their mirror images.  On
    those rows every nested stencil is centered in both computations; the
    two rows next to ``r = 0`` and ``r = r0`` see one-sided differences in
    the unreflected collar.
    """
    if rc.p is None:
        raise PreconditionError("reflected collar carries no pressure")
    ext = equation_residual(rc.ur, rc.ut, rc.p, rc.metric())
    orig = equation_residual(ur, ut, p, m)
    K = rc.K
    n = orig.shape[0]
    rows = np.arange(2, n - 2)
    pos = ext[K + rows]
    neg = ext[K - rows]
    mismatch = max(float(np.max(np.abs(pos - orig[rows]))), float(np.max(np.abs(neg - orig[rows]))))
    return ext, orig, mismatch
