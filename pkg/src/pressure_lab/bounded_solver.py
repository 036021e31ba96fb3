"""Neumann pressure problem on the unit disk.

Solves ``-Delta p = d_i u^j d_j u^i`` in the disk with ``d_n p = u (x) u : grad n``
on the circle and zero mean.  For the unit disk ``grad n = (I - n n)/rho`` so the
boundary data is ``u_theta^2``.

Discretization
--------------
Unknowns live on the rings of a :class:`~pressure_lab.geometry.PolarGrid`
plus one pole node.  Each node owns a control volume (the boundary ring owns
the half cell ``[1 - h/2, 1]``) and the five-point stencil is the flux
balance over it, so the matrix is symmetric; the Neumann data enters as the
flux through the outer face, which is the symmetric form of a ghost-node
closure.  The resulting system is solved by preconditioned conjugate
gradients on the mean-zero subspace.  The preconditioner inverts the same
operator exactly with an FFT in ``theta`` and one tridiagonal solve in
``rho`` per angular mode, so CG typically stops after one or two steps.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .errors import NumericalFailure, PreconditionError
from .fields import polar_divergence, tangency_defect
from .geometry import PolarField, PolarGrid, polar_radial_derivative, theta_derivative
from .norms import ExponentFit, fit_power_law

SOLVE_TOL = 1e-12
PRECONDITION_TOL = 1e-8


# ---------------------------------------------------------------------------
# Problem data
# ---------------------------------------------------------------------------

@dataclass
class NeumannProblem:
    """Discrete Neumann problem ``-Delta p = rhs``, ``d_n p = neumann_data``.

    Attributes
    ----------
    rhs : ndarray, shape (n_rho, n_theta)
        Source on the rings, after the compatibility shift.
    rhs_pole : float
        Source at the pole node, after the shift.
    neumann_data : ndarray, shape (n_theta,)
        Outward normal derivative on ``rho = 1``.
    A : float
        ``|Omega|^{-1} * boundary integral of the data``; the lift solves
        ``Delta psi = A``.
    shift : float
        Constant added to the source so that the discrete Green identity
        ``sum rhs dV + sum data dS = 0`` holds exactly.
    grid : PolarGrid
    """

    rhs: np.ndarray
    rhs_pole: float
    neumann_data: np.ndarray
    A: float
    shift: float
    grid: PolarGrid

    @classmethod
    def from_data(cls, rhs, neumann_data, grid: PolarGrid, rhs_pole: float | None = None):
        """Build a compatible problem from raw source and boundary samples."""
        rhs = np.asarray(rhs, dtype=float)
        data = np.asarray(neumann_data, dtype=float)
        if rhs.shape != (grid.n_rho, grid.n_theta) or data.shape != (grid.n_theta,):
            raise PreconditionError("source/data shapes do not match the polar grid")
        pole = float(rhs[0].mean()) if rhs_pole is None else float(rhs_pole)
        defect = green_defect(rhs, pole, data, grid)
        shift = -defect / total_area(grid)
        A = grid.boundary_integral(data) / np.pi
        return cls(rhs + shift, pole + shift, data, A, shift, grid)

    def compatibility_defect(self) -> float:
        return green_defect(self.rhs, self.rhs_pole, self.neumann_data, self.grid)


def total_area(grid: PolarGrid) -> float:
    """Sum of all control-volume areas (equals ``pi`` up to round-off)."""
    return float(np.sum(grid.ring_weights()) * grid.n_theta * grid.dtheta + grid.pole_weight)


def green_defect(rhs, rhs_pole, data, grid: PolarGrid) -> float:
    """Discrete ``int rhs + boundary int data``; zero for solvable problems."""
    return grid.integrate(rhs, rhs_pole) + grid.boundary_integral(data)


def _check_velocity(u: PolarField):
    scale = max(1.0, u.sup())
    t = tangency_defect(u)
    if t > PRECONDITION_TOL * scale:
        raise PreconditionError(f"velocity is not tangent to the boundary (|u.n| = {t:.3e})")
    d = float(np.max(np.abs(polar_divergence(u)[:-1])))
    if d > PRECONDITION_TOL * scale * u.grid.n_rho:
        raise PreconditionError(f"velocity is not divergence-free (residual {d:.3e})")


def velocity_gradient(u: PolarField):
    """Cartesian components and their Cartesian derivatives on the rings.

    Returns ``(ux, uy, (dx ux, dy ux, dx uy, dy uy))``.  Radial derivatives
    are second-order differences (one-sided at the first and last ring);
    angular ones are spectral.
    """
    g = u.grid
    ux, uy = u.cartesian_components()
    R, T = g.mesh()
    c, s = np.cos(T), np.sin(T)

    def grad(a):
        a_rho = polar_radial_derivative(a, g.h)
        a_t = theta_derivative(a) / R
        return c * a_rho - s * a_t, s * a_rho + c * a_t

    dxux, dyux = grad(ux)
    dxuy, dyuy = grad(uy)
    return ux, uy, (dxux, dyux, dxuy, dyuy)


def assemble(u: PolarField, check: bool = True) -> NeumannProblem:
    """Source ``d_i u^j d_j u^i`` and boundary data ``u_theta(1, .)^2``.

    Raises
    ------
    PreconditionError
        If ``u`` is not tangent or not divergence-free.
    """
    if check:
        _check_velocity(u)
    _, _, (dxux, dyux, dxuy, dyuy) = velocity_gradient(u)
    rhs = dxux * dxux + 2.0 * dyux * dxuy + dyuy * dyuy
    data = u.data[1, -1] ** 2
    return NeumannProblem.from_data(rhs, data, u.grid)


# ---------------------------------------------------------------------------
# Operator and preconditioner
# ---------------------------------------------------------------------------

class _PolarOperator:
    """Symmetric control-volume discretization of ``-Delta`` with Neumann closure.

    Vectors are ``(pole, rings)`` with rings of shape ``(n_rho, n_theta)``.
    """

    def __init__(self, grid: PolarGrid):
        self.grid = grid
        h, dt = grid.h, grid.dtheta
        rho = grid.rho
        self.face_in = (rho - h / 2) * dt / h        # coupling to ring i-1 (pole for i = 1)
        self.face_out = np.append((rho[:-1] + h / 2) * dt / h, 0.0)
        length = np.full(grid.n_rho, h)
        length[-1] = h / 2
        self.ang = length / (rho * dt)               # angular coupling
        self.pole_coupling = self.face_in[0]          # = dtheta / 2

    def apply(self, pole: float, p: np.ndarray):
        fi, fo = self.face_in[:, None], self.face_out[:, None]
        out = (fi + fo) * p + self.ang[:, None] * (2 * p - np.roll(p, 1, 1) - np.roll(p, -1, 1))
        out[1:] -= fi[1:] * p[:-1]
        out[:-1] -= fo[:-1] * p[1:]
        out[0] -= fi[0] * pole
        pole_out = self.pole_coupling * float(np.sum(pole - p[0]))
        return pole_out, out

    def modal_solve(self, r_pole: float, r: np.ndarray):
        """Exact solve for a compatible right-hand side; the pole is pinned to 0."""
        g = self.grid
        R = sfft.rfft(r, axis=1)
        m = np.arange(R.shape[1])
        lam = 4.0 * np.sin(m * g.dtheta / 2) ** 2
        diag = (self.face_in + self.face_out)[:, None] + self.ang[:, None] * lam[None, :]
        lower = -self.face_in[:, None] * np.ones_like(lam)[None, :]
        upper = -self.face_out[:, None] * np.ones_like(lam)[None, :]
        lower[0] = 0.0  # pole column: absent for m > 0, pinned for m = 0
        X = _thomas(lower, diag, upper, R)
        return 0.0, sfft.irfft(X, n=g.n_theta, axis=1)


def _thomas(lower, diag, upper, rhs):
    """Batched tridiagonal solve along axis 0 (columns are independent systems)."""
    n = diag.shape[0]
    c = np.empty_like(diag)
    d = np.empty_like(rhs)
    c[0] = upper[0] / diag[0]
    d[0] = rhs[0] / diag[0]
    for i in range(1, n):
        denom = diag[i] - lower[i] * c[i - 1]
        c[i] = upper[i] / denom
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / denom
    x = np.empty_like(rhs)
    x[-1] = d[-1]
    for i in range(n - 2, -1, -1):
        x[i] = d[i] - c[i] * x[i + 1]
    return x


def _flatten(pole, p):
    return np.concatenate([[pole], p.ravel()])


def _split(v, grid):
    return float(v[0]), v[1:].reshape(grid.n_rho, grid.n_theta)


# ---------------------------------------------------------------------------
# Solve
# ---------------------------------------------------------------------------

@dataclass
class PressureSolution:
    """Zero-mean discrete pressure on the disk.

    ``solve_residual`` is the relative residual of the linear system;
    ``weak_residual`` is filled in by :func:`weak_form_residual`.
    """

    p: np.ndarray
    pole: float
    grid: PolarGrid
    solve_residual: float
    iterations: int
    history: list = field(default_factory=list)
    weak_residual: float | None = None

    @property
    def mean(self) -> float:
        return self.grid.integrate(self.p, self.pole) / total_area(self.grid)

    def field(self) -> PolarField:
        return PolarField(self.p[None], self.grid)


def solve(problem: NeumannProblem, tol: float = SOLVE_TOL, max_iter: int = 50) -> PressureSolution:
    """Preconditioned CG on the mean-zero subspace.

    Raises
    ------
    PreconditionError
        If the problem violates the discrete compatibility condition.
    NumericalFailure
        If CG does not reach ``tol`` within ``max_iter`` steps; the residual
        history is attached.
    """
    g = problem.grid
    scale = max(1.0, float(np.max(np.abs(problem.rhs))), float(np.max(np.abs(problem.neumann_data))))
    if abs(problem.compatibility_defect()) > 1e-10 * scale:
        raise PreconditionError("problem is not compatible; build it with NeumannProblem.from_data")
    op = _PolarOperator(g)
    W = g.ring_weights()[:, None] * g.dtheta
    b_rings = W * problem.rhs
    b_rings[-1] += g.dtheta * problem.neumann_data
    b = _flatten(g.pole_weight * problem.rhs_pole, b_rings)
    b -= b.mean()

    def A(v):
        return _flatten(*op.apply(*_split(v, g)))

    def M(v):
        v = v - v.mean()
        z = _flatten(*op.modal_solve(*_split(v, g)))
        return z - z.mean()

    bnorm = float(np.linalg.norm(b))
    x = np.zeros_like(b)
    history = []
    if bnorm == 0.0:
        return PressureSolution(np.zeros((g.n_rho, g.n_theta)), 0.0, g, 0.0, 0, history)
    r = b.copy()
    z = M(r)
    d = z.copy()
    rz = float(r @ z)
    it = 0
    for it in range(1, max_iter + 1):
        Ad = A(d)
        alpha = rz / float(d @ Ad)
        x += alpha * d
        r -= alpha * Ad
        res = float(np.linalg.norm(r)) / bnorm
        history.append(res)
        if res <= tol:
            break
        z = M(r)
        rz_new = float(r @ z)
        d = z + (rz_new / rz) * d
        rz = rz_new
    else:
        raise NumericalFailure(f"CG did not converge in {max_iter} steps", history)
    pole, p = _split(x, g)
    mean = (g.integrate(p, pole)) / total_area(g)
    return PressureSolution(p - mean, pole - mean, g, history[-1], it, history)


def solve_disk_pressure(u: PolarField) -> tuple[PressureSolution, NeumannProblem]:
    """Assemble and solve in one step."""
    problem = assemble(u)
    return solve(problem), problem


# ---------------------------------------------------------------------------
# Boundary lift
# ---------------------------------------------------------------------------

def boundary_lift(u: PolarField | None = None, problem: NeumannProblem | None = None) -> PressureSolution:
    """Zero-mean ``psi`` with ``Delta psi = A`` in the disk, ``d_n psi`` = data.

    ``p - psi`` then solves the homogeneous Neumann problem with source
    ``rhs + A``.
    """
    if problem is None:
        problem = assemble(u)
    g = problem.grid
    lift = NeumannProblem.from_data(np.full((g.n_rho, g.n_theta), -problem.A),
                                    problem.neumann_data, g, rhs_pole=-problem.A)
    return solve(lift)


def homogeneous_part(problem: NeumannProblem) -> PressureSolution:
    """Solution of ``-Delta q = rhs + A``, ``d_n q = 0``."""
    g = problem.grid
    return solve(NeumannProblem.from_data(problem.rhs + problem.A, np.zeros(g.n_theta), g,
                                          rhs_pole=problem.rhs_pole + problem.A))


def normal_derivative(values: np.ndarray, grid: PolarGrid) -> np.ndarray:
    """Third-order one-sided ``d_rho`` on the boundary ring.

    One order above the solver so the stencil's own truncation does not
    mask the ``O(h^2)`` discretization error being measured.
    """
    v = np.asarray(values)
    return (11 * v[-1] - 18 * v[-2] + 9 * v[-3] - 2 * v[-4]) / (6 * grid.h)


# ---------------------------------------------------------------------------
# Weak formulation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TestFunction:
    """Smooth ``phi`` with analytic derivatives up to order two."""

    name: str
    value: callable
    grad: callable
    hess: callable  # returns (phi_xx, phi_xy, phi_yy)

    def c2_norm(self, x, y) -> float:
        vals = [self.value(x, y), *self.grad(x, y), *self.hess(x, y)]
        return max(float(np.max(np.abs(np.broadcast_to(v, np.shape(x))))) for v in vals)


def _dpow(x, a, k):
    """``d^k/dx^k x^a``."""
    if k > a:
        return np.zeros_like(x)
    coef = 1.0
    for i in range(k):
        coef *= a - i
    return coef * x ** (a - k)


def _monomial(a: int, b: int) -> TestFunction:
    return TestFunction(
        f"x^{a} y^{b}",
        lambda x, y: x ** a * y ** b * np.ones_like(x),
        lambda x, y: (_dpow(x, a, 1) * y ** b, x ** a * _dpow(y, b, 1)),
        lambda x, y: (_dpow(x, a, 2) * y ** b, _dpow(x, a, 1) * _dpow(y, b, 1),
                      x ** a * _dpow(y, b, 2)))


def _plane_wave(k1: float, k2: float, phase: float) -> TestFunction:
    def v(x, y):
        return np.cos(k1 * x + k2 * y + phase)

    def g(x, y):
        s = -np.sin(k1 * x + k2 * y + phase)
        return k1 * s, k2 * s

    def hs(x, y):
        c = -np.cos(k1 * x + k2 * y + phase)
        return k1 * k1 * c, k1 * k2 * c, k2 * k2 * c

    return TestFunction(f"cos({k1:g}x+{k2:g}y+{phase:g})", v, g, hs)


def _radial_trig(m: int, k: float) -> TestFunction:
    """``phi = cos(k rho^2) * Re (x + i y)^m``, smooth on the disk."""
    def parts(x, y):
        z = (x + 1j * y) ** m
        dz = m * (x + 1j * y) ** (m - 1) if m >= 1 else 0.0 * x
        d2z = m * (m - 1) * (x + 1j * y) ** (m - 2) if m >= 2 else 0.0 * x
        r2 = x * x + y * y
        return z, dz, d2z, r2

    def v(x, y):
        z, _, _, r2 = parts(x, y)
        return np.cos(k * r2) * z.real

    def g(x, y):
        z, dz, _, r2 = parts(x, y)
        w, wr = np.cos(k * r2), -np.sin(k * r2) * k  # w' w.r.t. r2
        # d/dx Re z = Re dz, d/dy Re z = Re(i dz) = -Im dz
        gx = 2 * x * wr * z.real + w * dz.real
        gy = 2 * y * wr * z.real - w * dz.imag
        return gx, gy

    def hs(x, y):
        z, dz, d2z, r2 = parts(x, y)
        w = np.cos(k * r2)
        w1 = -np.sin(k * r2) * k
        w2 = -np.cos(k * r2) * k * k
        zr, zx, zy = z.real, dz.real, -dz.imag
        zxx, zxy, zyy = d2z.real, -d2z.imag, -d2z.real
        hxx = (2 * w1 + 4 * x * x * w2) * zr + 4 * x * w1 * zx + w * zxx
        hyy = (2 * w1 + 4 * y * y * w2) * zr + 4 * y * w1 * zy + w * zyy
        hxy = 4 * x * y * w2 * zr + 2 * x * w1 * zy + 2 * y * w1 * zx + w * zxy
        return hxx, hxy, hyy

    return TestFunction(f"cos({k:g} rho^2) Re z^{m}", v, g, hs)


def default_battery() -> list[TestFunction]:
    """Twenty test functions: low-degree monomials, plane waves and radial-trig products."""
    mons = [_monomial(a, b) for a, b in
            [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (3, 0), (2, 1), (1, 2), (0, 3)]]
    waves = [_plane_wave(1.0, 0.0, 0.3), _plane_wave(0.0, 2.0, 1.1),
             _plane_wave(1.5, 1.0, 0.0), _plane_wave(-2.0, 1.5, 2.0)]
    radial = [_radial_trig(0, 1.0), _radial_trig(1, 2.0), _radial_trig(2, 1.5),
              _radial_trig(3, 0.5), _radial_trig(0, 3.0), _radial_trig(4, 1.0)]
    return mons + waves + radial


def x_plus_y_squared() -> TestFunction:
    return TestFunction(
        "x^2 + y^2",
        lambda x, y: x * x + y * y,
        lambda x, y: (2 * x, 2 * y),
        lambda x, y: (2.0 + 0 * x, 0 * x, 2.0 + 0 * x))


def weak_form_residual(u: PolarField, p: PressureSolution, battery=None,
                       per_function: bool = False):
    """``max_phi |-int p Lap phi + bdry int p d_n phi - int u(x)u : H phi| / ||phi||_C2``.

    Area integrals use the fourth-order rule of
    :meth:`PolarGrid.integrate_smooth`, the boundary integral the trapezoid
    rule; ``phi`` derivatives are analytic.
    """
    battery = battery if battery is not None else default_battery()
    g = p.grid
    X, Y = g.cartesian()
    ux, uy = u.cartesian_components()
    xb, yb = np.cos(g.theta), np.sin(g.theta)
    out = {}
    for phi in battery:
        hxx, hxy, hyy = (np.broadcast_to(a, X.shape) for a in phi.hess(X, Y))
        lap = hxx + hyy
        term_p = -g.integrate_smooth(p.p * lap)
        gx, gy = phi.grad(xb, yb)
        dn = np.broadcast_to(gx, xb.shape) * xb + np.broadcast_to(gy, yb.shape) * yb
        term_b = g.boundary_integral(p.p[-1] * dn)
        quad = ux * ux * hxx + 2 * ux * uy * hxy + uy * uy * hyy
        term_u = g.integrate_smooth(quad)
        norm = phi.c2_norm(X, Y)
        out[phi.name] = abs(term_p + term_b - term_u) / norm if norm > 0 else 0.0
    worst = max(out.values()) if out else 0.0
    p.weak_residual = worst
    return (worst, out) if per_function else worst


# ---------------------------------------------------------------------------
# Near-boundary Zygmund profile
# ---------------------------------------------------------------------------

def local_zygmund_profile(p, grid: PolarGrid | None = None, r0: float = 0.5,
                          fit_range: tuple | None = None):
    """Second-difference suprema of ``p`` along radial lines in the collar.

    Triples ``rho - s, rho, rho + s`` must lie in ``[1 - r0, 1 - 2h]`` (the
    outermost two cells are excluded).  Offsets ``s`` are dyadic multiples
    of the radial step.

    Returns
    -------
    profile : dict
        ``s -> (sup |delta^2_s p|, sup |delta^2_s p| / s)``.
    fit : ExponentFit
        Slope of ``log sup |delta^2_s p|`` against ``log s`` over
        ``s in [4h, r0/4]`` (expected ``2 gamma`` for a ``C^{2 gamma}`` pressure).
    """
    if isinstance(p, PressureSolution):
        grid, vals = p.grid, p.p
    elif isinstance(p, PolarField):
        grid, vals = p.grid, p.data[0]
    else:
        vals = np.asarray(p)
    h = grid.h
    hi = grid.n_rho - 1 - 2            # ring index of rho = 1 - 2h
    lo = grid.n_rho - 1 - int(round(r0 / h))
    lo = max(lo, 0)
    band = vals[lo:hi + 1]
    profile = {}
    k = 1
    while 2 * k < band.shape[0]:
        d2 = band[2 * k:] + band[:-2 * k] - 2 * band[k:-k]
        s = k * h
        sup = float(np.max(np.abs(d2)))
        profile[s] = (sup, sup / s)
        k *= 2
    lo_s, hi_s = fit_range or (4 * h, r0 / 4)
    pts = [(s, v[0]) for s, v in profile.items() if lo_s - 1e-12 <= s <= hi_s + 1e-12]
    fit = fit_power_law([s for s, _ in pts], [v for _, v in pts])
    return profile, fit
