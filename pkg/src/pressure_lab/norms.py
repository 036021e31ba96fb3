"""Estimators for Hoelder, Hoelder-Zygmund, second-difference and
log-Lipschitz norms, and least-squares decay-exponent fits.

All difference quotients use offsets ``h`` that are dyadic multiples of
the grid step, ``h <= extent/4``, taken along each coordinate axis.  Vector
fields are measured with the maximum over components.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFitError
from .spectral_core import DyadicPartition, GridField, block_sups


@dataclass(frozen=True)
class BlockProfile:
    """Dyadic levels and the sup norms of the corresponding blocks."""

    levels: tuple
    sup_norms: tuple

    def __post_init__(self):
        levels = tuple(int(N) for N in self.levels)
        sups = tuple(float(s) for s in self.sup_norms)
        if len(levels) != len(sups):
            raise ValueError("levels and sup_norms must have equal length")
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise ValueError("levels must be strictly increasing")
        if any(s < 0 for s in sups):
            raise ValueError("sup norms must be non-negative")
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "sup_norms", sups)

    def as_dict(self) -> dict:
        return dict(zip(self.levels, self.sup_norms))

    def rows(self):
        """CSV rows ``(level, sup_norm)``."""
        return list(zip(self.levels, self.sup_norms))


@dataclass(frozen=True)
class ExponentFit:
    """Least-squares line ``log2 sup = slope * log2 N + intercept``.

    ``exact`` marks the degenerate case where every error vanished to
    round-off, e.g. an exact inverse; slope is then ``-inf``.
    """

    slope: float
    intercept: float
    r_squared: float
    level_range: tuple
    n_points: int = 0
    exact: bool = False

    def as_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "level_range": list(self.level_range),
            "n_points": self.n_points,
            "exact": self.exact,
        }


def block_profile(f: GridField, part: DyadicPartition) -> BlockProfile:
    """Sup norms of all resolvable Littlewood-Paley blocks of ``f``."""
    levels = part.resolvable_levels(f.n)
    return BlockProfile(tuple(levels), tuple(block_sups(f, levels)))


def zygmund_norm(f: GridField, s: float, part: DyadicPartition,
                 profile: BlockProfile | None = None) -> float:
    """Dyadic Hoelder-Zygmund norm ``max_N N^s ||f_N||_inf``.

    Parameters
    ----------
    f : GridField
    s : float
        Regularity index in ``[-2, 2]``.
    part : DyadicPartition
    profile : BlockProfile, optional
        Precomputed block profile of ``f`` to avoid recomputation.
    """
    if not -2.0 <= s <= 2.0:
        raise ValueError(f"s must lie in [-2, 2]; got {s}")
    prof = profile if profile is not None else block_profile(f, part)
    if not prof.levels:
        return 0.0
    return max(N ** s * sup for N, sup in zip(prof.levels, prof.sup_norms))


# ---------------------------------------------------------------------------
# Difference quotients
# ---------------------------------------------------------------------------

def dyadic_offsets(f: GridField) -> list[int]:
    """Offsets in grid steps: ``1, 2, 4, ...`` with ``h <= extent/4``."""
    out, k = [], 1
    while k <= f.n // 4:
        out.append(k)
        k *= 2
    return out


def _shift_pair(a: np.ndarray, k: int, axis: int, periodic: bool):
    """Return ``(a(x+k), a(x))`` restricted to valid positions along ``axis``."""
    if periodic:
        return np.roll(a, -k, axis=axis), a
    n = a.shape[axis]
    hi = [slice(None)] * a.ndim
    lo = [slice(None)] * a.ndim
    hi[axis] = slice(k, n)
    lo[axis] = slice(0, n - k)
    return a[tuple(hi)], a[tuple(lo)]


def first_difference_sup(f: GridField, k: int) -> float:
    """``max_x max_axis |f(x + k e_axis) - f(x)|``."""
    best = 0.0
    for axis in range(1, f.dim + 1):
        plus, base = _shift_pair(f.data, k, axis, f.periodic)
        if plus.size:
            best = max(best, float(np.max(np.abs(plus - base))))
    return best


def second_difference_sup(f: GridField, k: int) -> float:
    """``max_x max_axis |f(x+h) + f(x-h) - 2 f(x)|`` with ``h = k`` steps."""
    a = f.data
    best = 0.0
    for axis in range(1, f.dim + 1):
        if f.periodic:
            d2 = np.roll(a, -k, axis=axis) + np.roll(a, k, axis=axis) - 2.0 * a
        else:
            n = a.shape[axis]
            if 2 * k >= n:
                continue
            sl = lambda start, stop: tuple(
                slice(start, stop) if ax == axis else slice(None) for ax in range(a.ndim))
            d2 = a[sl(2 * k, n)] + a[sl(0, n - 2 * k)] - 2.0 * a[sl(k, n - k)]
        if d2.size:
            best = max(best, float(np.max(np.abs(d2))))
    return best


def second_difference_norm(f: GridField) -> tuple[float, dict]:
    """Zygmund norm via second differences.

    Returns
    -------
    value : float
        ``||f||_inf + sup_h sup_x |f(x+h)+f(x-h)-2f(x)| / h``.
    profile : dict
        Maps the physical offset ``h`` to the per-``h`` supremum of the
        quotient.
    """
    profile = {}
    for k in dyadic_offsets(f):
        h = k * f.spacing
        profile[h] = second_difference_sup(f, k) / h
    return f.sup() + (max(profile.values()) if profile else 0.0), profile


def loglip_norm(f: GridField) -> float:
    """Log-Lipschitz norm ``||f||_inf + sup |f(x+h)-f(x)| / (h (1 + |log h|))``."""
    best = 0.0
    for k in dyadic_offsets(f):
        h = k * f.spacing
        best = max(best, first_difference_sup(f, k) / (h * (1.0 + abs(math.log(h)))))
    return f.sup() + best


def holder_norm(f: GridField, gamma: float) -> float:
    """Hoelder norm ``||f||_inf + sup_h ||f(.+h) - f||_inf / h^gamma``."""
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must lie in (0, 1]; got {gamma}")
    best = 0.0
    for k in dyadic_offsets(f):
        h = k * f.spacing
        best = max(best, first_difference_sup(f, k) / h ** gamma)
    return f.sup() + best


# ---------------------------------------------------------------------------
# Fits
# ---------------------------------------------------------------------------

def default_fit_range(J_max: int) -> tuple[int, int]:
    """Default fit window ``[2^3, 2^(J_max-2)]``."""
    return (8, 2 ** (J_max - 2))


def _line_fit(x: np.ndarray, y: np.ndarray):
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum((y - (slope * x + intercept)) ** 2))
    r2 = 1.0 if ss_tot <= 1e-30 else max(0.0, min(1.0, 1.0 - ss_res / ss_tot))
    return float(slope), float(intercept), r2


def fit_decay_exponent(profile: BlockProfile, range: tuple | None = None,
                       min_levels: int = 4) -> ExponentFit:
    """Fit ``log2 sup_norm`` against ``log2 N`` over ``range`` (inclusive).

    Raises
    ------
    DegenerateFitError
        Fewer than ``min_levels`` levels in range or a zero block in range.
    """
    if range is None:
        J_max = int(round(math.log2(max(profile.levels))))
        range = default_fit_range(J_max)
    lo, hi = range
    pts = [(N, s) for N, s in zip(profile.levels, profile.sup_norms) if lo <= N <= hi]
    if len(pts) < min_levels:
        raise DegenerateFitError(
            f"need >= {min_levels} levels in [{lo}, {hi}], found {len(pts)}")
    if any(s <= 0 for _, s in pts):
        raise DegenerateFitError("zero block inside the fit range")
    x = np.log2([N for N, _ in pts])
    y = np.log2([s for _, s in pts])
    slope, intercept, r2 = _line_fit(x, y)
    return ExponentFit(slope, intercept, r2, (pts[0][0], pts[-1][0]), len(pts))


def fit_log_growth(profile: dict) -> tuple[float, float]:
    """Fit ``quotient(h) = a |log h| + b``; returns ``(a, b)``.

    Used to measure the logarithmic blow-up of second-difference quotients
    of log-Lipschitz functions.
    """
    hs = np.array(sorted(profile))
    q = np.array([profile[h] for h in hs])
    a, b, _ = _line_fit(np.abs(np.log(hs)), q)
    return a, b


def fit_power_law(xs, ys) -> ExponentFit:
    """Least-squares slope of ``log ys`` against ``log xs`` (natural logs)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 2:
        raise DegenerateFitError("need at least two points")
    if np.any(ys <= 0):
        raise DegenerateFitError("non-positive value in power-law fit")
    slope, intercept, r2 = _line_fit(np.log(xs), np.log(ys))
    return ExponentFit(slope, intercept, r2, (float(xs.min()), float(xs.max())), int(xs.size))
