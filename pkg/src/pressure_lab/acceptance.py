"""Acceptance criteria A1-A10 as named, self-describing records.

Each ``criterion_*`` function runs its experiment, compares the measured
numbers with the configured tolerances and returns a :class:`Criterion`
together with the CSV tables and fields it produced.  The command line
``verify-all`` and the test suite share these functions.
"""
from __future__ import annotations

import csv
import filecmp
import json
import math
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bounded_solver import (NeumannProblem, boundary_lift, homogeneous_part,
                             local_zygmund_profile, normal_derivative, solve,
                             solve_disk_pressure, weak_form_residual)
from .config import ExperimentConfig, quick_config
from .errors import ConfigurationError, PreconditionError
from .extension import (advective_flux, jump_diagnostic, jump_profile_rows, pressure_flux,
                        reflect, weak_divergence_residual)
from .fields import (LacunarySpec, StreamSpec, disk_field_from_stream, disk_velocity_exact,
                     synth_disk_tangent, synth_lacunary_divfree)
from .geometry import (PolarGrid, collar_from_polar, disk_metric, laplace_beltrami,
                       save_polar_field, scalar_to_collar)
from .norms import (default_fit_range, fit_decay_exponent, fit_log_growth, fit_power_law,
                    loglip_norm, second_difference_norm)
from .pressure_periodic import borderline_ratio, run_regularity_cell, solve_pressure_torus
from .spectral_core import GridField, bump_fingerprint, make_partition, save_field
from .symbols import (CutoffSet, SymbolGrid, build_parametrix, collar_box_metric, collar_cutoffs,
                      flat_laplacian_symbol, full_cutoffs, parametrix_remainder_order,
                      quantize_apply, remainder_sweep, sharp_second_order,
                      verify_sharp_ellipticity)

PRE_ASYMPTOTIC = (
    "pre-asymptotic: with J_max = 8 the default window [8, 64] sees only the first "
    "few shells of the pressure, whose block sups fluctuate seed to seed; slopes "
    "steepen towards -2 gamma at higher levels (see the upper-window slopes)")


@dataclass
class Criterion:
    """Outcome of one acceptance criterion.

    ``measured`` maps names to numbers; ``operations`` lists the library
    calls that produced them.  ``known_shortfall`` carries the analysis for
    criteria that are expected to fail at the configured scale.
    """

    key: str
    title: str
    passed: bool
    summary: str
    measured: dict
    operations: list
    known_shortfall: str | None = None
    parts: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        return f"{self.key} {'PASS' if self.passed else 'FAIL'}  {self.title}: {self.summary}"

    def record(self) -> dict:
        return {"key": self.key, "title": self.title, "passed": self.passed,
                "summary": self.summary, "parts": self.parts, "measured": self.measured,
                "operations": self.operations, "known_shortfall": self.known_shortfall,
                "seconds": self.seconds}


@dataclass
class Artifacts:
    """CSV tables ``name -> (header, rows)`` and fields ``name -> field``."""

    tables: dict = field(default_factory=dict)
    fields: dict = field(default_factory=dict)

    def merge(self, other: "Artifacts"):
        self.tables.update(other.tables)
        self.fields.update(other.fields)


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        crit, art = fn(*args, **kwargs)
        crit.seconds = time.perf_counter() - t0
        return crit, art
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _fmt(x: float) -> str:
    return f"{x:.3g}"


# ---------------------------------------------------------------------------
# Periodic criteria
# ---------------------------------------------------------------------------

def fit_window(J_max: int) -> tuple[int, int]:
    """Default window ``[8, 2^(J_max-2)]``, widened downwards to four levels for small ``J_max``."""
    lo, hi = default_fit_range(J_max)
    return (min(lo, hi // 8), hi)


def periodic_cells(cfg: ExperimentConfig):
    """All ``(gamma, seed)`` regularity cells with the paraproduct split."""
    fr = fit_window(cfg.J_max)
    return [run_regularity_cell(g, s, cfg.grid_n, cfg.J_max, with_split=True, fit_range=fr)
            for g in cfg.gamma_list for s in cfg.seeds]


def _upper_window(cfg):
    top = max(N for N in make_partition(cfg.J_max).resolvable_levels(cfg.grid_n))
    return (max(8, top // 8), top)


@_timed
def criterion_A1(cfg: ExperimentConfig, runs):
    """Periodic double regularity: pressure block slopes and Zygmund ratios."""
    margin, r2min = cfg.tol("slope_margin"), cfg.tol("r_squared_min")
    upper = _upper_window(cfg)
    cells, slopes_ok, ratio_ok, time_ok = [], True, True, True
    art = Artifacts()
    by_gamma = {}
    for run in runs:
        target = -2 * run.gamma + margin
        up = fit_decay_exponent(run.p_profile, upper, min_levels=3)
        ok = run.p_fit.slope <= target and run.p_fit.r_squared >= r2min
        slopes_ok &= ok
        time_ok &= run.seconds <= cfg.tol("runtime_max_s")
        by_gamma.setdefault(run.gamma, []).append(run.ratio)
        cells.append({"gamma": run.gamma, "seed": run.seed, "p_slope": run.p_fit.slope,
                      "p_r_squared": run.p_fit.r_squared, "slope_bound": target,
                      "u_slope": run.u_fit.slope, "ratio": run.ratio,
                      "upper_window": list(upper), "upper_window_p_slope": up.slope,
                      "seconds": run.seconds, "cell_pass": ok})
        art.tables[f"blocks_{run.gamma}_{run.seed}.csv"] = (
            ("level", "u_sup", "p_sup", "I_sup", "J_sup"), run.csv_rows())
    spread = {}
    for g, ratios in by_gamma.items():
        spread[g] = max(ratios) / min(ratios)
        ratio_ok &= spread[g] <= cfg.tol("seed_ratio_max")
    passed = slopes_ok and ratio_ok and time_ok
    worst = max(c["p_slope"] - c["slope_bound"] for c in cells)
    summary = (f"{sum(c['cell_pass'] for c in cells)}/{len(cells)} cells meet slope and r^2 bounds "
               f"(worst excess {_fmt(worst)}); seed spread of Zygmund ratio "
               + ", ".join(f"gamma={g}: {_fmt(v)}x" for g, v in spread.items())
               + f"; slowest run {_fmt(max(c['seconds'] for c in cells))} s")
    crit = Criterion(
        "A1", "periodic double regularity", passed, summary,
        {"cells": cells, "ratio_spread": {str(g): v for g, v in spread.items()},
         "fit_range": list(fit_window(cfg.J_max))},
        ["fields.synth_lacunary_divfree", "pressure_periodic.solve_pressure_torus",
         "norms.block_profile", "norms.fit_decay_exponent", "norms.zygmund_norm"],
        None if passed else PRE_ASYMPTOTIC,
        parts={"slopes": slopes_ok, "seed_ratio": ratio_ok, "runtime": time_ok})
    return crit, art


@_timed
def criterion_A2(cfg: ExperimentConfig):
    """Borderline gamma = 1/2: stability of ``sup_N N ||p_N|| / ||u||^2``."""
    seed = cfg.seeds[0]
    rows = []
    for J in cfg.borderline_J:
        n = 4 * 2 ** J
        u = synth_lacunary_divfree(LacunarySpec(0.5, J, seed), n)
        p = solve_pressure_torus(u)
        rows.append((J, n, borderline_ratio(u, p, make_partition(J))))
    vals = [r[2] for r in rows]
    spread = max(vals) / min(vals)
    passed = spread <= cfg.tol("borderline_ratio_max")
    crit = Criterion(
        "A2", "borderline gamma = 1/2 stability", passed,
        f"ratio {', '.join(_fmt(v) for v in vals)} over J_max {cfg.borderline_J}; "
        f"spread {_fmt(spread)}x (bound {cfg.tol('borderline_ratio_max')}x)",
        {"rows": [{"J_max": J, "n": n, "ratio": v} for J, n, v in rows], "spread": spread},
        ["fields.synth_lacunary_divfree", "pressure_periodic.solve_pressure_torus",
         "pressure_periodic.borderline_ratio"])
    return crit, Artifacts({"borderline.csv": (("J_max", "n", "ratio"), rows)})


@_timed
def criterion_A3(cfg: ExperimentConfig, runs):
    """Splitting identity and decay of the two splitting terms."""
    margin = cfg.tol("slope_margin")
    fr = fit_window(cfg.J_max)
    upper = _upper_window(cfg)
    defect = max(r.diag.identity_defect for r in runs)
    identity_ok = defect <= cfg.tol("split_identity_rel")
    cells, slopes_ok = [], True
    for r in runs:
        target = -2 * r.gamma + margin
        fI = fit_decay_exponent(r.diag.I_blocks, fr)
        fJ = fit_decay_exponent(r.diag.J_blocks, fr)
        uI = fit_decay_exponent(r.diag.I_blocks, upper, min_levels=3)
        uJ = fit_decay_exponent(r.diag.J_blocks, upper, min_levels=3)
        ok = fI.slope <= target and fJ.slope <= target
        slopes_ok &= ok
        cells.append({"gamma": r.gamma, "seed": r.seed, "I_slope": fI.slope, "J_slope": fJ.slope,
                      "slope_bound": target, "upper_I_slope": uI.slope,
                      "upper_J_slope": uJ.slope, "identity_defect": r.diag.identity_defect,
                      "cell_pass": ok})
    passed = identity_ok and slopes_ok
    summary = (f"identity defect {_fmt(defect)} (bound {cfg.tol('split_identity_rel')}); "
               f"{sum(c['cell_pass'] for c in cells)}/{len(cells)} cells with I and J slopes "
               f"within bound on {list(fr)}")
    crit = Criterion(
        "A3", "splitting identity and term decay", passed, summary,
        {"cells": cells, "max_identity_defect": defect, "fit_range": list(fr),
         "upper_window": list(upper)},
        ["pressure_periodic.paraproduct_split", "pressure_periodic.pressure_diagnostics",
         "norms.fit_decay_exponent"],
        None if passed else PRE_ASYMPTOTIC + "; J_N vanishes below N = 32 by construction",
        parts={"identity": identity_ok, "slopes": slopes_ok})
    return crit, Artifacts()


def cosine_oracle(k: int, n: int) -> float:
    """Max error of the torus pressure of ``(cos ky, cos kx)`` against ``sin kx sin ky``."""
    u = GridField.from_function(lambda x, y: (np.cos(k * y), np.cos(k * x)), n)
    p = solve_pressure_torus(u)
    exact = GridField.from_function(lambda x, y: np.sin(k * x) * np.sin(k * y), n)
    return float(np.max(np.abs(p.data - exact.data)))


@_timed
def criterion_A4(cfg: ExperimentConfig):
    """Closed-form torus oracle."""
    errs = {k: cosine_oracle(k, 256) for k in (2, 8, 32)}
    passed = max(errs.values()) <= cfg.tol("oracle_abs")
    crit = Criterion(
        "A4", "closed-form oracle", passed,
        ", ".join(f"k={k}: {_fmt(e)}" for k, e in errs.items()) + f" (bound {cfg.tol('oracle_abs')})",
        {"errors": {str(k): e for k, e in errs.items()}, "n": 256},
        ["pressure_periodic.solve_pressure_torus"])
    return crit, Artifacts()


def xlogx_field(n: int) -> GridField:
    """``-|x| log |x|`` on ``[-1, 1]`` (non-periodic window, node at 0)."""
    x = -1.0 + 2.0 * np.arange(n) / n
    ax = np.abs(x)
    vals = np.where(ax > 0, -ax * np.log(np.where(ax > 0, ax, 1.0)), 0.0)
    return GridField(vals[None], extent=2.0, origin=-1.0, periodic=False)


@_timed
def criterion_A5(cfg: ExperimentConfig):
    """Log-Lipschitz stability and the logarithmic growth of second differences."""
    sizes = (2 ** 12, 2 ** 14)
    ll = {n: loglip_norm(xlogx_field(n)) for n in sizes}
    _, prof = second_difference_norm(xlogx_field(sizes[-1]))
    coef, intercept = fit_log_growth(prof)
    stab = max(ll.values()) / min(ll.values())
    target, rel = cfg.tol("loglip_coefficient"), cfg.tol("loglip_coefficient_rel")
    stable_ok = stab <= cfg.tol("loglip_stability")
    coef_ok = abs(coef - target) <= rel * target
    rows = [(h, q) for h, q in sorted(prof.items())]
    crit = Criterion(
        "A5", "Zygmund / log-Lipschitz separation", stable_ok and coef_ok,
        f"loglip {', '.join(_fmt(v) for v in ll.values())} (ratio {_fmt(stab)}); "
        f"second-difference |log h| coefficient {_fmt(coef)} (target {target} +- {rel:.0%})",
        {"loglip": {str(n): v for n, v in ll.items()}, "stability_ratio": stab,
         "log_coefficient": coef, "log_intercept": intercept},
        ["norms.loglip_norm", "norms.second_difference_norm", "norms.fit_log_growth"],
        parts={"loglip_stable": stable_ok, "log_coefficient": coef_ok})
    return crit, Artifacts({"loglip_profile.csv": (("h", "second_difference_quotient"), rows)})


# ---------------------------------------------------------------------------
# Disk criteria
# ---------------------------------------------------------------------------

def _lb_oracle(x, y):
    """``P = x^3 y + cos(2x) y^2`` and its Cartesian Laplacian."""
    P = x ** 3 * y + np.cos(2 * x) * y ** 2
    lap = 6 * x * y - 4 * np.cos(2 * x) * y ** 2 + 2 * np.cos(2 * x)
    return P, lap


def laplace_beltrami_error(n_r: int, r0: float = 0.5) -> float:
    m = disk_metric(r0, n_r, 4 * n_r)
    R, T = np.meshgrid(m.r, m.theta, indexing="ij")
    P, lap = _lb_oracle((1 - R) * np.cos(T), (1 - R) * np.sin(T))
    return float(np.max(np.abs(laplace_beltrami(P, m) - lap)))


def _order(errs: dict) -> float:
    ns = sorted(errs)
    return float(-fit_power_law(ns, [errs[n] for n in ns]).slope)


@_timed
def criterion_A6(cfg: ExperimentConfig):
    """Collar geometry: exact metric samples, Laplace-Beltrami order, ellipticity."""
    m = disk_metric(0.5, 64, 64)
    R = m.r[:, None]
    exact = max(float(np.max(np.abs(m.g_theta_theta - (1 - R) ** -2))),
                float(np.max(np.abs(m.G - (1 - R)))))
    errs = {n: laplace_beltrami_error(n) for n in (16, 32, 64, 128)}
    order = _order(errs)
    c = m.c
    parts = {"metric_exact": exact <= cfg.tol("geometry_exact"),
             "laplace_beltrami_order": order >= cfg.tol("convergence_order_min"),
             "ellipticity_constant": abs(c - 1.0) <= 1e-15}
    crit = Criterion(
        "A6", "geometry exactness", all(parts.values()),
        f"metric sample error {_fmt(exact)}; Laplace-Beltrami order {_fmt(order)}; "
        f"ellipticity constant {c:g}",
        {"metric_error": exact, "lb_errors": {str(n): e for n, e in errs.items()},
         "lb_order": order, "ellipticity_constant": c},
        ["geometry.disk_metric", "geometry.laplace_beltrami", "geometry.ellipticity_constant"],
        parts=parts)
    return crit, Artifacts({"laplace_beltrami_convergence.csv": (("n_r", "max_error"),
                                                                sorted(errs.items()))})


def neumann_pressures():
    """Even pressures with ``d_n p = 0`` on the unit circle: ``f_m(rho) cos(m theta + a)``."""
    out = []
    for m in range(5):
        a = 0.3 * m
        out.append((f"neumann_m{m}", m, a))
    return out


def _neumann_profile(m, rho):
    if m == 0:
        return rho ** 2 - 0.5 * rho ** 4
    return rho ** m - m * rho ** (m + 2) / (m + 2)


def _compliant_velocity(grid, seed):
    return disk_velocity_exact(StreamSpec(0.4, 3, seed=seed), grid)


@_timed
def criterion_A7(cfg: ExperimentConfig):
    """Extension soundness on compliant inputs; detection of violations."""
    n, r0 = cfg.disk_n, 0.5
    grid = PolarGrid.from_n(n)
    art = Artifacts()
    weak, adv = {}, {}
    for seed in range(5):
        u = _compliant_velocity(grid, seed)
        ur, ut, m = collar_from_polar(u, r0)
        rc = reflect(ur, ut, m)
        weak[f"lacunary_seed{seed}"] = weak_divergence_residual(rc, pairing="analytic")
        jumps = jump_diagnostic(advective_flux(rc), rc)
        adv[f"lacunary_seed{seed}"] = float(np.max(np.abs(jumps)))
        if seed == 0:
            art.tables["jumps_advective_compliant.csv"] = (
                ("theta", "component", "jump"), jump_profile_rows(jumps, rc.theta))
    pj = {}
    R, T = grid.mesh()
    for name, mm, a in neumann_pressures():
        p = _neumann_profile(mm, R) * np.cos(mm * T + a)
        ur, ut, m = collar_from_polar(_compliant_velocity(grid, 0), r0)
        rc = reflect(ur, ut, m, p=scalar_to_collar(p, grid, r0))
        pj[name] = float(np.max(np.abs(jump_diagnostic(pressure_flux(rc), rc))))
    # solver pressure (reported, not gated): discrete Neumann error is O(h^2)
    solver_jump = {}
    for nn in (64, 128, n):
        g = PolarGrid.from_n(nn)
        u = synth_disk_tangent(StreamSpec(0.4, 3, seed=0), g)
        sol, prob = solve_disk_pressure(u)
        q = sol.p - boundary_lift(problem=prob).p
        ur, ut, m = collar_from_polar(u, r0)
        rc = reflect(ur, ut, m, p=scalar_to_collar(q, g, r0))
        solver_jump[nn] = float(np.max(np.abs(jump_diagnostic(pressure_flux(rc), rc))[0]))
    # manufactured violations
    u = _compliant_velocity(grid, 0)
    ur, ut, m = collar_from_polar(u, r0)
    sheet = reflect(ur + 1.0 / m.G, ut, m, check=False)
    viol = {"normal_velocity_sheet": weak_divergence_residual(sheet, pairing="analytic")}
    bad_p = reflect(ur, ut, m, p=scalar_to_collar(R ** 2, grid, r0))
    bad_jumps = jump_diagnostic(pressure_flux(bad_p), bad_p)
    viol["non_neumann_pressure_jump"] = float(np.max(np.abs(bad_jumps)))
    art.tables["jumps_pressure_violation.csv"] = (
        ("theta", "component", "jump"), jump_profile_rows(bad_jumps, bad_p.theta))
    try:
        reflect(ur + 1.0 / m.G, ut, m)
        viol["tangency_precondition"] = 0.0
    except PreconditionError:
        viol["tangency_precondition"] = 1.0
    parts = {
        "weak_divergence": max(weak.values()) <= cfg.tol("weak_divergence"),
        "jumps": max(list(adv.values()) + list(pj.values())) <= cfg.tol("jump"),
        "violations_detected": min(viol.values()) >= cfg.tol("violation_min"),
    }
    order = _order(solver_jump)
    crit = Criterion(
        "A7", "extension soundness", all(parts.values()),
        f"weak divergence max {_fmt(max(weak.values()))}; advective jump max "
        f"{_fmt(max(adv.values()))}; pressure jump max {_fmt(max(pj.values()))}; "
        f"violations {', '.join(f'{k}={_fmt(v)}' for k, v in viol.items())}; solver pressure "
        f"flux jump {_fmt(solver_jump[n])} at n={n} (order {_fmt(order)}, reported only)",
        {"weak_divergence": weak, "advective_jump": adv, "pressure_jump": pj,
         "violations": viol, "solver_pressure_jump": {str(k): v for k, v in solver_jump.items()},
         "solver_pressure_jump_order": order, "n": n},
        ["fields.disk_velocity_exact", "extension.reflect", "extension.weak_divergence_residual",
         "extension.jump_diagnostic", "extension.advective_flux", "extension.pressure_flux",
         "bounded_solver.solve_disk_pressure", "bounded_solver.boundary_lift"],
        parts=parts)
    return crit, art


def manufactured_error(n: int) -> float:
    """Max error of the Neumann solver for ``p = rho^4 cos 2 theta + rho^2 - 1/2``."""
    g = PolarGrid.from_n(n)
    R, T = g.mesh()
    exact = R ** 4 * np.cos(2 * T) + R ** 2 - 0.5
    rhs = -12 * R ** 2 * np.cos(2 * T) - 4.0
    data = 4 * np.cos(2 * g.theta) + 2.0
    sol = solve(NeumannProblem.from_data(rhs, data, g, rhs_pole=-4.0))
    ex = exact - g.integrate(exact, -0.5) / np.pi
    return float(np.max(np.abs(sol.p - ex)))


def zygmund_shells(n_rho: int, cap: int = 6) -> int:
    """Largest shell count up to ``cap`` that ``n_rho`` radial intervals resolve."""
    return max(2, min(cap, int(math.floor(math.log2(0.6 * n_rho)))))


@_timed
def criterion_A9(cfg: ExperimentConfig):
    """Disk Neumann solver: convergence, weak form, lift, near-boundary regularity."""
    n = cfg.disk_n
    tol_margin = cfg.tol("zygmund_exponent_margin")
    mms = {k: manufactured_error(k) for k in (64, 128, 256)}
    mms_order = _order(mms)
    grid = PolarGrid.from_n(n)
    rot = disk_field_from_stream(lambda x, y: 1.0 - x * x - y * y, grid)
    sol_rot, _ = solve_disk_pressure(rot)
    weak_rot = weak_form_residual(rot, sol_rot)
    lac = synth_disk_tangent(StreamSpec(0.4, 2, seed=0), grid)
    sol_lac, prob_lac = solve_disk_pressure(lac)
    weak_lac = weak_form_residual(lac, sol_lac)
    lift = boundary_lift(problem=prob_lac)
    hom = homogeneous_part(prob_lac)
    consistency = float(np.max(np.abs(sol_lac.p - lift.p - hom.p)))
    nd = {}
    for k in (64, 128, n):
        g = PolarGrid.from_n(k)
        sol, prob = solve_disk_pressure(synth_disk_tangent(StreamSpec(0.4, 2, seed=0), g))
        q = sol.p - boundary_lift(problem=prob).p
        nd[k] = float(np.max(np.abs(normal_derivative(q, g))))
    nd_order = _order(nd)
    # the homogeneous normal derivative is an O(h^2) quantity; scale the n=256 bound
    nd_bound = cfg.tol("normal_derivative_256") * (256 / n) ** 2
    art = Artifacts()
    zyg = {}
    sizes05 = (n // 2, n, 2 * n)
    J_z = zygmund_shells(sizes05[0])
    for gamma, sizes in ((0.25, (n,)), (0.5, sizes05)):
        for k in sizes:
            g = PolarGrid.from_n(k)
            u = synth_disk_tangent(StreamSpec(gamma, J_z, seed=0), g)
            sol, _ = solve_disk_pressure(u)
            prof, fit = local_zygmund_profile(sol)
            zyg[(gamma, k)] = (prof, fit)
            art.tables[f"zygmund_disk_{gamma}_{k}.csv"] = (
                ("s", "sup_second_difference", "quotient"),
                [(s, v[0], v[1]) for s, v in sorted(prof.items())])
            if gamma == 0.25:
                art.fields["disk_u_0.25_0.bin"] = u
                art.fields["disk_p_0.25_0.bin"] = sol.field()
    exp025 = zyg[(0.25, n)][1].slope
    sup05 = {k: max(v[1] for v in zyg[(0.5, k)][0].values()) for k in sizes05}
    growth = sup05[sizes05[-1]] / sup05[sizes05[0]]
    parts = {
        "mms_order": mms_order >= cfg.tol("convergence_order_min"),
        "weak_form": weak_rot <= cfg.tol("weak_form"),
        "lift_consistency": consistency <= cfg.tol("lift_consistency")
        and nd_order >= cfg.tol("convergence_order_min") and nd[n] <= nd_bound,
        "zygmund_exponent": exp025 >= 0.5 - tol_margin,
        "zygmund_growth": growth <= cfg.tol("zygmund_growth_max"),
    }
    crit = Criterion(
        "A9", "disk Neumann solver", all(parts.values()),
        f"MMS order {_fmt(mms_order)}; weak residual {_fmt(weak_rot)} (rotational input; "
        f"lacunary {_fmt(weak_lac)}); lift consistency {_fmt(consistency)}, homogeneous "
        f"normal derivative {_fmt(nd[n])} at n={n} (bound {_fmt(nd_bound)}, order {_fmt(nd_order)}); gamma=0.25 exponent {_fmt(exp025)}; "
        f"gamma=0.5 quotient growth {_fmt(growth)}x over n={sizes05[0]}..{sizes05[-1]} (J={J_z})",
        {"mms_errors": {str(k): v for k, v in mms.items()}, "mms_order": mms_order,
         "weak_residual_rotational": weak_rot, "weak_residual_lacunary": weak_lac,
         "lift_consistency": consistency,
         "homogeneous_normal_derivative": {str(k): v for k, v in nd.items()},
         "homogeneous_normal_derivative_order": nd_order,
         "homogeneous_normal_derivative_bound": nd_bound,
         "zygmund_exponent_gamma_0.25": exp025,
         "zygmund_sup_gamma_0.5": {str(k): v for k, v in sup05.items()},
         "zygmund_growth_gamma_0.5": growth, "zygmund_shells": J_z, "n": n},
        ["bounded_solver.solve", "bounded_solver.solve_disk_pressure",
         "bounded_solver.weak_form_residual", "bounded_solver.boundary_lift",
         "bounded_solver.homogeneous_part", "bounded_solver.local_zygmund_profile"],
        parts=parts)
    art.tables["mms_convergence.csv"] = (("n", "max_error"), sorted(mms.items()))
    return crit, art


# ---------------------------------------------------------------------------
# Symbols
# ---------------------------------------------------------------------------

def flat_inverse_error(n: int = 64, R: float = 4.0, seed: int = 0) -> float:
    """``Op(chi psi / |xi|^2)(-Delta u) - Op(chi psi) u`` on a band-limited field."""
    rng = np.random.default_rng(seed)
    spec = np.zeros((n, n), dtype=complex)
    spec[:n // 4, :n // 4] = rng.normal(size=(n // 4, n // 4)) + 1j * rng.normal(size=(n // 4, n // 4))
    u = np.fft.ifft2(spec)
    base = collar_cutoffs(n, 0.5)
    cut = CutoffSet(base.psi_x, base.chi_x, R)
    flat = flat_laplacian_symbol(n)
    b = build_parametrix(flat, cut, 1)
    lap_u = quantize_apply(flat, u)
    lhs = quantize_apply(b, lap_u)
    target = SymbolGrid.from_function(
        n, lambda X1, X2, a, c: cut.chi_x[None] * cut.psi_xi(a, c), 0.0)
    rhs = quantize_apply(target, u)
    return float(np.max(np.abs(lhs - rhs)) / max(1.0, float(np.max(np.abs(u)))))


@_timed
def criterion_A8(cfg: ExperimentConfig):
    """Parametrix: exact flat inversion, disk remainder slope, exhaustive ellipticity."""
    n, delta, r0 = cfg.symbol_n, cfg.delta, 0.5
    flat_err = flat_inverse_error()
    m = disk_metric(r0, n // 2, n)
    metric = collar_box_metric(m, n)
    e2 = sharp_second_order(metric, delta)
    cut0 = collar_cutoffs(n, r0)
    M0 = verify_sharp_ellipticity(e2, m.c, cut0.inner)
    cut = collar_cutoffs(n, r0, M0)
    flat = flat_laplacian_symbol(n)
    flat_fit = parametrix_remainder_order(build_parametrix(flat, cut, 1), flat, cut)
    N_list = (8, 16, 32, 64)
    b1 = build_parametrix(e2, cut, 1, c=m.c)
    b2 = build_parametrix(e2, cut, 2, c=m.c)
    fit1 = parametrix_remainder_order(b1, e2, cut, N_list)
    sweep = {1: remainder_sweep(b1, e2, cut, N_list + (128,)),
             2: remainder_sweep(b2, e2, cut, N_list + (128,))}
    fit2 = fit_power_law(N_list, [e for _, e in sweep[2][:-1]])
    ratio = sweep[2][-1][1] / sweep[1][-1][1]
    bound = -(1 - delta) + cfg.tol("remainder_slope_margin")
    parts = {"flat_exact": flat_err <= cfg.tol("flat_inverse") and flat_fit.exact,
             "order1_slope": fit1.slope <= bound,
             "ellipticity": M0 is not None}
    rows = [(N, err, order) for order in (1, 2) for N, err in sweep[order]]
    crit = Criterion(
        "A8", "parametrix remainder", all(parts.values()),
        f"flat inversion error {_fmt(flat_err)} (exact flag {flat_fit.exact}); order-1 slope "
        f"{_fmt(fit1.slope)} (bound {_fmt(bound)}); order-2 slope {_fmt(fit2.slope)}, "
        f"order-2/order-1 at N=128 {_fmt(ratio)}; M0 = {M0}",
        {"flat_inverse_error": flat_err, "order1_fit": fit1.as_dict(),
         "order2_fit": fit2.as_dict(), "order2_over_order1_at_128": ratio, "M0": M0,
         "R": cut.R, "delta": delta, "n": n},
        ["symbols.sharp_flat_split", "symbols.verify_sharp_ellipticity",
         "symbols.build_parametrix", "symbols.parametrix_remainder_order",
         "symbols.quantize_apply"],
        parts=parts)
    return crit, Artifacts({"remainder.csv": (("N", "error", "order"), rows)})


# ---------------------------------------------------------------------------
# Runner
# ---------------------------------------------------------------------------

def provenance(cfg: ExperimentConfig) -> dict:
    return {"bump_fingerprint": bump_fingerprint(), "version": __version__,
            "config": cfg.as_dict()}


def write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v
                        for v in row])


def write_artifacts(art: Artifacts, out: Path):
    for name, (header, rows) in sorted(art.tables.items()):
        write_csv(out / name, header, rows)
    for name, f in sorted(art.fields.items()):
        if f is None:
            continue
        if isinstance(f, GridField):
            save_field(f, out / "fields" / name)
        else:
            save_polar_field(f, out / "fields" / name)


def write_report(path: Path, cfg: ExperimentConfig, criteria, extra: dict | None = None):
    body = {"provenance": provenance(cfg),
            "criteria": {c.key: c.record() for c in criteria}}
    if extra:
        body.update(extra)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(body, indent=2, sort_keys=True, default=_json_default))


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, float) and not math.isfinite(o):
        return str(o)
    raise TypeError(f"not serializable: {type(o)}")


PERIODIC = ("A1", "A2", "A3", "A4", "A5")
DISK = ("A6", "A7", "A8", "A9")
ALL = PERIODIC + DISK + ("A10",)

# criteria exercised by each library module (for ``--only``)
MODULE_CRITERIA = {
    "spectral_core": ("A4", "A10"),
    "norms": ("A5",),
    "fields": ("A1", "A7"),
    "pressure_periodic": ("A1", "A2", "A3", "A4"),
    "geometry": ("A6",),
    "extension": ("A7",),
    "symbols": ("A8",),
    "bounded_solver": ("A9",),
    "cli": ("A10",),
}


def select_criteria(only=None, geometry: str = "both") -> list[str]:
    """Criterion keys for a module name, a comma list of keys, or everything."""
    if only:
        keys = []
        for tok in str(only).split(","):
            tok = tok.strip()
            if tok in MODULE_CRITERIA:
                keys.extend(MODULE_CRITERIA[tok])
            elif tok.upper() in ALL:
                keys.append(tok.upper())
            else:
                raise ConfigurationError(
                    f"--only: unknown module or criterion {tok!r}; "
                    f"choose from {sorted(MODULE_CRITERIA)} or A1..A10")
        return [k for k in ALL if k in keys]
    if geometry == "torus":
        return list(PERIODIC) + ["A10"]
    if geometry == "disk":
        return list(DISK) + ["A10"]
    return list(ALL)


def _failure(key: str, exc: Exception) -> Criterion:
    return Criterion(key, "error", False, f"{type(exc).__name__}: {exc}",
                     {"error": str(exc), "exception": type(exc).__name__}, [])


class SuiteResult(list):
    """Criteria in run order; ``errors`` lists keys that raised."""

    def __init__(self, items=(), errors=()):
        super().__init__(items)
        self.errors = list(errors)


def run_criteria(cfg: ExperimentConfig, keys=None, echo=None, on_result=None):
    """Run the selected criteria (A1-A9) one by one.

    Exceptions are caught per criterion and recorded as failed criteria so
    that the others still run.  Returns ``(criteria, artifacts, runs)``.
    """
    keys = [k for k in (keys or PERIODIC + DISK) if k != "A10"]
    crits, art = SuiteResult(), Artifacts()
    runs = None
    if any(k in keys for k in ("A1", "A3")):
        try:
            runs = periodic_cells(cfg)
        except Exception as exc:  # recorded below for A1/A3
            runs = exc
    table = {
        "A1": lambda: criterion_A1(cfg, runs), "A2": lambda: criterion_A2(cfg),
        "A3": lambda: criterion_A3(cfg, runs), "A4": lambda: criterion_A4(cfg),
        "A5": lambda: criterion_A5(cfg), "A6": lambda: criterion_A6(cfg),
        "A7": lambda: criterion_A7(cfg), "A8": lambda: criterion_A8(cfg),
        "A9": lambda: criterion_A9(cfg),
    }
    for k in keys:
        try:
            if isinstance(runs, Exception) and k in ("A1", "A3"):
                raise runs
            c, a = table[k]()
            art.merge(a)
        except Exception as exc:
            c = _failure(k, exc)
            crits.errors.append(k)
        crits.append(c)
        if echo:
            echo(c.line())
        if on_result:
            on_result(crits, art)
    if isinstance(runs, list):
        seen = set()
        for r in runs:
            if r.gamma in seen:
                continue
            seen.add(r.gamma)
            u = synth_lacunary_divfree(LacunarySpec(r.gamma, r.J_max, r.seed), r.n)
            art.fields[f"u_{r.gamma}_{r.seed}.bin"] = u
            art.fields[f"p_{r.gamma}_{r.seed}.bin"] = solve_pressure_torus(u)
    else:
        runs = None
    return crits, art, runs


def csv_outputs(out: Path) -> list[Path]:
    return sorted(p.relative_to(out) for p in Path(out).rglob("*.csv"))


def determinism_check(cfg: ExperimentConfig | None = None, keys=None) -> Criterion:
    """Run the suite twice with one configuration and compare every CSV byte for byte."""
    t0 = time.perf_counter()
    cfg = cfg or quick_config()
    with tempfile.TemporaryDirectory() as tmp:
        dirs = [Path(tmp) / "first", Path(tmp) / "second"]
        for d in dirs:
            verify_all(cfg.replace(output_dir=str(d)), keys=keys)
        names = csv_outputs(dirs[0])
        same_names = names == csv_outputs(dirs[1])
        mismatched = [str(p) for p in names
                      if not filecmp.cmp(dirs[0] / p, dirs[1] / p, shallow=False)]
    passed = same_names and not mismatched and bool(names)
    return Criterion(
        "A10", "determinism", passed,
        f"{len(names)} CSV files compared byte for byte, {len(mismatched)} differ",
        {"files": [str(p) for p in names], "mismatched": mismatched,
         "config": cfg.as_dict()},
        ["acceptance.verify_all (two runs)"], seconds=time.perf_counter() - t0)


def _write_reports(out: Path, cfg, crits, runs):
    periodic = [c for c in crits if c.key in PERIODIC + ("A10",)]
    disk = [c for c in crits if c.key in DISK]
    extra = {"runs": [r.record() for r in runs]} if runs else None
    write_report(out / "report_periodic.json", cfg, periodic, extra)
    write_report(out / "report_disk.json", cfg, disk)


def verify_all(cfg: ExperimentConfig, keys=None, echo=None,
               determinism_cfg: ExperimentConfig | None = None) -> SuiteResult:
    """Run the acceptance suite and write reports, CSV tables and fields.

    ``keys`` selects criteria (default A1-A9, plus A10 when listed).  A10
    reruns the A1-A9 selection twice with ``determinism_cfg`` (default
    :func:`quick_config`) and compares the CSV outputs.  Reports are
    rewritten after every criterion, so a failure midway leaves a partial
    report.  ``report_periodic.json`` holds A1-A5 and A10,
    ``report_disk.json`` holds A6-A9.
    """
    out = Path(cfg.output_dir)
    keys = list(keys or PERIODIC + DISK)
    inner = [k for k in keys if k != "A10"]
    crits, art, runs = run_criteria(
        cfg, inner, echo, on_result=lambda cs, _: _write_reports(out, cfg, cs, None))
    if "A10" in keys:
        try:
            c = determinism_check(determinism_cfg, inner or None)
        except Exception as exc:
            c = _failure("A10", exc)
            crits.errors.append("A10")
        crits.append(c)
        if echo:
            echo(c.line())
    write_artifacts(art, out)
    _write_reports(out, cfg, crits, runs)
    return crits
