"""Command line entry point ``pressure-lab``.

Subcommands: ``synth``, ``solve-torus``, ``solve-disk``, ``norms``,
``split``, ``symbols`` and ``verify-all``.  Exit codes: 0 success, 1 an
acceptance criterion failed without a documented shortfall (or any failure
with ``--strict``), 2 usage or configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import ExperimentConfig
from .errors import ConfigurationError, PressureLabError

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    changes = {}
    if getattr(args, "grid_n", None) is not None:
        changes["grid_n"] = args.grid_n
    if getattr(args, "seed", None) is not None:
        changes["seeds"] = [args.seed]
    if getattr(args, "output_dir", None) is not None:
        changes["output_dir"] = args.output_dir
    return cfg.replace(**changes) if changes else cfg


def _emit(obj):
    print(json.dumps(obj, indent=2, sort_keys=True, default=float))


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_synth(args) -> int:
    from .fields import LacunarySpec, StreamSpec, synth_disk_tangent, synth_lacunary_divfree
    from .geometry import PolarGrid, save_polar_field
    from .spectral_core import save_field
    cfg = _load_config(args)
    gamma = args.gamma if args.gamma is not None else cfg.gamma_list[0]
    seed = cfg.seeds[0]
    if args.kind == "torus":
        J = args.J or cfg.J_max
        u = synth_lacunary_divfree(LacunarySpec(gamma, J, seed), cfg.grid_n)
        path = save_field(u, args.out, {"gamma": gamma, "J": J, "seed": seed})
    else:
        J = args.J or 4
        u = synth_disk_tangent(StreamSpec(gamma, J, seed=seed), PolarGrid.from_n(cfg.disk_n))
        path = save_polar_field(u, args.out, {"gamma": gamma, "J": J, "seed": seed})
    _emit({"written": str(path), "sup": u.sup()})
    return EXIT_OK


def cmd_solve_torus(args) -> int:
    from .fields import LacunarySpec, synth_lacunary_divfree
    from .norms import block_profile, zygmund_norm
    from .pressure_periodic import low_frequency_bound, solve_pressure_torus
    from .spectral_core import load_field, make_partition, save_field
    cfg = _load_config(args)
    if args.field:
        u = load_field(args.field)
    else:
        u = synth_lacunary_divfree(LacunarySpec(cfg.gamma_list[0], cfg.J_max, cfg.seeds[0]),
                                   cfg.grid_n)
    p = solve_pressure_torus(u)
    J = int(np.log2(u.n)) - 2
    part = make_partition(J)
    s = args.s if args.s is not None else 2 * cfg.gamma_list[0]
    rec = {"n": u.n, "p_sup": p.sup(), "zygmund_p": zygmund_norm(p, s, part, block_profile(p, part)),
           "s": s, "low_frequency_sup": low_frequency_bound(u, p)}
    if args.out:
        rec["written"] = str(save_field(p, args.out))
    _emit(rec)
    return EXIT_OK


def cmd_solve_disk(args) -> int:
    from .bounded_solver import solve_disk_pressure, weak_form_residual
    from .fields import StreamSpec, synth_disk_tangent
    from .geometry import PolarGrid, load_polar_field, save_polar_field
    cfg = _load_config(args)
    if args.field:
        u = load_polar_field(args.field)
    else:
        gamma = args.gamma if args.gamma is not None else cfg.gamma_list[0]
        u = synth_disk_tangent(StreamSpec(gamma, args.J, seed=cfg.seeds[0]),
                               PolarGrid.from_n(cfg.disk_n))
    sol, prob = solve_disk_pressure(u)
    rec = {"n_rho": u.grid.n_rho, "iterations": sol.iterations,
           "solve_residual": sol.solve_residual, "compatibility_shift": prob.shift,
           "weak_form_residual": weak_form_residual(u, sol), "p_sup": float(np.max(np.abs(sol.p)))}
    if args.out:
        rec["written"] = str(save_polar_field(sol.field(), args.out))
    _emit(rec)
    return EXIT_OK


def cmd_norms(args) -> int:
    from .norms import block_profile, holder_norm, loglip_norm, zygmund_norm
    from .spectral_core import load_field, make_partition
    f = load_field(args.field)
    J = args.J if args.J is not None else int(np.log2(f.n)) - 2
    part = make_partition(J)
    rec = {"zygmund_norm": zygmund_norm(f, args.s, part, block_profile(f, part)), "s": args.s,
           "J_max": J}
    if args.all:
        rec["loglip_norm"] = loglip_norm(f)
        if 0 < args.s <= 1:
            rec["holder_norm"] = holder_norm(f, args.s)
    if args.json:
        _emit(rec)
    else:
        print(f"{rec['zygmund_norm']:.12g}")
    return EXIT_OK


def cmd_split(args) -> int:
    from .acceptance import fit_window, write_csv
    from .norms import fit_decay_exponent
    from .pressure_periodic import run_regularity_cell
    cfg = _load_config(args)
    gamma = args.gamma if args.gamma is not None else cfg.gamma_list[0]
    run = run_regularity_cell(gamma, cfg.seeds[0], cfg.grid_n, cfg.J_max, with_split=True,
                              fit_range=fit_window(cfg.J_max))
    fr = fit_window(cfg.J_max)
    rec = {"gamma": gamma, "seed": cfg.seeds[0], "identity_defect": run.diag.identity_defect,
           "p_slope": run.p_fit.slope,
           "I_slope": fit_decay_exponent(run.diag.I_blocks, fr).slope,
           "J_slope": fit_decay_exponent(run.diag.J_blocks, fr).slope, "fit_range": list(fr)}
    out = Path(cfg.output_dir) / f"blocks_{gamma}_{cfg.seeds[0]}.csv"
    write_csv(out, ("level", "u_sup", "p_sup", "I_sup", "J_sup"), run.csv_rows())
    rec["written"] = str(out)
    _emit(rec)
    return EXIT_OK


def cmd_symbols(args) -> int:
    from .acceptance import write_csv
    from .geometry import disk_metric
    from .symbols import (build_parametrix, collar_box_metric, collar_cutoffs,
                          parametrix_remainder_order, remainder_sweep, sharp_second_order,
                          verify_sharp_ellipticity)
    cfg = _load_config(args)
    n, r0 = cfg.symbol_n, 0.5
    m = disk_metric(r0, n // 2, n)
    e2 = sharp_second_order(collar_box_metric(m, n), cfg.delta)
    M0 = verify_sharp_ellipticity(e2, m.c, collar_cutoffs(n, r0).inner)
    cut = collar_cutoffs(n, r0, M0)
    b = build_parametrix(e2, cut, args.order, c=m.c)
    N_list = (8, 16, 32, 64)
    fit = parametrix_remainder_order(b, e2, cut, N_list)
    rows = [(N, err, args.order) for N, err in remainder_sweep(b, e2, cut, N_list)]
    out = Path(cfg.output_dir) / "remainder.csv"
    write_csv(out, ("N", "error", "order"), rows)
    _emit({"n": n, "delta": cfg.delta, "M0": M0, "order": args.order,
           "remainder_slope": fit.slope, "written": str(out)})
    return EXIT_OK


def cmd_verify_all(args) -> int:
    from .acceptance import select_criteria, verify_all
    cfg = _load_config(args)
    keys = select_criteria(args.only, cfg.geometry)
    crits = verify_all(cfg, keys, echo=print)
    print(f"reports written to {cfg.output_dir}")
    if crits.errors:
        return EXIT_NUMERICAL
    failed = [c for c in crits if not c.passed]
    if args.strict and failed:
        return EXIT_FAILED
    if any(c.known_shortfall is None for c in failed):
        return EXIT_FAILED
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--grid-n", type=int, help="override grid_n")
    common.add_argument("--seed", type=int, help="run a single seed")
    common.add_argument("--output-dir", help="override output_dir")

    parser = argparse.ArgumentParser(prog="pressure-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="synthesize a lacunary velocity field")
    p.add_argument("--kind", choices=("torus", "disk"), default="torus")
    p.add_argument("--gamma", type=float)
    p.add_argument("--J", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("solve-torus", parents=[common], help="periodic pressure solve")
    p.add_argument("--field", help="velocity .bin (default: synthesize from config)")
    p.add_argument("--s", type=float, help="Zygmund index for the report (default 2 gamma)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve_torus)

    p = sub.add_parser("solve-disk", parents=[common], help="disk Neumann pressure solve")
    p.add_argument("--field", help="polar velocity .bin (default: synthesize)")
    p.add_argument("--gamma", type=float)
    p.add_argument("--J", type=int, default=4)
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve_disk)

    p = sub.add_parser("norms", help="Zygmund norm of a stored field")
    p.add_argument("--field", required=True)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--J", type=int, help="top dyadic level (default log2 n - 2)")
    p.add_argument("--all", action="store_true", help="also print Hoelder and log-Lipschitz norms")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_norms)

    p = sub.add_parser("split", parents=[common], help="paraproduct split of one cell")
    p.add_argument("--gamma", type=float)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("symbols", parents=[common], help="parametrix remainder sweep")
    p.add_argument("--order", type=int, choices=(1, 2), default=1)
    p.set_defaults(func=cmd_symbols)

    p = sub.add_parser("verify-all", parents=[common], help="run the acceptance suite")
    p.add_argument("--only", help="module name or comma list of criteria (A1..A10)")
    p.add_argument("--strict", action="store_true",
                   help="nonzero exit on any failed criterion, documented or not")
    p.set_defaults(func=cmd_verify_all)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"pressure-lab: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, json.JSONDecodeError) as exc:
        print(f"pressure-lab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PressureLabError as exc:
        print(f"pressure-lab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
