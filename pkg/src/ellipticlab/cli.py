"""Command-line experiments over the built-in fixtures.

Every command writes its artifacts (solutions in the grid text format, CSV
reports, a flat key=value run manifest carrying every parameter and tolerance
plus the code version) into --out and returns a process exit code:

    0   all certifications embedded in the run passed
    1   a certification failed (message names the failing check)
    2   flag / input parse errors
    3   anything unexpected

Identical flags + seed produce byte-identical CSV artifacts; the only random
number generator in the package is the seeded one inside the operator
property checks.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__
from .decay import DecayConfig, decay_profile, verify_decay_chain, write_decay_profile
from .fileio import read_manifest, write_csv, write_manifest
from .fixtures import build_fixture, disc_problem, limit_families
from .grids import GridFunction, SymMatrix, read_grid_function, write_grid_function
from .mollify import stability_sweep
from .operators import (
    check_homogeneity,
    check_uniform_ellipticity,
    operator_spec_string,
    parse_operator,
    trace_operator,
)
from .solvers import RelaxationConfig, solve_dirichlet, solve_obstacle
from .stencils import eval_discrete
from .viscosity import (
    Bounds,
    check_pointwise,
    check_touching,
    default_tolerance,
    limit_stability_experiment,
    make_touching_dictionary,
    write_viscosity_report,
)

__all__ = ["main", "CliError"]


class CliError(Exception):
    """Bad flags or unreadable inputs; mapped to exit code 2."""


def _out_dir(args) -> str:
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    return out


def _tol_scale(args) -> float:
    if args.tol_scale is None:
        return 1.0
    if args.tol_scale <= 0:
        raise CliError("--tol-scale must be positive")
    return float(args.tol_scale)


def _resolution(args, default=65) -> int:
    res = args.res if args.res is not None else default
    if res < 17:
        raise CliError("--res must be at least 17")
    return int(res)


def _operator(spec):
    try:
        return parse_operator(spec)
    except ValueError as exc:
        raise CliError(str(exc))


def _load_field(args) -> GridFunction:
    """The subject of the experiment: --input file, else a named fixture."""
    if args.input:
        if not os.path.exists(args.input):
            raise CliError("input file %r does not exist" % args.input)
        try:
            return read_grid_function(args.input)
        except Exception as exc:
            raise CliError("cannot parse %r: %s" % (args.input, exc))
    name = args.fixture or "harmonic"
    try:
        return build_fixture(name, _resolution(args))
    except ValueError as exc:
        raise CliError(str(exc))


def _write_run_manifest(out, command, entries: dict):
    data = {"command": command, "version": __version__}
    data.update(entries)
    write_manifest(os.path.join(out, "run_manifest.txt"), data)


def _subject_keys(args, u: GridFunction) -> dict:
    keys = {"res": u.grid.shape[0]}
    if args.input:
        keys["input"] = args.input
    else:
        keys["fixture"] = args.fixture or "harmonic"
    return keys


# -- commands -------------------------------------------------------------------


def cmd_props(args) -> int:
    out = _out_dir(args)
    if args.seed is None:
        raise CliError("--seed is required for randomized property checks")
    op = _operator(args.op or "pucci+:1,2")
    ell = check_uniform_ellipticity(op, seed=args.seed)
    hom = check_homogeneity(op, seed=args.seed)
    write_csv(
        os.path.join(out, "props.csv"),
        ["name", "passed", "worst_violation", "worst_normalized", "samples", "seed"],
        [(r.name, r.passed, r.worst_violation, r.worst_normalized, r.samples, r.seed)
         for r in (ell, hom)],
    )
    _write_run_manifest(out, "props", {
        "op": operator_spec_string(op),
        "seed": args.seed,
        "samples": ell.samples,
        "tolerance_normalized": 1e-10,
    })
    ok = ell.passed and hom.passed
    print("props[%s]: %s" % (operator_spec_string(op), "pass" if ok else "FAIL"))
    return 0 if ok else 1


def cmd_solve(args) -> int:
    out = _out_dir(args)
    op = _operator(args.op or "trace")
    target = _load_field(args)
    # manufacture data so the exact discrete solution is known
    f = GridFunction(target.grid,
                     np.nan_to_num(eval_discrete(op, target).values, nan=0.0))
    tol = _tol_scale(args) * 1e-9 * (1.0 + f.sup_norm())
    result = solve_dirichlet(op, f, target, grid=target.grid,
                             config=RelaxationConfig(residual_tolerance=tol))
    sup_error = float(np.max(np.abs(result.u.values - target.values)))
    write_grid_function(result.u, os.path.join(out, "solution.txt"))
    write_csv(os.path.join(out, "solve_report.csv"),
              ["iterations", "residual", "tau", "sup_error"],
              [(result.iterations, result.residual, result.tau, sup_error)])
    entries = _subject_keys(args, target)
    entries.update({"op": operator_spec_string(op), "residual_tolerance": tol,
                    "tau": result.tau})
    _write_run_manifest(out, "solve", entries)
    print("solve: residual %.3e after %d sweeps, sup error %.3e"
          % (result.residual, result.iterations, sup_error))
    return 0


def cmd_obstacle(args) -> int:
    out = _out_dir(args)
    fixture = args.fixture or "disc"
    if fixture != "disc":
        raise CliError("the obstacle command supports only the 'disc' fixture")
    res = _resolution(args)
    tol = _tol_scale(args) * 1e-9
    result = solve_obstacle(disc_problem(res),
                            config=RelaxationConfig(residual_tolerance=tol))
    write_grid_function(result.u, os.path.join(out, "solution.txt"))
    write_csv(os.path.join(out, "obstacle_report.csv"),
              ["contact_fraction", "lam_lo", "lam_hi", "iterations", "residual", "tau"],
              [(result.contact_fraction, result.lam_lo, result.lam_hi,
                result.iterations, result.residual, result.tau)])
    _write_run_manifest(out, "obstacle", {
        "fixture": "disc", "res": res, "op": "trace", "g_weight": 1.0,
        "residual_tolerance": tol, "tau": result.tau,
        "lam_lo": result.lam_lo, "lam_hi": result.lam_hi,
        "contact_fraction": result.contact_fraction,
    })
    print("obstacle: contact %.1f%%, bounds [%.4g, %.4g]"
          % (100 * result.contact_fraction, result.lam_lo, result.lam_hi))
    return 0


def cmd_visc(args) -> int:
    out = _out_dir(args)
    if not args.input:
        raise CliError("the visc command needs --input (a grid-function file)")
    u = _load_field(args)
    manifest = {}
    sibling = os.path.join(os.path.dirname(os.path.abspath(args.input)),
                           "run_manifest.txt")
    if os.path.exists(sibling):
        manifest = read_manifest(sibling)
    if args.lam is not None:
        bounds = Bounds.symmetric(args.lam)
    elif "lam_lo" in manifest and "lam_hi" in manifest:
        bounds = Bounds(float(manifest["lam_lo"]), float(manifest["lam_hi"]))
    else:
        raise CliError(
            "no bounds available: pass --lambda or keep the input next to the "
            "run manifest that produced it")
    op = _operator(args.op or manifest.get("op", "trace"))
    tol = _tol_scale(args) * default_tolerance(op, u)
    node_budget = 400
    pointwise = check_pointwise(u, op, bounds, tol=tol)
    dictionary = make_touching_dictionary(u, node_budget=node_budget)
    touching = check_touching(u, op, bounds, dictionary, tol=tol)
    write_viscosity_report(pointwise, os.path.join(out, "visc_pointwise.csv"))
    write_viscosity_report(touching, os.path.join(out, "visc_touching.csv"))
    _write_run_manifest(out, "visc", {
        "input": args.input, "op": operator_spec_string(op),
        "lam_lo": bounds.lam_lo, "lam_hi": bounds.lam_hi,
        "tolerance": tol, "node_budget": node_budget,
        "trigger_slack": u.grid.h ** 2,
    })
    ok = pointwise.passed and touching.passed
    print("visc: pointwise %s, touching %s (tol %.3g)"
          % (pointwise.passed, touching.passed, tol))
    if not ok:
        print("see %s" % os.path.join(out, "visc_pointwise.csv"), file=sys.stderr)
    return 0 if ok else 1


def cmd_campanato(args) -> int:
    out = _out_dir(args)
    if args.res is None and not args.input:
        args.res = 257  # four dyadic quarterings need headroom over the 4h floor
    u = _load_field(args)
    lam = args.lam if args.lam is not None else 0.25
    beta = args.beta if args.beta is not None else 0.5
    eps = args.eps if args.eps is not None else 0.5
    levels = args.levels if args.levels is not None else 2
    try:
        cfg = DecayConfig(lam=lam, beta=beta, eps=eps, levels=levels)
    except ValueError as exc:
        raise CliError(str(exc))
    grid = u.grid
    center = tuple(0.5 * (lo + hi) for lo, hi in
                   zip(grid.domain.lower, grid.domain.upper))
    radius0 = 0.5 * min(grid.domain.extent(a) for a in range(grid.ndim))
    entries = _subject_keys(args, u)
    entries.update({"lam": lam, "beta": beta, "eps": eps, "levels": levels,
                    "radius0": radius0, "chain_rel_tol": 1e-9,
                    "min_radius_nodes": cfg.min_radius_nodes})
    _write_run_manifest(out, "campanato", entries)
    profile = decay_profile(u, center, cfg, radius0)
    write_decay_profile(profile, os.path.join(out, "decay.csv"))
    chain = verify_decay_chain(profile)
    write_csv(os.path.join(out, "chain.csv"), ["k", "phi", "bound", "ok"], chain)
    ok = all(step[3] for step in chain)
    entries.update({"beta_hat": profile.beta_hat, "slope": profile.slope,
                    "sigma": profile.sigma, "spread": profile.spread,
                    "chain_ok": int(ok)})
    _write_run_manifest(out, "campanato", entries)
    print("campanato: beta_hat %.4f (spread %.2g), chain %s"
          % (profile.beta_hat, profile.spread, "pass" if ok else "FAIL"))
    return 0 if ok else 1


def cmd_mollify(args) -> int:
    out = _out_dir(args)
    u = _load_field(args)
    h = u.grid.h
    if args.eps is not None:
        if args.eps < 3.0 * h:
            raise CliError("--eps below 3h cannot be resolved on this grid")
        schedule = [float(args.eps)]
    else:
        schedule = [24.0 * h, 16.0 * h, 12.0 * h, 8.0 * h]
    if args.lam is not None:
        f1, f2 = -float(args.lam), float(args.lam)
    else:
        op = _operator(args.op or "trace")
        realized = eval_discrete(op, u).values
        finite = realized[np.isfinite(realized)]
        f1, f2 = float(finite.min()), float(finite.max())
    a = SymMatrix.identity(u.grid.ndim)
    min_half = 0.5 * min(u.grid.domain.extent(ax) for ax in range(u.grid.ndim))
    r = 0.5 * (min_half - schedule[0])
    if r <= 2.0 * h:
        raise CliError("grid too small for this schedule: no room for the norm ball")
    sandwich_tol = _tol_scale(args) * 10.0 * h * (1.0 + abs(f2)
                                                  + a.frobenius() * u.sup_norm())
    entries = _subject_keys(args, u)
    entries.update({"eps_schedule": " ".join("%.17g" % e for e in schedule),
                    "p": 4.0, "r": r, "f1": f1, "f2": f2, "matrix": "identity",
                    "sandwich_tolerance": sandwich_tol})
    _write_run_manifest(out, "mollify", entries)
    rows = stability_sweep(u, a, f1, f2, schedule, 4.0, r,
                           path=os.path.join(out, "sweep.csv"))
    ok = all(row.passed for row in rows)
    norms = [row.norm_p for row in rows]
    print("mollify: sandwich %s, norm column %.4g .. %.4g"
          % ("pass" if ok else "FAIL", min(norms), max(norms)))
    return 0 if ok else 1


def cmd_limit(args) -> int:
    out = _out_dir(args)
    res = _resolution(args)
    k_max = args.levels if args.levels is not None else 6
    if k_max < 1:
        raise CliError("--levels must be positive")
    op = trace_operator()
    node_budget = 300
    rows = []
    verdicts = {}
    for name, (gen, u_lim, lam_lim) in sorted(limit_families(res).items()):
        report = limit_stability_experiment(gen, k_max, op, u_limit=u_lim,
                                            lam_limit=lam_lim,
                                            node_budget=node_budget)
        verdicts[name] = report.passed
        for k in range(len(report.lam_seq)):
            rows.append((name, k + 1, report.lam_seq[k], report.deltas[k],
                         report.self_pass[k], report.pointwise_pass[k],
                         report.touching_pass[k]))
    write_csv(os.path.join(out, "limit_report.csv"),
              ["family", "k", "lam_k", "delta_k", "self_pass",
               "pointwise_pass", "touching_pass"], rows)
    _write_run_manifest(out, "limit", {
        "res": res, "k_max": k_max, "op": "trace", "node_budget": node_budget,
    })
    ok = all(verdicts.values())
    print("limit: " + ", ".join("%s %s" % (n, "pass" if v else "FAIL")
                                for n, v in sorted(verdicts.items())))
    return 0 if ok else 1


# -- wiring ---------------------------------------------------------------------


_COMMANDS = {
    "solve": (cmd_solve, "solve F_h(u) = f manufactured from a fixture"),
    "obstacle": (cmd_obstacle, "solve the disc obstacle problem"),
    "visc": (cmd_visc, "certify viscosity bounds on a stored solution"),
    "campanato": (cmd_campanato, "oscillation-decay profile and chain check"),
    "mollify": (cmd_mollify, "mollification sandwich and Hessian norm sweep"),
    "limit": (cmd_limit, "certificate stability under locally uniform limits"),
    "props": (cmd_props, "randomized operator property checks"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ellipticlab",
        description="Experiments with discrete elliptic differential inequalities.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (fn, help_text) in _COMMANDS.items():
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--op", help="trace | linear:a11,a12,a22 | pucci+:l1,l2 | pucci-:l1,l2")
        sp.add_argument("--res", type=int, help="nodes per axis (>= 17, default 65)")
        sp.add_argument("--fixture",
                        help="harmonic | quad | kink | radial-holder:g | disc")
        sp.add_argument("--input", help="grid-function file from an earlier run")
        sp.add_argument("--out", help="artifact directory (default .)")
        sp.add_argument("--seed", type=int, help="seed for randomized checks")
        sp.add_argument("--beta", type=float, help="Holder exponent target")
        sp.add_argument("--lambda", dest="lam", type=float,
                        help="decay ratio / symmetric bound, per command")
        sp.add_argument("--eps", type=float, help="normalization or kernel scale")
        sp.add_argument("--levels", type=int, help="dyadic levels / iterate count")
        sp.add_argument("--tol-scale", dest="tol_scale", type=float,
                        help="multiply every default tolerance")
        sp.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print("ellipticlab: %s" % exc, file=sys.stderr)
        return 2
    except ValueError as exc:
        # failed preconditions and unattained certifications land here
        print("ellipticlab: certification failed: %s" % exc, file=sys.stderr)
        return 1
    except RuntimeError as exc:
        if type(exc) is RuntimeError:
            print("ellipticlab: internal error: %s" % exc, file=sys.stderr)
            return 3
        # SolverError and friends: the run itself failed its contract
        print("ellipticlab: certification failed: %s" % exc, file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - defensive
        print("ellipticlab: internal error: %s" % exc, file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
