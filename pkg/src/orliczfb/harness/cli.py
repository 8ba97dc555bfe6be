"""Command-line entry point ``orliczfb``.

Exit codes: 0 pass, 1 suite failure, 2 validation error, 3 solver failure under ``--strict``.
"""
import argparse
import json
import logging
import os
import sys
import warnings

import numpy as np

from ..estimates import blowup_run, nearest_free_boundary_point
from ..exceptions import OrliczFBError
from ..grid import Ball, Field, save_field_binary, save_field_csv
from ..phi import check_A0, check_dec, check_inc, check_sandwich, check_VA1
from ..regularize import regularize
from ..solver import harmonic_replacement
from .config import bundled_config, bundled_configs, load_config
from .report import report
from .run import SolverFailure, run, solve_config

EXIT_PASS, EXIT_FAIL, EXIT_INVALID, EXIT_SOLVER = 0, 1, 2, 3

log = logging.getLogger("orliczfb")


def _config(args):
    path = args.config
    if os.path.exists(path):
        cfg = load_config(path)
    elif os.path.splitext(os.path.basename(path))[0] + ".json" in bundled_configs():
        cfg = bundled_config(os.path.basename(path))
    else:
        cfg = load_config(path)       # raises with a readable message
    res = None
    if getattr(args, "resolutions", None):
        res = [int(v) for v in args.resolutions.split(",") if v.strip()]
    out = getattr(args, "out", None)
    return cfg.with_overrides(seed=args.seed, resolutions=res, output=out)


def _write_json(path, data):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")


def cmd_solve(args):
    cfg = _config(args)
    os.makedirs(cfg.output, exist_ok=True)
    status = EXIT_PASS
    for cells in sorted(cfg.resolutions):
        result = solve_config(cfg, cells)
        base = os.path.join(cfg.output, f"{cfg.id}_field_{cells}")
        save_field_binary(result.field, base + ".ofbf")
        save_field_csv(result.field, base + ".csv")
        _write_json(os.path.join(cfg.output, f"{cfg.id}_solver_{cells}.json"),
                    {"config_hash": cfg.hash(), "cells": cells, "energy": result.energy,
                     "converged": result.converged, "options": cfg.solve_options().to_dict(),
                     "stages": result.log})
        print(f"{cfg.id} cells={cells} energy={result.energy:.12g} converged={result.converged}")
        if not result.converged:
            if args.strict:
                return EXIT_SOLVER
            warnings.warn(f"solver did not converge at {cells} cells", RuntimeWarning)
    return status


def _parse_ball(text):
    vals = [float(v) for v in text.split(",")]
    if len(vals) < 2:
        raise OrliczFBError("--ball expects 'c1[,c2],radius'")
    return Ball(tuple(vals[:-1]), vals[-1])


def cmd_replace(args):
    cfg = _config(args)
    os.makedirs(cfg.output, exist_ok=True)
    cells = max(cfg.resolutions)
    grid = cfg.grid(cells)
    u = Field.from_expression(grid, cfg.boundary)
    ball = _parse_ball(args.ball)
    reg = cfg.phi if cfg.phi.autonomous else regularize(cfg.phi, ball, grid)
    info = harmonic_replacement(reg, u, ball, return_info=True)
    base = os.path.join(cfg.output, f"{cfg.id}_replacement_{cells}")
    save_field_binary(info.field, base + ".ofbf")
    save_field_csv(info.field, base + ".csv")
    _write_json(base + ".json", {"ball": {"center": list(ball.center), "radius": ball.radius},
                                 "residual": info.residual, "converged": info.converged,
                                 "iterations": info.iterations, "energy": info.energy})
    print(f"{cfg.id} replacement residual={info.residual:.3e} converged={info.converged}")
    if not info.converged and args.strict:
        return EXIT_SOLVER
    return EXIT_PASS


def cmd_verify(args):
    cfg = _config(args)
    manifest = run(cfg, strict=args.strict)
    for key in sorted(manifest.passes):
        print(f"{'PASS' if manifest.passes[key] else 'FAIL'}  {key}")
    print(f"manifest: {os.path.join(manifest.out_dir, cfg.id + '_manifest.json')}")
    return EXIT_PASS if manifest.passed else EXIT_FAIL


def cmd_blowup(args):
    cfg = _config(args)
    os.makedirs(cfg.output, exist_ok=True)
    cells = max(cfg.resolutions)
    result = solve_config(cfg, cells)
    if not result.converged and args.strict:
        return EXIT_SOLVER
    u = result.field
    if args.x0:
        x0 = np.array([float(v) for v in args.x0.split(",")])
    else:
        x0 = nearest_free_boundary_point(u, [0.5 * (a + b) for a, b in
                                             zip(cfg.data["domain"]["lo"], cfg.data["domain"]["hi"])])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        bl, rep = blowup_run(cfg.phi, u, x0, args.j_max, cfg.lam)
    rep.to_csv(os.path.join(cfg.output, f"{cfg.id}_blowup_{cells}.csv"))
    rep.to_json(os.path.join(cfg.output, f"{cfg.id}_blowup_{cells}.json"))
    for j, r, s, res, w in zip(bl.j, bl.r, bl.sigma, bl.residuals, bl.weights):
        print(f"j={j} r={r:g} sigma={s:.6g} residual={res:.3e} weight={w:.6g}")
    return EXIT_PASS if rep.passed else EXIT_FAIL


def cmd_report(args):
    rows, text, conflicts = report(args.manifests, args.out)
    print(text, end="")
    return EXIT_PASS


def cmd_check_phi(args):
    cfg = _config(args)
    phi = cfg.phi
    env = phi.envelope
    verdicts = [check_inc(phi, env.p), check_dec(phi, env.q), check_A0(phi, env.L),
                check_sandwich(phi)]
    if cfg.d == 2 and not phi.autonomous:
        grid = cfg.grid(min(cfg.resolutions))
        rng = np.random.default_rng(cfg.seed)
        lo, hi = np.array(grid.lo), np.array(grid.hi)
        balls = [Ball(tuple(lo + (hi - lo) * rng.uniform(0.2, 0.8, 2)), 0.1 * float(np.min(hi - lo)))
                 for _ in range(5)]
        verdicts.append(check_VA1(phi, env.omega, balls, grid))
    for v in verdicts:
        print(f"{'PASS' if v.passed else 'FAIL'}  {v.name:<10} worst={v.worst:.3e}")
    return EXIT_PASS if all(v.passed for v in verdicts) else EXIT_FAIL


def build_parser():
    parser = argparse.ArgumentParser(prog="orliczfb", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, resolutions=True):
        p.add_argument("--config", required=True,
                       help="config path or bundled name (" + ", ".join(bundled_configs()) + ")")
        p.add_argument("--out", help="output directory (default: the config's 'output')")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--strict", action="store_true", help="exit 3 if a solve does not converge")
        if resolutions:
            p.add_argument("--resolutions", help="comma-separated cells per axis, e.g. 64,128")
        return p

    common(sub.add_parser("solve", help="minimize the energy")).set_defaults(func=cmd_solve)
    p = common(sub.add_parser("replace", help="harmonic replacement of the boundary data on a ball"))
    p.add_argument("--ball", required=True, help="c1[,c2],radius")
    p.set_defaults(func=cmd_replace)
    common(sub.add_parser("verify", help="solve and run the estimate suite")).set_defaults(func=cmd_verify)
    p = common(sub.add_parser("blowup", help="blow-up sequence at a free-boundary point"))
    p.add_argument("--x0", help="centre (default: free-boundary node nearest the domain centre)")
    p.add_argument("--j-max", type=int, default=5)
    p.set_defaults(func=cmd_blowup)
    p = sub.add_parser("report", help="merge run manifests")
    p.add_argument("manifests", nargs="*")
    p.add_argument("--out", help="directory for merged.csv and summary.txt")
    p.set_defaults(func=cmd_report)
    common(sub.add_parser("check-phi", help="structural condition checks")).set_defaults(func=cmd_check_phi)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except SolverFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (OrliczFBError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
