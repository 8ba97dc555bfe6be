"""Run an experiment: solve at every resolution, evaluate the estimate suite, persist."""
import json
import logging
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field as dc_field

import numpy as np

from ..estimates import (EstimateReport, Row, blowup_run, caccioppoli_ratio, comparison_estimate,
                         free_boundary_points, gradient_excess_decay, growth_dichotomy,
                         holder_seminorm, lipschitz_certificate, maximal_function, morrey_decay,
                         nearest_free_boundary_point, poincare_check, reverse_holder, stability)
from ..exceptions import OrliczFBError
from ..grid import Field, grad_norm, save_field_binary, save_field_csv
from ..solver import Functional, check_almost_min, minimize, solve_1d_exact
from ..solver.almost_min import CompetitorSpec
from .config import ExperimentConfig

__all__ = ["RunManifest", "SolverFailure", "run", "run_many", "solve_config", "evaluate"]

log = logging.getLogger(__name__)


class SolverFailure(RuntimeError):
    """The solver did not converge and the run is strict."""


@dataclass
class RunManifest:
    id: str
    config_hash: str
    family: str
    out_dir: str
    resolutions: list
    fields: dict = dc_field(default_factory=dict)        # cells -> field path
    reports: dict = dc_field(default_factory=dict)       # "<estimate>@<cells>" -> csv path
    passes: dict = dc_field(default_factory=dict)        # same keys -> bool
    solver: dict = dc_field(default_factory=dict)        # cells -> {energy, converged}
    wall_times: dict = dc_field(default_factory=dict)
    passed: bool = True

    def to_json(self, path=None):
        text = json.dumps(asdict(self), indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            data = json.load(fh)
        return cls(**data)


# ---------------------------------------------------------------------------
# solving

def solve_config(config, cells):
    """Minimize the configured energy on the grid with ``cells`` cells per axis."""
    grid = config.grid(cells)
    boundary = Field.from_expression(grid, config.boundary)
    return minimize(Functional(config.phi, config.lam, grid), boundary, config.solve_options())


# ---------------------------------------------------------------------------
# estimates

def _centre(config):
    dom = config.data["domain"]
    return tuple(0.5 * (a + b) for a, b in zip(dom["lo"], dom["hi"]))


def _width(config):
    dom = config.data["domain"]
    return min(b - a for a, b in zip(dom["lo"], dom["hi"]))


def _balls(config, params):
    specs = params.get("balls") or [{"center": list(_centre(config)), "radius": 0.1 * _width(config)}]
    return [config.ball(b) for b in specs]


def _merge(name, reports, **meta):
    rows = [row for rep in reports for row in rep.rows]
    metadata = dict(reports[0].metadata) if reports else {}
    metadata.update(meta)
    return EstimateReport(name, rows, passed=all(r.passed for r in reports), metadata=metadata)


def _exact_1d(config, u, result):
    dom = config.data["domain"]
    if [float(v) for v in dom["lo"]] != [0.0] or [float(v) for v in dom["hi"]] != [1.0]:
        raise ValueError("exact_1d compares on the unit interval")
    h = u.grid.hmax
    oracle = solve_1d_exact(config.phi, config.lam, u.values[0], u.values[-1])
    rows = [Row("exact_1d:energy", h, result.energy, oracle.energy,
                abs(result.energy - oracle.energy), abs(result.energy - oracle.energy) <= 3 * h),
            Row("exact_1d:slope_residual", h, oracle.slope_residual, 1e-10,
                oracle.slope_residual, oracle.slope_residual <= 1e-10)]
    fb = free_boundary_points(u)[:, 0]
    for k, b in enumerate(oracle.breakpoints):
        if 0.0 < b < 1.0:
            found = fb[np.argmin(np.abs(fb - b))] if fb.size else np.nan
            err = abs(found - b)
            rows.append(Row(f"exact_1d:breakpoint:{k}", h, float(found), b, float(err),
                            bool(err <= 2 * h)))
    return EstimateReport("exact_1d", rows, passed=all(r.passed for r in rows),
                          metadata={"h": h, "kind": oracle.kind, "lambda_star": oracle.lambda_star})


def evaluate(config, name, params, u, result):
    """One estimate at one resolution, as an :class:`EstimateReport`."""
    phi, lam = config.phi, config.lam
    h = u.grid.hmax
    if name == "exact_1d":
        return _exact_1d(config, u, result)
    if name == "caccioppoli":
        return _merge(name, [caccioppoli_ratio(phi, lam, u, b) for b in _balls(config, params)])
    if name == "reverse_holder":
        s0, t = params.get("s0", 0.1), params.get("t", 1.0)
        return _merge(name, [reverse_holder(phi, lam, u, b, s0, t) for b in _balls(config, params)])
    if name == "poincare":
        return _merge(name, [poincare_check(phi, u, b, params.get("s", 1.0))
                             for b in _balls(config, params)])
    if name == "comparison":
        return _merge(name, [comparison_estimate(phi, lam, u, b, s0=params.get("s0", 0.1),
                                                 beta=params.get("beta", 1.0))
                             for b in _balls(config, params)])
    if name == "morrey":
        w = _width(config)
        return morrey_decay(u, tuple(params.get("center", _centre(config))),
                            params.get("radii", [0.05 * w, 0.1 * w, 0.2 * w]),
                            params.get("sigma", 0.1))
    if name == "holder":
        alpha = params.get("alpha", 0.5)
        region = config.ball(params["region"]) if params.get("region") else None
        value = holder_seminorm(u, alpha, region, params.get("budget", 10_000_000), config.seed ^ 0x5EED)
        row = Row(f"holder:alpha={alpha:g}", h, value, value, 1.0, bool(np.isfinite(value)))
        return EstimateReport(name, [row], passed=row.passed, metadata={"h": h, "alpha": alpha})
    if name == "gradient_excess":
        w = _width(config)
        return gradient_excess_decay(u, tuple(params.get("center", _centre(config))),
                                     params.get("radii", [0.025 * w, 0.05 * w, 0.1 * w]),
                                     params.get("alpha_min", 0.0))
    if name == "free_boundary":
        n = len(free_boundary_points(u))
        row = Row("free_boundary:count", h, float(n), n * h, n * h, True)
        return EstimateReport(name, [row], metadata={"h": h})
    if name == "growth":
        x0 = nearest_free_boundary_point(u, params.get("target", _centre(config)))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return growth_dichotomy(u, x0, params.get("k_max", 5), k_min=params.get("k_min", 1))
    if name == "lipschitz":
        region = config.ball(params["region"]) if params.get("region") else None
        return lipschitz_certificate(u, region, lip_tol=params.get("lip_tol", 0.1))
    if name == "blowup":
        x0 = nearest_free_boundary_point(u, params.get("target", _centre(config)))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            _, rep = blowup_run(phi, u, x0, params.get("j_max", 5), lam, R=params.get("R", 1.0))
        return rep
    if name == "maximal":
        g = grad_norm(u)
        Mf = maximal_function(g, u.grid)
        row = Row("maximal:grad", h, float(Mf.max()), float(g.max()),
                  float(Mf.max() / g.max()) if g.max() > 0 else 0.0, True)
        return EstimateReport(name, [row], metadata={"h": h})
    if name == "almost_min":
        cert = check_almost_min(Functional(phi, lam, u.grid), u, params.get("kappa", 0.0),
                                params.get("beta", 1.0), _balls(config, params),
                                CompetitorSpec(seed=config.seed ^ 0x5EED))
        rows = []
        for ball in cert.balls:
            recs = [r for r in cert.records if r["center"] == ball.center and r["radius"] == ball.radius]
            worst = max(recs, key=lambda r: r["ratio"])
            rows.append(Row("almost_min@(" + ",".join(f"{c:g}" for c in ball.center) + ")",
                            ball.radius, worst["F_u"], worst["F_w"], worst["ratio"],
                            all(r["pass"] for r in recs)))
        return EstimateReport(name, rows, passed=cert.passed,
                              metadata={"h": h, "kappa": cert.kappa, "beta": cert.beta})
    raise ValueError(f"unknown estimate {name!r}")


# ---------------------------------------------------------------------------
# orchestration

def _write_report(rep, path):
    rep.to_csv(path)
    return path


def run(config, out=None, strict=False):
    """Solve and verify ``config`` at each resolution; returns a :class:`RunManifest`."""
    if not isinstance(config, ExperimentConfig):
        config = ExperimentConfig(config)
    out_dir = out or config.output
    os.makedirs(out_dir, exist_ok=True)
    cid = config.id
    manifest = RunManifest(cid, config.hash(), config.phi.family, out_dir, config.resolutions)
    fields, reports = {}, {}
    for cells in sorted(config.resolutions):
        t0 = time.perf_counter()
        result = solve_config(config, cells)
        manifest.wall_times[f"solve@{cells}"] = time.perf_counter() - t0
        if not result.converged:
            msg = f"{cid}: solver did not converge at {cells} cells"
            if strict:
                raise SolverFailure(msg)
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
        u = result.field
        fields[cells] = u
        fpath = os.path.join(out_dir, f"{cid}_field_{cells}.ofbf")
        save_field_binary(u, fpath)
        save_field_csv(u, os.path.join(out_dir, f"{cid}_field_{cells}.csv"))
        manifest.fields[str(cells)] = fpath
        record = {"config_hash": manifest.config_hash, "cells": cells,
                  "options": config.solve_options().to_dict(), "energy": result.energy,
                  "converged": result.converged, "smoothed_stage_energy": result.smoothed_stage_energy,
                  "stages": result.log}
        with open(os.path.join(out_dir, f"{cid}_solver_{cells}.json"), "w") as fh:
            json.dump(record, fh, indent=2, sort_keys=True, default=float)
            fh.write("\n")
        manifest.solver[str(cells)] = {"energy": result.energy, "converged": result.converged}
        for est in config.estimates:
            name = est["name"]
            params = {k: v for k, v in est.items() if k != "name"}
            t0 = time.perf_counter()
            try:
                rep = evaluate(config, name, params, u, result)
            except (OrliczFBError, ValueError) as exc:
                warnings.warn(f"{cid}: {name} at {cells} cells failed: {exc}", RuntimeWarning,
                              stacklevel=2)
                rep = EstimateReport(name, [], passed=False, metadata={"h": u.grid.hmax,
                                                                        "error": str(exc)})
            manifest.wall_times[f"{name}@{cells}"] = time.perf_counter() - t0
            key = f"{name}@{cells}"
            reports[key] = rep
            manifest.reports[key] = _write_report(rep, os.path.join(out_dir, f"{cid}_{name}_{cells}.csv"))
            manifest.passes[key] = bool(rep.passed)

    res = sorted(config.resolutions)
    for coarse, fine in zip(res[:-1], res[1:]):
        for est in config.estimates:
            name = est["name"]
            key = f"{name}@{coarse}-{fine}"
            if name == "lipschitz":
                region = config.ball(est["region"]) if est.get("region") else None
                rep = lipschitz_certificate(fields[coarse], region, fields[fine],
                                            est.get("lip_tol", 0.1))
            elif "stability_tol" in est:
                if not (reports[f"{name}@{coarse}"].rows and reports[f"{name}@{fine}"].rows):
                    continue
                rep = stability(reports[f"{name}@{coarse}"], reports[f"{name}@{fine}"],
                                est["stability_tol"])
            else:
                continue
            manifest.reports[key] = _write_report(rep, os.path.join(
                out_dir, f"{cid}_{name}_{coarse}-{fine}.csv"))
            manifest.passes[key] = bool(rep.passed)
    manifest.passed = all(manifest.passes.values())
    manifest.to_json(os.path.join(out_dir, f"{cid}_manifest.json"))
    summary = {"id": cid, "config_hash": manifest.config_hash, "passed": manifest.passed,
               "passes": dict(sorted(manifest.passes.items()))}
    with open(os.path.join(out_dir, f"{cid}_summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def _run_one(args):
    config, out, strict = args
    return run(config, out, strict)


def run_many(configs, out_root=None, strict=False, jobs=1):
    """Independent runs, optionally in a process pool; results keep input order."""
    tasks = [(c, None if out_root is None else os.path.join(out_root, c.id), strict)
             for c in configs]
    if jobs <= 1 or len(tasks) <= 1:
        return [_run_one(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_one, tasks))
