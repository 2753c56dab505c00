"""Batch front end: text configs in, machine-readable reports out.

Configs are INI-style section/key files validated against a closed schema
(unknown sections or keys are rejected before any compute).  Every run writes
``report.json`` plus optional CSV tables into the output directory and prints
the report's determinism hash; the hash covers everything except timestamps
and timings, so identical configs and seeds give identical hashes for any
worker count.

Exit codes: 0 success, 2 property-check failure, 3 solver non-convergence,
4 configuration error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    ConfigError,
    ConvergenceError,
    LyapvarError,
    OptimizationError,
)
from .functionals import OptConfig, decay_rate_variational
from .gamma import compare_average, compute_gamma
from .grid import TorusGrid
from .montecarlo import TiltSpec, mc_free_energy, mc_survival_decay_1d
from .potential import PotentialSpec, realize
from .spectral import SpectralDecayEvaluator, decay_rate_spectral, r_transform

SUBCOMMANDS = (
    "gamma",
    "sigma",
    "rtransform",
    "lyapunov",
    "mc",
    "compare-average",
    "sweep",
    "selftest",
)

# section -> key -> (parser, default); None default means required-when-used
_SCHEMA = {
    "grid": {
        "d": (int, 1),
        "n": (int, 128),
        "period": (float, 1.0),
    },
    "potential": {
        "kind": (str, "constant"),
        "v": (float, 1.0),
        "cells": (int, 8),
        "lo": (float, 0.0),
        "hi": (float, 2.0),
        "rate": (float, 20.0),
        "amp": (float, 1.0),
        "r0": (float, 0.1),
        "seed": (int, 0),
        "mollify_eps": (float, 0.0),
        "floor": (float, 0.0),
        "cap": ("optional_float", None),
    },
    "run": {
        "y": ("points", [[1.0]]),
        "lambda": ("points", [[0.0]]),
        "routes": ("routes", ["root", "infsup", "supinf"]),
        "seed": (int, 0),
        "workers": (int, 1),
        "gamma_tol": (float, 1e-3),
    },
    "optimizer": {
        "modes": ("optional_int", None),
        "n_starts": (int, 5),
        "max_iter": (int, 500),
        "gtol": (float, 1e-5),
        "step0": (float, 0.1),
        "shrink": (float, 0.5),
        "armijo_c": (float, 1e-4),
        "fd_step": (float, 1e-6),
        "start_scale": (float, 0.3),
    },
    "solver": {
        "cg_tol": (float, 1e-8),
        "cg_maxiter": ("optional_int", None),
        "eig_tol": (float, 1e-7),
        "transform_tol": (float, 1e-4),
        "angles": (int, 64),
        "angle_tol": (float, 1e-6),
    },
    "mc": {
        "t": (float, 20.0),
        "dt": (float, 1e-2),
        "npaths": (int, 10_000),
        "r_list": ("floats", [4.0, 6.0, 8.0, 10.0]),
        "use_tilt": ("bool", False),
        "tilt_speed": (float, 1.0),
        "tilt_flux": (float, 1.0),
        "t_max": (float, 1000.0),
        "min_hits": (int, 100),
    },
    "output": {
        "dir": (str, "out"),
    },
}

ALL_ROUTES = ("root", "infsup", "supinf")


def _parse_points(text):
    """Semicolon-separated points; components split on commas or whitespace."""
    pts = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        comps = [c for c in chunk.replace(",", " ").split() if c]
        pts.append([float(c) for c in comps])
    return pts


def _parse_value(kind, raw):
    if kind is int:
        return int(raw)
    if kind is float:
        return float(raw)
    if kind is str:
        return raw.strip()
    if kind == "optional_float":
        raw = raw.strip()
        return float(raw) if raw else None
    if kind == "optional_int":
        raw = raw.strip()
        return int(raw) if raw else None
    if kind == "bool":
        val = raw.strip().lower()
        if val in ("true", "yes", "1", "on"):
            return True
        if val in ("false", "no", "0", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if kind == "floats":
        return [float(c) for c in raw.replace(",", " ").split()]
    if kind == "points":
        return _parse_points(raw)
    if kind == "routes":
        routes = [r.strip() for r in raw.replace(",", " ").split() if r.strip()]
        for r in routes:
            if r not in ALL_ROUTES:
                raise ValueError(f"unknown route {r!r}")
        return routes
    raise ValueError(f"unhandled schema kind {kind!r}")


def load_config(path):
    """Parse and validate a config file against the closed schema."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        parser.read(path)
    except configparser.Error as err:
        raise ConfigError(f"config parse failure: {err}") from None
    config = {sec: {k: d for k, (_, d) in keys.items()} for sec, keys in _SCHEMA.items()}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown config key {key!r} in [{section}]")
            kind, _ = _SCHEMA[section][key]
            try:
                config[section][key] = _parse_value(kind, raw)
            except ValueError as err:
                raise ConfigError(f"bad value for [{section}] {key}: {err}") from None
    if config["grid"]["d"] not in (1, 2):
        raise ConfigError("grid d must be 1 or 2")
    for pt in config["run"]["y"] + config["run"]["lambda"]:
        if len(pt) != config["grid"]["d"]:
            raise ConfigError("y and lambda entries must match the grid dimension")
    return config


def _build(config):
    grid = TorusGrid((config["grid"]["n"],) * config["grid"]["d"], config["grid"]["period"])
    pot = config["potential"]
    spec = PotentialSpec(
        kind=pot["kind"],
        v=pot["v"],
        cells=pot["cells"],
        lo=pot["lo"],
        hi=pot["hi"],
        rate=pot["rate"],
        amp=pot["amp"],
        r0=pot["r0"],
        seed=pot["seed"],
        mollify_eps=pot["mollify_eps"],
        floor=pot["floor"],
        cap=pot["cap"],
    )
    V = realize(spec, grid)
    opt = config["optimizer"]
    sol = config["solver"]
    cfg = OptConfig(
        modes=opt["modes"],
        n_starts=opt["n_starts"],
        start_scale=opt["start_scale"],
        seed=config["run"]["seed"],
        max_iter=opt["max_iter"],
        gtol=opt["gtol"],
        step0=opt["step0"],
        shrink=opt["shrink"],
        armijo_c=opt["armijo_c"],
        fd_step=opt["fd_step"],
        cg_tol=sol["cg_tol"],
        cg_maxiter=sol["cg_maxiter"],
        angles=sol["angles"],
        angle_tol=sol["angle_tol"],
    )
    return V, cfg


def _jsonify(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonify(obj.tolist())
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return _jsonify(dataclasses.asdict(obj))
    if isinstance(obj, float) and not np.isfinite(obj):
        return repr(obj)
    return obj


def determinism_hash(report):
    """Hash of the report content excluding timestamps, timings, and paths."""
    trimmed = {
        k: v
        for k, v in report.items()
        if k not in ("determinism_hash", "timestamps", "timing_seconds")
    }
    if isinstance(trimmed.get("config"), dict):
        trimmed["config"] = {k: v for k, v in trimmed["config"].items() if k != "output"}
        if isinstance(trimmed["config"].get("run"), dict):
            # worker count changes scheduling, never results
            trimmed["config"]["run"] = {
                k: v for k, v in trimmed["config"]["run"].items() if k != "workers"
            }
    blob = json.dumps(_jsonify(trimmed), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _check(checks, name, passed, detail):
    checks.append({"name": name, "passed": bool(passed), "detail": detail})


def _cmd_gamma(config, V, cfg, outdir, report):
    checks = report["checks"]
    rows = []
    for y in config["run"]["y"]:
        res = compute_gamma(
            V, np.array(y), tol=config["run"]["gamma_tol"], cfg=cfg,
            routes=tuple(config["run"]["routes"]),
        )
        entry = {"y": y, **res.values()}
        if res.minimax_gap is not None:
            entry["minimax_gap"] = res.minimax_gap
            _check(checks, f"minimax gap y={y}", res.minimax_gap < 1e-2, res.minimax_gap)
        vals = list(res.values().values())
        if len(vals) >= 2:
            spread = (max(vals) - min(vals)) / max(abs(max(vals)), 1e-300)
            entry["route_spread"] = spread
            _check(checks, f"route agreement y={y}", spread < 2e-2, spread)
        rows.append(entry)
    report["results"]["gamma"] = rows


def _cmd_sigma(config, V, cfg, outdir, report):
    checks = report["checks"]
    rows = []
    eig_tol = config["solver"]["eig_tol"]
    for lam in config["run"]["lambda"]:
        lam_arr = np.array(lam)
        var, _ = decay_rate_variational(lam_arr, V, cfg)
        spec = decay_rate_spectral(V, lam_arr, tol=eig_tol)
        gap = abs(var.value - spec.value) / max(abs(spec.value), 1e-300)
        rows.append(
            {
                "lambda": lam,
                "variational": var.value,
                "spectral": spec.value,
                "relative_gap": gap,
            }
        )
        _check(checks, f"rate route agreement lambda={lam}", gap < 2e-2, gap)
    report["results"]["sigma"] = rows


def _cmd_rtransform(config, V, cfg, outdir, report):
    evaluator = SpectralDecayEvaluator(V, tol=config["solver"]["eig_tol"])
    rows = []
    root_rows = []
    for y in config["run"]["y"]:
        res = r_transform(
            evaluator,
            np.array(y),
            tol=config["solver"]["transform_tol"],
            angles=config["solver"]["angles"],
        )
        rows.append({"y": y, "value": res.value, "eta_star": _jsonify(res.eta_star)})
        for entry in res.roots:
            root_rows.append([json.dumps(y)] + entry["eta"] + [entry["root"]])
    report["results"]["rtransform"] = rows
    d = V.grid.d
    header = ["y"] + [f"eta_{i}" for i in range(d)] + ["root"]
    _write_csv(outdir / "transform_roots.csv", header, root_rows)
    report["results"]["roots_csv"] = "transform_roots.csv"


def _cmd_lyapunov(config, V, cfg, outdir, report):
    _cmd_gamma(config, V, cfg, outdir, report)
    _cmd_rtransform(config, V, cfg, outdir, report)
    checks = report["checks"]
    for grow, rrow in zip(report["results"]["gamma"], report["results"]["rtransform"]):
        if "root" in grow:
            gap = abs(grow["root"] - rrow["value"]) / max(abs(grow["root"]), 1e-300)
            _check(checks, f"transform vs root y={grow['y']}", gap < 2e-2, gap)
    if V.grid.d == 1 and V.min_value() > 0:
        mc = config["mc"]
        tilt = (
            TiltSpec(flux=mc["tilt_flux"], speed=mc["tilt_speed"]) if mc["use_tilt"] else None
        )
        dec = mc_survival_decay_1d(
            V,
            mc["r_list"],
            npaths=mc["npaths"],
            seed=config["run"]["seed"],
            tilt=tilt,
            dt=mc["dt"],
            t_max=mc["t_max"],
            workers=config["run"]["workers"],
            min_hits=mc["min_hits"],
        )
        report["results"]["mc_survival"] = {
            "slope": dec.slope,
            "intercept": dec.intercept,
            "table": dec.table,
        }
        _write_csv(
            outdir / "survival.csv",
            ["r", "log_e", "estimate", "hits", "estimator_variance"],
            [
                [row["r"], row["log_e"], row["estimate"], row["hits"], row["estimator_variance"]]
                for row in dec.table
            ],
        )
        groot = report["results"]["gamma"][0].get("root")
        if groot:
            _check(
                report["checks"],
                "mc slope vs root",
                abs(dec.slope - groot) / groot < 0.1,
                dec.slope,
            )


def _cmd_mc(config, V, cfg, outdir, report):
    mc = config["mc"]
    rows = []
    for lam in config["run"]["lambda"]:
        est = mc_free_energy(
            V,
            np.array(lam),
            t=mc["t"],
            dt=mc["dt"],
            npaths=mc["npaths"],
            seed=config["run"]["seed"],
            workers=config["run"]["workers"],
        )
        rows.append(dataclasses.asdict(est) | {"lambda": lam})
    report["results"]["mc_free_energy"] = rows
    if V.grid.d == 1 and V.min_value() > 0 and mc["r_list"]:
        tilt = (
            TiltSpec(flux=mc["tilt_flux"], speed=mc["tilt_speed"]) if mc["use_tilt"] else None
        )
        dec = mc_survival_decay_1d(
            V,
            mc["r_list"],
            npaths=mc["npaths"],
            seed=config["run"]["seed"],
            tilt=tilt,
            dt=mc["dt"],
            t_max=mc["t_max"],
            workers=config["run"]["workers"],
            min_hits=mc["min_hits"],
        )
        report["results"]["mc_survival"] = {
            "slope": dec.slope,
            "intercept": dec.intercept,
            "table": dec.table,
        }
        _write_csv(
            outdir / "survival.csv",
            ["r", "log_e", "estimate", "hits", "estimator_variance"],
            [
                [row["r"], row["log_e"], row["estimate"], row["hits"], row["estimator_variance"]]
                for row in dec.table
            ],
        )


def _cmd_compare_average(config, V, cfg, outdir, report):
    checks = report["checks"]
    rows = []
    for y in config["run"]["y"]:
        cmp = compare_average(V, np.array(y), tol=config["run"]["gamma_tol"], cfg=cfg)
        rows.append(dataclasses.asdict(cmp) | {"y": y})
        _check(checks, f"averaged dominates y={y}", cmp.inequality_ok, cmp.gap)
        closed_gap = abs(cmp.gamma_averaged - cmp.averaged_closed_form) / cmp.averaged_closed_form
        _check(checks, f"averaged closed form y={y}", closed_gap < 1e-2, closed_gap)
    report["results"]["compare_average"] = rows


def _cmd_sweep(config, V, cfg, outdir, report):
    routes = config["run"]["routes"]
    header = (
        ["y", "lambda"]
        + [f"gamma_{r}" for r in routes]
        + ["sigma_variational", "sigma_spectral", "transform_spectral", "status"]
    )
    rows = []
    evaluator = SpectralDecayEvaluator(V, tol=config["solver"]["eig_tol"])
    gamma_cache = {}
    transform_cache = {}
    for y in config["run"]["y"]:
        for lam in config["run"]["lambda"]:
            row = [json.dumps(y), json.dumps(lam)]
            status = "ok"
            ykey = tuple(y)
            try:
                if ykey not in gamma_cache:
                    res = compute_gamma(
                        V, np.array(y), tol=config["run"]["gamma_tol"], cfg=cfg,
                        routes=tuple(routes), refine=False,
                    )
                    gamma_cache[ykey] = [res.values().get(r) for r in routes]
                row += gamma_cache[ykey]
            except LyapvarError as err:
                row += [None] * len(routes)
                status = f"gamma:{type(err).__name__}"
            try:
                var, _ = decay_rate_variational(np.array(lam), V, cfg)
                row.append(var.value)
            except LyapvarError as err:
                row.append(None)
                status = f"sigma_var:{type(err).__name__}"
            try:
                row.append(evaluator.at(np.array(lam)))
            except LyapvarError as err:
                row.append(None)
                status = f"sigma_spec:{type(err).__name__}"
            try:
                if ykey not in transform_cache:
                    transform_cache[ykey] = r_transform(
                        evaluator, np.array(y), tol=config["solver"]["transform_tol"]
                    ).value
                row.append(transform_cache[ykey])
            except LyapvarError as err:
                row.append(None)
                status = f"transform:{type(err).__name__}"
            row.append(status)
            rows.append(row)
    _write_csv(outdir / "sweep.csv", header, rows)
    report["results"]["sweep"] = {"rows": len(rows), "csv": "sweep.csv"}


def _cmd_selftest(config, V, cfg, outdir, report):
    """Small invariant battery over every module, printed as a table."""
    from . import corrector, functionals, grid, potential

    checks = report["checks"]
    g1 = TorusGrid((64,))
    x = g1.axes()[0]

    f = grid.ScalarField(g1, np.sin(2 * np.pi * x))
    wantd = 2 * np.pi * np.cos(2 * np.pi * x)
    err = np.abs(grid.gradient(f).components[0].values - wantd).max()
    _check(checks, "spectral derivative", err < 1e-10, err)

    h = grid.ScalarField(g1, np.cos(4 * np.pi * x))
    ibp = abs(
        np.mean(f.values * grid.gradient(h).components[0].values)
        + np.mean(grid.gradient(f).components[0].values * h.values)
    )
    _check(checks, "integration by parts", ibp < 1e-10, ibp)

    fdens = grid.ScalarField(g1, 1.0 + 0.5 * np.cos(2 * np.pi * x))
    hval = corrector.cell_energy(np.array([1.0]), fdens)
    _check(checks, "harmonic-mean cell energy", abs(hval - np.sqrt(3) / 2) < 1e-6, hval)
    _check(
        checks,
        "flat-density cell energy",
        abs(corrector.cell_energy(np.array([1.0]), grid.constant_field(g1, 1.0)) - 1.0) < 1e-10,
        1.0,
    )

    Vc = potential.realize(PotentialSpec("constant", v=0.5), g1)
    from .gamma import gamma_root

    groot = gamma_root(Vc, np.array([1.0]), tol=1e-3, cfg=cfg).value_root
    _check(checks, "constant-potential root", abs(groot - 1.0) < 0.01, groot)

    from .spectral import principal_eigenvalue

    eig = principal_eigenvalue(Vc, [0.0], tol=1e-9)
    _check(checks, "constant eigenvalue", abs(eig.principal_value + 0.5) < 1e-8, eig.principal_value)

    res = r_transform(lambda s, eta: 0.5, np.array([1.0]), tol=1e-7)
    _check(checks, "constant transform", abs(res.value - 1.0) < 1e-5, res.value)

    est = mc_free_energy(Vc, [0.0], t=10.0, npaths=1000, seed=1)
    _check(checks, "deterministic constant weights", abs(est.value + 0.5) < 1e-12, est.value)
    est2 = mc_free_energy(Vc, [0.0], t=10.0, npaths=1000, seed=1, workers=4)
    _check(checks, "worker invariance", est.value == est2.value, est2.value)

    report["results"]["selftest"] = {"checks_run": len(checks)}
    for c in checks:
        print(f"  [{'PASS' if c['passed'] else 'FAIL'}] {c['name']}: {c['detail']}")


_DISPATCH = {
    "gamma": _cmd_gamma,
    "sigma": _cmd_sigma,
    "rtransform": _cmd_rtransform,
    "lyapunov": _cmd_lyapunov,
    "mc": _cmd_mc,
    "compare-average": _cmd_compare_average,
    "sweep": _cmd_sweep,
    "selftest": _cmd_selftest,
}


def run(subcommand, config_path, seed=None, workers=None, out=None):
    """Execute one subcommand; returns (exit_code, report dict)."""
    started = time.time()
    report = {
        "version": __version__,
        "subcommand": subcommand,
        "results": {},
        "checks": [],
        "errors": [],
    }
    try:
        if subcommand not in _DISPATCH:
            raise ConfigError(f"unknown subcommand {subcommand!r}")
        config = load_config(config_path)
        if seed is not None:
            config["run"]["seed"] = int(seed)
        if workers is not None:
            config["run"]["workers"] = int(workers)
        if out is not None:
            config["output"]["dir"] = str(out)
        report["config"] = config
        V, cfg = _build(config)
    except (ConfigError, LyapvarError) as err:
        report["errors"].append({"code": "config", "type": type(err).__name__, "message": str(err)})
        _finalize(report, None, started)
        return 4, report

    outdir = Path(config["output"]["dir"])
    outdir.mkdir(parents=True, exist_ok=True)
    code = 0
    try:
        _DISPATCH[subcommand](config, V, cfg, outdir, report)
    except (ConvergenceError, OptimizationError) as err:
        report["errors"].append(
            {"code": "convergence", "type": type(err).__name__, "message": str(err)}
        )
        code = 3
    except LyapvarError as err:
        report["errors"].append({"code": "compute", "type": type(err).__name__, "message": str(err)})
        code = 3
    if code == 0 and any(not c["passed"] for c in report["checks"]):
        code = 2
    _finalize(report, outdir, started)
    return code, report


def _finalize(report, outdir, started):
    report["timing_seconds"] = {"total": time.time() - started}
    report["timestamps"] = {"started_unix": started, "finished_unix": time.time()}
    report["determinism_hash"] = determinism_hash(report)
    print(f"determinism_hash {report['determinism_hash']}")
    if outdir is not None:
        with open(Path(outdir) / "report.json", "w") as fh:
            json.dump(_jsonify(report), fh, indent=2, sort_keys=True)


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="lyapvar",
        description="Decay rates of Brownian motion in periodic potential: "
        "variational, spectral, and Monte Carlo routes.",
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", required=True, help="path to the INI config file")
    parser.add_argument("--seed", type=int, default=None, help="override [run] seed")
    parser.add_argument("--workers", type=int, default=None, help="override [run] workers")
    parser.add_argument("--out", default=None, help="override [output] dir")
    args = parser.parse_args(argv)
    code, _ = run(args.subcommand, args.config, seed=args.seed, workers=args.workers, out=args.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
