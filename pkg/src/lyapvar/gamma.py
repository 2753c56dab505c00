"""Decay-rate computation along a direction, three ways.

Route one finds the root of the concave decreasing margin
inf_f {2 K(f) - l^2 J(f)} by bisection in l.  Route two minimizes over
densities the supremum over directions of 2 K <y,eta>^2 / H(eta, f) and takes
a square root.  Route three swaps the order: per direction an inner density
minimization, then a maximization over the direction sweep.  Agreement of the
three numbers is the central cross-check of the package.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .corrector import _golden_refine, flux_dual_value, sweep_directions
from .errors import DegenerateRateError, NumericalError, ParameterError
from .functionals import OptConfig, _DensityObjective, minimize_density, root_margin
from .grid import TorusGrid
from .potential import realize


@dataclass
class GammaResult:
    """Per-direction decay rate with route values, gaps, and diagnostics."""

    y: np.ndarray
    value_root: float | None = None
    value_infsup: float | None = None
    value_supinf: float | None = None
    minimax_gap: float | None = None
    best_params: object = None
    diagnostics: dict = dataclasses.field(default_factory=dict)

    def values(self):
        out = {}
        if self.value_root is not None:
            out["root"] = self.value_root
        if self.value_infsup is not None:
            out["infsup"] = self.value_infsup
        if self.value_supinf is not None:
            out["supinf"] = self.value_supinf
        return out


def gamma_root(V, y, tol=1e-3, cfg=None):
    """Bisection for the root of the margin function.

    Bracket starts at [0, |y| sqrt(2 v_max)]; the flat density forces the
    margin at the upper end to be nonpositive, and the bracket is widened as
    a safety net if optimization noise breaks that.  ``tol`` is the relative
    bracket width at exit.
    """
    cfg = cfg or OptConfig()
    y = np.asarray(y, dtype=float).reshape(-1)
    ynorm = float(np.linalg.norm(y))
    if ynorm == 0.0:
        return GammaResult(y=y, value_root=0.0, diagnostics={"convention": "y=0"})

    margin0, res = root_margin(0.0, y, V, cfg)
    if margin0 <= 0.0:
        raise DegenerateRateError(
            "zero-drift margin is nonpositive; the decay rate degenerates"
        )
    warm = res
    evals = 1

    hi = ynorm * np.sqrt(2.0 * V.v_max)
    margin_hi, warm = _margin(hi, y, V, cfg, warm)
    evals += 1
    widenings = 0
    while margin_hi > 0.0:
        widenings += 1
        if widenings > 6:
            raise NumericalError("could not bracket the margin root")
        hi *= 1.5
        margin_hi, warm = _margin(hi, y, V, cfg, warm)
        evals += 1

    lo = 0.0
    while (hi - lo) > tol * hi:
        mid = 0.5 * (lo + hi)
        margin_mid, warm = _margin(mid, y, V, cfg, warm)
        evals += 1
        if margin_mid > 0.0:
            lo = mid
        else:
            hi = mid
    root = 0.5 * (lo + hi)
    residual, warm = _margin(root, y, V, cfg, warm)
    evals += 1
    return GammaResult(
        y=y,
        value_root=root,
        best_params=warm.params,
        diagnostics={
            "margin_evaluations": evals,
            "root_residual": residual,
            "bracket": [lo, hi],
            "widenings": widenings,
        },
    )


def _margin(level, y, V, cfg, warm):
    value, res = root_margin(level, y, V, cfg, warm=warm, full_start=warm is None)
    return value, res


def gamma_infsup(V, y, cfg=None):
    """Outer density minimization of sup over directions, square-rooted.

    Minimizes 2 K(f) <y,eta>^2 / H(eta,f) maximized over the direction sweep;
    the objective stays squared during descent.  Returns (value, OptResult).
    """
    cfg = cfg or OptConfig()
    y = np.asarray(y, dtype=float).reshape(-1)
    if np.linalg.norm(y) == 0.0:
        return 0.0, None

    def reduce_fn(K, A):
        dual, _ = flux_dual_value(A, y, angles=cfg.angles, angle_tol=cfg.angle_tol)
        return 2.0 * K * dual

    objective = _DensityObjective(V, cfg, reduce_fn, with_corrector=True)
    res = minimize_density(objective, cfg)
    return float(np.sqrt(max(res.value, 0.0))), res


def gamma_supinf(V, y, cfg=None):
    """Per-direction inner density minimization, maximized over the sweep.

    Directions nearly perpendicular to y are skipped (their bracketed value
    vanishes); antipodal directions give identical values and are deduplicated.
    In two dimensions the sweep maximum is golden-section refined in angle,
    warm-starting each inner solve from its neighbor.
    """
    cfg = cfg or OptConfig()
    y = np.asarray(y, dtype=float).reshape(-1)
    ynorm = float(np.linalg.norm(y))
    if ynorm == 0.0:
        return 0.0, None
    d = y.shape[0]

    warm_holder = {"res": None}

    def inner(eta):
        direction = np.asarray(eta, dtype=float)
        proj = float(np.dot(y, direction)) ** 2
        if proj < 1e-12:
            return 0.0

        def reduce_fn(K, A):
            return 2.0 * K * proj / float(direction @ A @ direction)

        objective = _DensityObjective(V, cfg, reduce_fn, with_corrector=True)
        prev = warm_holder["res"]
        extra = [prev.params.coeffs] if prev is not None else []
        res = minimize_density(
            objective, cfg, extra_starts=extra, full_start=prev is None
        )
        warm_holder["res"] = res
        return res.value

    if d == 1:
        value = inner(np.array([1.0]))
        return float(np.sqrt(max(value, 0.0))), warm_holder["res"]

    dirs, thetas = sweep_directions(cfg.angles)
    half = cfg.angles // 2
    vals = np.empty(cfg.angles)
    for j in range(half):
        vals[j] = inner(dirs[j])
    vals[half:] = vals[:half]  # antipodal symmetry of the inner value
    k = int(np.argmax(vals))
    width = 2.0 * np.pi / cfg.angles

    def along(theta):
        return inner(np.array([np.cos(theta), np.sin(theta)]))

    theta_star = _golden_refine(along, thetas[k] - width, thetas[k] + width, cfg.angle_tol)
    value = max(along(theta_star), float(vals.max()))
    return float(np.sqrt(max(value, 0.0))), warm_holder["res"]


@dataclass
class ComparisonResult:
    """Decay rate of a potential against its averaged (constant) version."""

    gamma_potential: float
    gamma_averaged: float
    averaged_closed_form: float
    inequality_ok: bool
    gap: float


def compare_average(V, y, tol=1e-3, cfg=None):
    """Run the root route on V and on its average; check the domination.

    The averaged potential has the closed form |y| sqrt(2 E[V]).  A violation
    of the inequality is reported in the result, not raised.
    """
    from .potential import averaged

    y = np.asarray(y, dtype=float).reshape(-1)
    gv = gamma_root(V, y, tol=tol, cfg=cfg).value_root
    Vbar = averaged(V)
    ge = gamma_root(Vbar, y, tol=tol, cfg=cfg).value_root
    closed = float(np.linalg.norm(y) * np.sqrt(2.0 * V.v_mean))
    return ComparisonResult(
        gamma_potential=gv,
        gamma_averaged=ge,
        averaged_closed_form=closed,
        inequality_ok=bool(gv <= ge * (1.0 + 1e-3)),
        gap=float(ge - gv),
    )


def compute_gamma(V, y, tol=1e-3, cfg=None, routes=("root", "infsup", "supinf"), refine=True):
    """All requested routes with cross-route gap bookkeeping.

    If any pairwise relative disagreement exceeds 5 percent, the computation
    reruns once on a doubled grid with two extra coefficient modes before
    reporting.
    """
    cfg = cfg or OptConfig()
    y = np.asarray(y, dtype=float).reshape(-1)
    result = GammaResult(y=y)
    if "root" in routes:
        rr = gamma_root(V, y, tol=tol, cfg=cfg)
        result.value_root = rr.value_root
        result.best_params = rr.best_params
        result.diagnostics["root"] = rr.diagnostics
    if "infsup" in routes:
        value, res = gamma_infsup(V, y, cfg=cfg)
        result.value_infsup = value
        if result.best_params is None and res is not None:
            result.best_params = res.params
    if "supinf" in routes:
        value, _ = gamma_supinf(V, y, cfg=cfg)
        result.value_supinf = value
    if result.value_infsup is not None and result.value_supinf is not None:
        denom = max(abs(result.value_infsup), 1e-300)
        result.minimax_gap = abs(result.value_infsup - result.value_supinf) / denom

    vals = list(result.values().values())
    if refine and len(vals) >= 2:
        spread = (max(vals) - min(vals)) / max(abs(max(vals)), 1e-300)
        if spread > 0.05:
            grid = V.grid
            try:
                fine = TorusGrid(tuple(2 * n for n in grid.shape), grid.period)
                V_fine = realize(V.spec, fine)
            except ParameterError:
                result.diagnostics["refinement"] = "requested but not realizable"
                return result
            cfg_fine = dataclasses.replace(cfg, modes=cfg.modes_for(grid.d) + 2)
            refined = compute_gamma(
                V_fine, y, tol=tol, cfg=cfg_fine, routes=routes, refine=False
            )
            refined.diagnostics["refined_from"] = grid.shape
            refined.diagnostics["coarse_values"] = result.values()
            return refined
    return result
