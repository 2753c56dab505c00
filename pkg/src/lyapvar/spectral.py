"""Spectral route: principal eigenvalue, decay rate, and its half-space transform.

The quenched free energy of the drifted killed walker is the dominant
eigenvalue of (1/2) Laplacian + drift . grad - V on the torus, computed
matrix-free by power iteration on the explicit-Euler propagator.  The decay
rate is its negative; the half-space transform
R(a)(y) = sup { <y, lam> : |lam|^2 / 2 < a(lam) } then recovers the
directional decay exponent from per-direction root solves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._stepping import Propagator
from .corrector import _golden_refine
from .errors import (
    ConvergenceError,
    NumericalError,
    ParameterError,
    ResolutionError,
)
from .functionals import DecayRate
from .grid import ScalarField

BLOCK = 64  # steps per growth estimate; also the averaging window


@dataclass
class EigResult:
    """Dominant eigenvalue of the drifted killed generator with its eigenfield."""

    lambda_drift: np.ndarray
    principal_value: float
    eigenfield: ScalarField
    iterations: int
    residual: float


def _power_iterate(V_values, spacing, lams, tol, max_steps, u0=None, block=BLOCK):
    """Batched power iteration on the explicit-Euler propagator.

    Per batch row: renormalize to unit mean, advance ``block`` steps, and read
    the per-step growth converted back through the Euler relation,
    est = ((mass)^(1/block) - 1) / dt, which is the discrete generator
    eigenvalue without the O(dt) logarithm bias.  A row converges when
    consecutive block estimates agree within tol and the generator residual
    ||A u - est u|| / ||u|| falls below tol.  Returns (values, fields, steps,
    residuals); raises ConvergenceError with partial results attached.
    """
    V_values = np.asarray(V_values, dtype=float)
    lams = np.atleast_2d(np.asarray(lams, dtype=float))
    B = lams.shape[0]
    d = V_values.ndim
    hmin = min(spacing)
    dt = 0.2 * hmin * hmin / d
    prop = Propagator(V_values, spacing, lams, dt)
    if not prop.positivity_ok():
        raise NumericalError(
            "propagator stencil lost positivity; grid too coarse for this "
            "drift or potential amplitude"
        )
    if u0 is None:
        u = np.ones((B,) + V_values.shape)
    else:
        u = np.array(np.atleast_2d(u0), dtype=float).reshape((B,) + V_values.shape)
        u = np.maximum(u, 1e-300)
    axes = tuple(range(1, d + 1))
    u /= u.mean(axis=axes, keepdims=True)

    values = np.full(B, np.nan)
    residuals = np.full(B, np.inf)
    steps = np.zeros(B, dtype=np.int64)
    fields = [None] * B
    active = np.arange(B)
    prev_est = np.full(B, np.inf)
    total = 0
    while active.size and total < max_steps:
        u = prop.run(u, block)
        total += block
        mass = u.mean(axis=axes)
        if np.any(mass <= 0):
            raise NumericalError("eigenfield lost positivity during iteration")
        est = np.expm1(np.log(mass) / block) / dt
        u /= mass.reshape((-1,) + (1,) * d)
        steps[active] += block
        stable = np.abs(est - prev_est[active]) < tol
        done_rows = []
        if np.any(stable):
            Au = prop.apply_generator(u)
            num = Au - est.reshape((-1,) + (1,) * d) * u
            res = np.sqrt((num**2).sum(axis=axes) / (u**2).sum(axis=axes))
            for k in np.nonzero(stable)[0]:
                if res[k] <= tol:
                    row = active[k]
                    values[row] = est[k]
                    residuals[row] = res[k]
                    fields[row] = u[k].copy()
                    done_rows.append(k)
        prev_est[active] = est
        if done_rows:
            keep = np.setdiff1d(np.arange(active.size), np.array(done_rows))
            active = active[keep]
            if active.size == 0:
                break
            u = np.ascontiguousarray(u[keep])
            prop = Propagator(V_values, spacing, lams[active], dt)
    if active.size:
        for k, row in enumerate(active):
            values[row] = prev_est[row]
            fields[row] = u[k].copy()
        raise ConvergenceError(
            f"power iteration did not converge within {max_steps} steps "
            f"for {active.size} drift value(s)",
            best=(values, fields, steps, residuals),
        )
    return values, fields, steps, residuals


def principal_eigenvalue(V, lambda_drift, tol=1e-8, max_steps=5_000_000, u0=None):
    """Dominant eigenvalue of (1/2) Laplacian + drift . grad - V on the torus."""
    if not tol > 0:
        raise ParameterError("tol must be positive")
    grid = V.grid
    if lambda_drift is None:
        lam = np.zeros(grid.d)
    else:
        lam = np.asarray(lambda_drift, dtype=float).reshape(-1)
    if lam.shape != (grid.d,):
        raise ParameterError("drift must match the grid dimension")
    values, fields, steps, residuals = _power_iterate(
        V.values, grid.spacing, lam[None, :], tol, max_steps, u0=u0
    )
    field = fields[0]
    if field.min() <= 0:
        raise NumericalError("converged eigenfield is not strictly positive")
    field = field / field.mean()
    return EigResult(
        lambda_drift=lam,
        principal_value=float(values[0]),
        eigenfield=ScalarField(grid, field),
        iterations=int(steps[0]),
        residual=float(residuals[0]),
    )


def decay_rate_spectral(V, lambda_drift, tol=1e-8, max_steps=5_000_000):
    """Spectral drifted decay rate: minus the principal eigenvalue."""
    eig = principal_eigenvalue(V, lambda_drift, tol=tol, max_steps=max_steps)
    return DecayRate(
        lam=eig.lambda_drift,
        value=-eig.principal_value,
        route="spectral",
        diagnostics={"iterations": eig.iterations, "residual": eig.residual},
    )


class SpectralDecayEvaluator:
    """Cached spectral decay-rate evaluator with batched drift queries.

    Values are cached by the drift quantized to ``quantum``; recent
    eigenfields warm-start nearby queries.  Callable as evaluator(s, eta)
    with magnitude and unit direction, or through ``at`` / ``evaluate_batch``.
    """

    def __init__(self, V, tol=1e-7, max_steps=5_000_000, quantum=1e-6, field_cache=160):
        self.V = V
        self.grid = V.grid
        self.tol = tol
        self.max_steps = max_steps
        self.quantum = quantum
        self.field_cache = field_cache
        self._values = {}
        self._fields = []  # (drift array, eigenfield array) pairs, bounded
        self.evaluations = 0

    def _key(self, lam):
        return tuple(int(round(x / self.quantum)) for x in lam)

    def _nearest_field(self, lam):
        if not self._fields:
            return None
        dists = [float(np.linalg.norm(lam - lk)) for lk, _ in self._fields]
        return self._fields[int(np.argmin(dists))][1]

    def _remember(self, lam, field):
        self._fields.append((np.array(lam, dtype=float), field))
        if len(self._fields) > self.field_cache:
            self._fields.pop(0)

    def evaluate_batch(self, lams):
        lams = np.atleast_2d(np.asarray(lams, dtype=float))
        out = np.empty(lams.shape[0])
        missing = [i for i in range(lams.shape[0]) if self._key(lams[i]) not in self._values]
        if missing:
            todo = {}
            for i in missing:
                todo.setdefault(self._key(lams[i]), None)
            keys = list(todo)
            lam_arr = np.array([np.array(k, dtype=float) * self.quantum for k in keys])
            starts = []
            for lam in lam_arr:
                near = self._nearest_field(lam)
                starts.append(near if near is not None else np.ones(self.grid.shape))
            values, fields, _, _ = _power_iterate(
                self.V.values,
                self.grid.spacing,
                lam_arr,
                self.tol,
                self.max_steps,
                u0=np.stack(starts),
            )
            self.evaluations += len(keys)
            for key, lam, val, field in zip(keys, lam_arr, values, fields):
                self._values[key] = -float(val)
                self._remember(lam, field)
        for i in range(lams.shape[0]):
            out[i] = self._values[self._key(lams[i])]
        return out

    def at(self, lam):
        return float(self.evaluate_batch(np.asarray(lam, dtype=float)[None, :])[0])

    def __call__(self, s, eta):
        eta = np.asarray(eta, dtype=float).reshape(-1)
        return self.at(float(s) * eta)

    @property
    def zero(self):
        return self.at(np.zeros(self.grid.d))


@dataclass
class RTransformResult:
    """Directional decay exponent recovered from a decay-rate function."""

    y: np.ndarray
    value: float
    eta_star: np.ndarray | None
    roots: list
    diagnostics: dict


def _sigma_batch(sigma_eval, lams):
    if hasattr(sigma_eval, "evaluate_batch"):
        return np.asarray(sigma_eval.evaluate_batch(lams), dtype=float)
    out = np.empty(len(lams))
    for i, lam in enumerate(lams):
        lam = np.asarray(lam, dtype=float)
        s = float(np.linalg.norm(lam))
        eta = lam / s if s > 0 else np.eye(lam.shape[0])[0]
        out[i] = sigma_eval(s, eta)
    return out


def _sigma_zero(sigma_eval, d):
    return float(_sigma_batch(sigma_eval, np.zeros((1, d)))[0])


def _direction_roots(sigma_eval, dirs, sigma0, tol, samples=None, lo0=None, hi0=None):
    """Lockstep bisection for the roots of s^2/2 = sigma(s eta) per direction.

    The margin s^2/2 - sigma(s eta) is strictly increasing in s and negative
    at zero, so each direction has one root.  Brackets default to
    [0, 1.1 sqrt(2 sigma0)] and are verified and widened per direction.
    """
    dirs = np.atleast_2d(np.asarray(dirs, dtype=float))
    m = dirs.shape[0]
    lo = np.zeros(m) if lo0 is None else np.array(lo0, dtype=float)
    hi = np.full(m, 1.1 * np.sqrt(2.0 * sigma0)) if hi0 is None else np.array(hi0, dtype=float)

    def psi(svals):
        vals = _sigma_batch(sigma_eval, svals[:, None] * dirs)
        if samples is not None:
            for k in range(m):
                samples[k].append((float(svals[k]), float(vals[k])))
        return 0.5 * svals * svals - vals

    for _ in range(40):
        bad = psi(hi) < 0.0
        if not np.any(bad):
            break
        hi[bad] = hi[bad] * 1.4 + tol
    else:
        raise NumericalError("could not bracket the transform root from above")
    if lo0 is not None:
        for _ in range(40):
            bad = (lo > 0) & (psi(lo) >= 0.0)
            if not np.any(bad):
                break
            lo[bad] *= 0.5
        else:
            raise NumericalError("could not bracket the transform root from below")
    while float(np.max(hi - lo)) > tol:
        mid = 0.5 * (lo + hi)
        negative = psi(mid) < 0.0
        lo = np.where(negative, mid, lo)
        hi = np.where(negative, hi, mid)
    return 0.5 * (lo + hi)


def r_transform(sigma_eval, y, tol=1e-4, angles=64, angle_tol=1e-4):
    """sup { <y, lam> : |lam|^2/2 < sigma(lam) } via per-direction roots.

    Returns the minus-infinity sentinel when the zero-drift rate is at or
    below ``tol`` (the transform degenerates there).  In two dimensions the
    direction sweep is followed by golden-section refinement in angle with
    warm root brackets.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    d = y.shape[0]
    if not np.linalg.norm(y) > 0:
        raise ParameterError("y must be nonzero")
    sigma0 = _sigma_zero(sigma_eval, d)
    if sigma0 <= tol:
        return RTransformResult(
            y=y,
            value=float("-inf"),
            eta_star=None,
            roots=[],
            diagnostics={"sigma0": sigma0, "degenerate": True},
        )

    if d == 1:
        dirs = np.array([[1.0], [-1.0]])
        samples = [[], []]
        roots = _direction_roots(sigma_eval, dirs, sigma0, tol, samples)
        vals = np.array([float(y @ dirs[k]) * roots[k] for k in range(2)])
        k = int(np.argmax(vals))
        return RTransformResult(
            y=y,
            value=float(vals[k]),
            eta_star=dirs[k],
            roots=[{"eta": dirs[i].tolist(), "root": float(roots[i])} for i in range(2)],
            diagnostics={"sigma0": sigma0, "samples": samples},
        )

    thetas = np.arange(angles) * (2.0 * np.pi / angles)
    all_dirs = np.stack([np.cos(thetas), np.sin(thetas)], axis=-1)
    proj = all_dirs @ y
    mask = proj > 1e-12  # nonpositive projections cannot attain the supremum
    dirs = all_dirs[mask]
    kept_thetas = thetas[mask]
    samples = [[] for _ in range(dirs.shape[0])]
    roots = _direction_roots(sigma_eval, dirs, sigma0, tol, samples)
    vals = (dirs @ y) * roots
    k = int(np.argmax(vals))
    width = 2.0 * np.pi / angles
    bracket = max(4.0 * tol, 0.1 * float(roots[k]))
    warm_root = {"value": float(roots[k])}

    def along(theta):
        eta = np.array([np.cos(theta), np.sin(theta)])
        p = float(y @ eta)
        if p <= 1e-12:
            return -np.inf
        near = warm_root["value"]
        r = _direction_roots(
            sigma_eval,
            eta[None, :],
            sigma0,
            tol,
            lo0=np.array([max(near - bracket, 0.0)]),
            hi0=np.array([near + bracket]),
        )
        warm_root["value"] = float(r[0])
        return p * float(r[0])

    theta_star = _golden_refine(
        along, kept_thetas[k] - width, kept_thetas[k] + width, angle_tol
    )
    refined = along(theta_star)
    if refined >= vals[k]:
        value = float(refined)
        eta_star = np.array([np.cos(theta_star), np.sin(theta_star)])
    else:
        value = float(vals[k])
        eta_star = dirs[k]
    return RTransformResult(
        y=y,
        value=value,
        eta_star=eta_star,
        roots=[
            {"eta": dirs[i].tolist(), "root": float(roots[i])}
            for i in range(dirs.shape[0])
        ],
        diagnostics={"sigma0": sigma0, "samples": samples},
    )


def _rate_tables(sigma_eval, dirs, s_max, n_points=129):
    """Sampled decay-rate curves s -> sigma(s eta), one per direction."""
    svals = np.linspace(0.0, s_max, n_points)
    tables = []
    for eta in dirs:
        lams = svals[:, None] * np.asarray(eta, dtype=float)[None, :]
        tables.append((svals, _sigma_batch(sigma_eval, lams)))
    return tables


def _root_from_table(svals, sigvals, mu):
    """Root of s^2/2 - sig(s) - mu = 0 on a sampled increasing margin."""
    margin = 0.5 * svals * svals - sigvals - mu
    idx = np.nonzero(margin >= 0)[0]
    if margin[0] >= 0 or idx.size == 0:
        raise ResolutionError("sampled margin does not bracket the root")
    j = idx[0]
    a, b = svals[j - 1], svals[j]
    fa, fb = margin[j - 1], margin[j]
    return float(a - fa * (b - a) / (fb - fa))


def inverse_r_check(V, lam, c, mu_step=1e-3, span=0.3, eig_tol=1e-8, angles=64):
    """Recover min(sigma(lam) - |lam|^2/2, c) from transform evaluations.

    Scans -mu downward from just below c on a grid of spacing ``mu_step`` and
    returns the largest grid value for which <lam, y> <= R(sigma + mu)(y)
    holds over the whole direction sweep.  The scan resolution bounds the
    recovery error; the directly computed value is returned alongside.
    """
    grid = V.grid
    lam = np.asarray(lam, dtype=float).reshape(-1)
    if lam.shape != (grid.d,):
        raise ParameterError("lam must match the grid dimension")
    evaluator = SpectralDecayEvaluator(V, tol=eig_tol)
    sigma0 = evaluator.zero
    if c > sigma0 + 1e-9:
        raise ParameterError("c must not exceed the zero-drift decay rate")
    direct = evaluator.at(lam) - 0.5 * float(lam @ lam)
    capped = min(direct, c)

    if grid.d == 1:
        dirs = [np.array([1.0]), np.array([-1.0])]
    else:
        thetas = np.arange(angles) * (2.0 * np.pi / angles)
        dirs = [np.array([np.cos(t), np.sin(t)]) for t in thetas]

    mu_top = max(-(capped - span), 0.0)
    s_max = 1.2 * np.sqrt(2.0 * (max(V.v_mean, sigma0) + mu_top)) + 10 * mu_step
    tables = _rate_tables(evaluator, dirs, s_max)

    def condition(mu):
        roots = np.array([_root_from_table(s, sig, mu) for s, sig in tables])
        for yk in dirs:
            transform = max(float(yk @ dirs[i]) * roots[i] for i in range(len(dirs)))
            if float(lam @ yk) > transform + 1e-12:
                return False
        return True

    neg_mu = c - mu_step / 2.0
    recovered = None
    while neg_mu > capped - span:
        try:
            if condition(-neg_mu):
                recovered = neg_mu
                break
        except ResolutionError:
            pass
        neg_mu -= mu_step
    if recovered is None:
        raise ResolutionError("scan grid too coarse or too short to bracket the recovery")
    return {
        "recovered": float(recovered),
        "direct": float(direct),
        "capped": float(capped),
        "error": float(abs(recovered - capped)),
        "mu_step": mu_step,
        "sigma0": float(sigma0),
    }


def lipschitz_check(V, y_pairs, tol=1e-6, eig_tol=1e-7):
    """Transform values are Lipschitz with constant max root radius.

    Estimates C = sup { |lam| : sigma(lam) - |lam|^2/2 > 0 } from the
    per-direction roots, then verifies
    |R(y1) - R(y2)| <= C |y1 - y2| + tol over the sampled pairs.
    Report only; nothing is raised on violation.
    """
    evaluator = SpectralDecayEvaluator(V, tol=eig_tol)
    d = V.grid.d
    sigma0 = evaluator.zero
    if d == 1:
        dirs = np.array([[1.0], [-1.0]])
    else:
        thetas = np.arange(32) * (2.0 * np.pi / 32)
        dirs = np.stack([np.cos(thetas), np.sin(thetas)], axis=-1)
    roots = _direction_roots(evaluator, dirs, sigma0, 1e-6)
    constant = float(np.max(roots))
    rows = []
    all_ok = True
    cache = {}

    def transform(yv):
        key = tuple(np.round(yv, 12))
        if key not in cache:
            cache[key] = r_transform(evaluator, yv, tol=1e-6).value
        return cache[key]

    for y1, y2 in y_pairs:
        y1 = np.asarray(y1, dtype=float).reshape(-1)
        y2 = np.asarray(y2, dtype=float).reshape(-1)
        r1, r2 = transform(y1), transform(y2)
        bound = constant * float(np.linalg.norm(y1 - y2)) + tol
        ok = abs(r1 - r2) <= bound
        all_ok = all_ok and ok
        rows.append(
            {
                "y1": y1.tolist(),
                "y2": y2.tolist(),
                "r1": r1,
                "r2": r2,
                "difference": abs(r1 - r2),
                "bound": bound,
                "ok": bool(ok),
            }
        )
    return {"constant": constant, "pairs": rows, "all_ok": bool(all_ok)}
