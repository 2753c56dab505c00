"""Density functionals and the outer optimization over log-density coefficients.

Densities are parametrized as f = exp(g) / E[exp(g)] with g a real
trigonometric polynomial of odd per-axis cutoff.  The outer objectives
(density energy, direction quotient, root margin, drifted rate) are minimized
by gradient descent with Armijo backtracking.  Gradients are central finite
differences of the objective with the inner corrector solutions frozen: by
the envelope theorem the minimizers are first-order insensitive, so freezing
them leaves the gradient unchanged while making each difference evaluation a
handful of grid means instead of a linear solve.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corrector import corrector_matrix, direction_quotient_matrix
from .errors import ConvergenceError, DomainError, OptimizationError, ParameterError
from .grid import ScalarField, gradient
from .potential import seeded_rng

G_BOUND = 30.0


def default_modes(d):
    """Per-axis coefficient cutoff: 9 in one dimension, 5 in two."""
    return 9 if d == 1 else 5


@dataclass(frozen=True)
class DensityParams:
    """Real trig coefficients of the log-density, shape (M,) or (M, M), M odd."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        for m in c.shape:
            if m % 2 == 0:
                raise ParameterError("coefficient cutoff must be odd per axis")
        object.__setattr__(self, "coeffs", c)

    @property
    def modes(self):
        return self.coeffs.shape[0]


@dataclass
class OptConfig:
    """Settings for the outer minimization over density coefficients."""

    modes: int | None = None  # per-axis cutoff; None picks the dimension default
    n_starts: int = 5  # random starts in addition to the flat density
    start_scale: float = 0.3
    seed: int = 0
    max_iter: int = 500
    gtol: float = 1e-5
    step0: float = 0.1
    shrink: float = 0.5
    armijo_c: float = 1e-4
    fd_step: float = 1e-6
    cg_tol: float = 1e-8
    cg_maxiter: int | None = None
    angles: int = 64
    angle_tol: float = 1e-6

    def modes_for(self, d):
        return self.modes if self.modes is not None else default_modes(d)


class DensityBasis:
    """Tensor trig basis {1, cos(2 pi m x/L), sin(2 pi m x/L)} with gradients.

    Basis fields and their exact derivatives are precomputed once per
    (grid, cutoff) so density and gradient evaluations are pure tensor
    contractions.
    """

    _cache = {}

    def __init__(self, grid, modes):
        if modes % 2 == 0 or modes < 1:
            raise ParameterError("modes must be odd and positive")
        self.grid = grid
        self.modes = modes
        axes_fun = []
        axes_der = []
        for x, L in zip(grid.axes(), grid.period):
            funs = [np.ones_like(x)]
            ders = [np.zeros_like(x)]
            for m in range(1, (modes - 1) // 2 + 1):
                w = 2 * np.pi * m / L
                funs += [np.cos(w * x), np.sin(w * x)]
                ders += [-w * np.sin(w * x), w * np.cos(w * x)]
            axes_fun.append(np.stack(funs))
            axes_der.append(np.stack(ders))
        if grid.d == 1:
            self.B = axes_fun[0]
            self.GB = axes_der[0][:, None, :]  # (P, d, *shape)
        else:
            fx, fy = axes_fun
            dx, dy = axes_der
            B = fx[:, None, :, None] * fy[None, :, None, :]
            Gx = dx[:, None, :, None] * fy[None, :, None, :]
            Gy = fx[:, None, :, None] * dy[None, :, None, :]
            P = modes * modes
            self.B = B.reshape(P, *grid.shape)
            self.GB = np.stack(
                [Gx.reshape(P, *grid.shape), Gy.reshape(P, *grid.shape)], axis=1
            )

    @classmethod
    def get(cls, grid, modes):
        key = (grid, modes)
        if key not in cls._cache:
            cls._cache[key] = cls(grid, modes)
        return cls._cache[key]

    @property
    def nparams(self):
        return self.B.shape[0]

    def log_density(self, theta):
        return np.tensordot(np.ravel(theta), self.B, axes=1)

    def log_density_grad(self, theta):
        return np.tensordot(np.ravel(theta), self.GB, axes=1)  # (d, *shape)

    def density_values(self, theta):
        g = self.log_density(theta)
        if np.abs(g).max() > G_BOUND:
            raise ParameterError(
                f"log-density exceeds bound {G_BOUND}; coefficients too large"
            )
        f = np.exp(g)
        f /= f.mean()
        return f


def density(params, grid):
    """Normalized strictly positive density exp(g)/E[exp(g)] on the grid."""
    coeffs = np.asarray(params.coeffs, dtype=float)
    if coeffs.ndim != grid.d:
        raise ParameterError("coefficient rank must match the grid dimension")
    basis = DensityBasis.get(grid, coeffs.shape[0])
    return ScalarField(grid, basis.density_values(coeffs))


def density_energy(f, V):
    """E[|grad f|^2 / (8 f) + V f], the kinetic-plus-potential density energy."""
    if f.values.min() <= 0:
        raise DomainError("density must be strictly positive")
    gf = gradient(f)
    kinetic = np.zeros(f.grid.shape)
    for c in gf.components:
        kinetic += c.values**2
    return float(np.mean(kinetic / (8.0 * f.values)) + np.mean(V.values * f.values))


def direction_quotient(f, y, tol=1e-8, angles=64, angle_tol=1e-6):
    """inf over unit eta of cell_energy(eta, f) / <y, eta>^2 (the J functional)."""
    y = np.asarray(y, dtype=float).reshape(-1)
    if np.linalg.norm(y) == 0:
        raise ParameterError("y must be nonzero")
    A, _ = corrector_matrix(f, tol=tol)
    value, _ = direction_quotient_matrix(A, y, angles=angles, angle_tol=angle_tol)
    return value


@dataclass
class OptResult:
    params: DensityParams
    value: float
    state: dict
    iterations: int
    starts: int
    trace: list = field(default_factory=list)


class _DensityObjective:
    """Outer objective F(theta) = reduce(K, A) over log-density coefficients.

    K is the density energy; A the Gram matrix of the coordinate corrector
    residuals (None when the objective does not involve the cell problem).
    ``frozen`` re-evaluates with a previous state's corrector solutions held
    fixed, exact to first order in the coefficient perturbation.
    """

    def __init__(self, V, cfg, reduce_fn, with_corrector):
        self.V = V
        self.grid = V.grid
        self.cfg = cfg
        self.reduce_fn = reduce_fn
        self.with_corrector = with_corrector
        self.basis = DensityBasis.get(self.grid, cfg.modes_for(self.grid.d))

    @property
    def nparams(self):
        return self.basis.nparams

    def _density_parts(self, theta):
        f = self.basis.density_values(theta)
        grad_g = self.basis.log_density_grad(theta)
        return f, grad_g

    def _energy(self, f, grad_g):
        kinetic = np.zeros(self.grid.shape)
        for ax in range(self.grid.d):
            kinetic += grad_g[ax] ** 2
        # grad f = f grad g, so |grad f|^2/(8f) = f |grad g|^2 / 8
        return float(np.mean(f * kinetic) / 8.0 + np.mean(self.V.values * f))

    def fresh(self, theta, warm=None):
        theta = np.asarray(theta, dtype=float)
        f_arr, grad_g = self._density_parts(theta)
        K = self._energy(f_arr, grad_g)
        state = {"theta": theta.copy(), "f": f_arr, "K": K, "A": None}
        if self.with_corrector:
            ffield = ScalarField(self.grid, f_arr)
            warm_sols = warm.get("sols") if warm else None
            A, sols = corrector_matrix(
                ffield, tol=self.cfg.cg_tol, maxiter=self.cfg.cg_maxiter, warm=warm_sols
            )
            state["A"] = A
            state["sols"] = sols
            res = []
            for ax, sol in enumerate(sols):
                comps = gradient(sol.w)
                res.append(
                    [
                        (1.0 if ax2 == ax else 0.0) - comps.components[ax2].values
                        for ax2 in range(self.grid.d)
                    ]
                )
            prods = {}
            for i in range(self.grid.d):
                for j in range(i, self.grid.d):
                    dot = np.zeros(self.grid.shape)
                    for ax in range(self.grid.d):
                        dot += res[i][ax] * res[j][ax]
                    prods[(i, j)] = dot
            state["residual_products"] = prods
        return self.reduce_fn(K, state["A"]), state

    def frozen(self, theta, state):
        f_arr, grad_g = self._density_parts(np.asarray(theta, dtype=float))
        K = self._energy(f_arr, grad_g)
        A = None
        if self.with_corrector:
            d = self.grid.d
            A = np.zeros((d, d))
            for i in range(d):
                for j in range(i, d):
                    A[i, j] = A[j, i] = float(
                        np.mean(state["residual_products"][(i, j)] * f_arr)
                    )
        return self.reduce_fn(K, A)


def _fd_gradient(objective, theta, state, step):
    grad = np.zeros_like(theta)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = step
        grad[i] = (
            objective.frozen(theta + e, state) - objective.frozen(theta - e, state)
        ) / (2 * step)
    return grad


def _descend(objective, theta0, cfg, trace=None):
    """Gradient descent with Armijo backtracking from one starting point."""
    theta = np.asarray(theta0, dtype=float).copy()
    value, state = objective.fresh(theta)
    if not np.isfinite(value):
        raise OptimizationError("objective is NaN at the starting point", trace=trace)
    iters = 0
    for iters in range(1, cfg.max_iter + 1):
        g = _fd_gradient(objective, theta, state, cfg.fd_step)
        gnorm = float(np.linalg.norm(g))
        if trace is not None:
            trace.append((iters, value, gnorm))
        if gnorm < cfg.gtol:
            break
        t = cfg.step0
        accepted = False
        for _ in range(40):
            cand = theta - t * g
            try:
                cand_value, cand_state = objective.fresh(cand, warm=state)
            except (ParameterError, ConvergenceError):
                # out of the coefficient box, or a density so extreme the
                # inner solve cannot converge: reject and shrink
                t *= cfg.shrink
                continue
            if not np.isfinite(cand_value):
                raise OptimizationError("objective diverged to NaN", trace=trace)
            if cand_value <= value - cfg.armijo_c * t * gnorm**2:
                theta, value, state = cand, cand_value, cand_state
                accepted = True
                break
            t *= cfg.shrink
        if not accepted:
            break  # no descent at the smallest step: at the noise floor
    return theta, value, state, iters


def minimize_density(objective, cfg, extra_starts=(), full_start=True):
    """Multi-start outer minimization; returns the best OptResult.

    Always evaluates the flat density, so the result never exceeds the f = 1
    value.  Random starts are seeded and deterministic; minimizers from
    related solves can be chained in through ``extra_starts``.
    """
    n = objective.nparams
    starts = [np.asarray(t, dtype=float).ravel().copy() for t in extra_starts]
    if full_start:
        starts.append(np.zeros(n))
        rng = seeded_rng(cfg.seed, stream=0xD0)
        for _ in range(cfg.n_starts):
            starts.append(rng.normal(scale=cfg.start_scale, size=n))
    elif not starts:
        starts.append(np.zeros(n))

    best = None
    total_iters = 0
    trace = []
    for sidx, theta0 in enumerate(starts):
        start_trace = []
        try:
            theta, value, state, iters = _descend(objective, theta0, cfg, trace=start_trace)
        except (ParameterError, ConvergenceError):
            continue  # unusable starting density; other starts remain
        total_iters += iters
        trace.extend((sidx,) + row for row in start_trace)
        if best is None or value < best[1]:
            best = (theta, value, state)
    flat_value, flat_state = objective.fresh(np.zeros(n))
    if flat_value < best[1]:
        best = (np.zeros(n), flat_value, flat_state)
    theta, value, state = best
    params = DensityParams(theta.reshape((objective.basis.modes,) * objective.grid.d))
    return OptResult(
        params=params,
        value=value,
        state=state,
        iterations=total_iters,
        starts=len(starts),
        trace=trace,
    )


@dataclass
class DecayRate:
    """Drifted decay-rate value with its route tag and solver diagnostics."""

    lam: np.ndarray
    value: float
    route: str
    diagnostics: dict


def root_margin(level, y, V, cfg=None, warm=None, full_start=True):
    """inf over densities of 2 K(f) - level^2 J(f).

    Concave and decreasing in ``level``; its unique nonnegative root is the
    decay rate in direction y.  Returns (value, OptResult).
    """
    cfg = cfg or OptConfig()
    y = np.asarray(y, dtype=float).reshape(-1)
    if np.linalg.norm(y) == 0:
        raise ParameterError("y must be nonzero")
    if level < 0:
        raise ParameterError("level must be nonnegative")
    if level == 0.0:
        reduce_fn = lambda K, A: 2.0 * K
        with_corr = False
    else:

        def reduce_fn(K, A):
            J, _ = direction_quotient_matrix(
                A, y, angles=cfg.angles, angle_tol=cfg.angle_tol
            )
            return 2.0 * K - level**2 * J

        with_corr = True
    objective = _DensityObjective(V, cfg, reduce_fn, with_corr)
    extra = [warm.params.coeffs] if warm is not None else []
    res = minimize_density(objective, cfg, extra_starts=extra, full_start=full_start)
    return res.value, res


def decay_rate_variational(lam, V, cfg=None, warm=None, full_start=True):
    """Variational drifted decay rate:
    inf over densities of K(f) + |lam|^2/2 - cell_energy(lam, f)/2.
    Returns (DecayRate, OptResult)."""
    cfg = cfg or OptConfig()
    lam = np.asarray(lam, dtype=float).reshape(-1)
    if lam.shape != (V.grid.d,):
        raise ParameterError("drift must match the grid dimension")
    lam_sq = float(lam @ lam)
    if lam_sq == 0.0:
        reduce_fn = lambda K, A: K
        with_corr = False
    else:

        def reduce_fn(K, A):
            return K + 0.5 * lam_sq - 0.5 * float(lam @ A @ lam)

        with_corr = True
    objective = _DensityObjective(V, cfg, reduce_fn, with_corr)
    extra = [warm.params.coeffs] if warm is not None else []
    res = minimize_density(objective, cfg, extra_starts=extra, full_start=full_start)
    rate = DecayRate(
        lam=lam,
        value=res.value,
        route="variational",
        diagnostics={"iterations": res.iterations, "starts": res.starts},
    )
    return rate, res
