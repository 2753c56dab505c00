"""Weighted cell problems on the torus.

Two quadratic minimizations sit inside the variational formula: the corrector
problem min_w E[|b - grad w|^2 f] over mean-zero scalar fields, and the flux
problem min_phi E[|phi|^2 / f] over divergence-free fields of prescribed mean.
Both reduce to symmetric positive systems solved by conjugate gradients with
the constant mode projected out each iteration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError, ParameterError
from .grid import (
    SPECTRAL,
    ScalarField,
    VectorField,
    deriv,
    inverse_laplacian_preconditioner,
    mean,
)


@dataclass
class CorrectorSolution:
    """Minimizer of E[|b - grad w|^2 f] with its attained value and solver stats."""

    w: ScalarField
    value: float
    iterations: int
    residual: float


@dataclass
class FluxSolution:
    """Admissible flux minimizing E[|phi|^2 / f], with solver diagnostics."""

    phi: VectorField
    value: float
    diagnostics: dict


def _project_mean(x):
    x -= x.mean()
    return x


def _cg(apply_op, rhs, tol, maxiter, x0=None, precondition=None):
    """Preconditioned conjugate gradients on the mean-zero subspace.

    The iterate and residual are re-centered every iteration, which removes
    the constant null-space drift of the periodic operators used here.  The
    stopping test is the plain relative residual.  Returns
    (x, iterations, relative_residual); raises ConvergenceError with the best
    iterate attached if the cap is hit first.
    """
    rhs = _project_mean(rhs.copy())
    rhs_norm = float(np.linalg.norm(rhs))
    if rhs_norm == 0.0:
        return np.zeros_like(rhs), 0, 0.0
    x = np.zeros_like(rhs) if x0 is None else _project_mean(x0.copy())
    r = rhs - apply_op(x)
    _project_mean(r)
    z = precondition(r) if precondition is not None else r
    p = z.copy()
    rz = float(np.vdot(r, z).real)
    res = float(np.linalg.norm(r)) / rhs_norm
    best_x, best_res = x.copy(), res
    if res <= tol:
        return x, 0, res
    for it in range(1, maxiter + 1):
        Ap = apply_op(p)
        denom = float(np.vdot(p, Ap).real)
        if denom <= 0.0:
            break
        alpha = rz / denom
        x += alpha * p
        r -= alpha * Ap
        _project_mean(x)
        _project_mean(r)
        res = float(np.linalg.norm(r)) / rhs_norm
        if res < best_res:
            best_res, best_x = res, x.copy()
        if res <= tol:
            return x, it, res
        z = precondition(r) if precondition is not None else r
        rz_new = float(np.vdot(r, z).real)
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise ConvergenceError(
        f"conjugate gradients did not reach tol={tol:g} in {maxiter} iterations "
        f"(best residual {best_res:.3e})",
        best=(best_x, best_res),
    )


def _as_b_arrays(grid, b):
    """Accept a VectorField or a constant direction vector for b."""
    if isinstance(b, VectorField):
        if b.grid != grid:
            raise ParameterError("b must live on the same grid as f")
        return b.arrays()
    b = np.asarray(b, dtype=float).reshape(-1)
    if b.shape != (grid.d,):
        raise ParameterError(f"b must be a VectorField or a length-{grid.d} vector")
    return tuple(np.full(grid.shape, bi) for bi in b)


def solve_corrector(f, b, tol=1e-8, maxiter=None, method=SPECTRAL, x0=None):
    """Solve div(f grad w) = div(f b) for the mean-zero corrector w.

    ``f`` must be strictly positive.  ``b`` may be a VectorField or a constant
    vector.  The returned value is E[|b - grad w|^2 f], the weighted energy of
    the non-gradient part of b.
    """
    grid = f.grid
    fv = f.values
    if fv.min() <= 0:
        raise DomainError("corrector weight f must be strictly positive")
    if not tol > 0:
        raise ParameterError("tol must be positive")
    if maxiter is None:
        maxiter = 10 * grid.npoints
    barrs = _as_b_arrays(grid, b)

    def apply_op(w):
        out = np.zeros(grid.shape)
        for ax in range(grid.d):
            out -= deriv(grid, fv * deriv(grid, w, ax, method), ax, method)
        return out

    rhs = np.zeros(grid.shape)
    for ax in range(grid.d):
        rhs -= deriv(grid, fv * barrs[ax], ax, method)

    precond = inverse_laplacian_preconditioner(grid, scale=float(np.mean(fv)))
    try:
        w, iters, res = _cg(apply_op, rhs, tol, maxiter, x0=x0, precondition=precond)
    except ConvergenceError as err:
        w, res = err.best
        sol = _corrector_solution(grid, fv, barrs, w, maxiter, res, method)
        raise ConvergenceError(str(err), best=sol) from None
    return _corrector_solution(grid, fv, barrs, w, iters, res, method)


def _corrector_solution(grid, fv, barrs, w, iters, res, method):
    energy = np.zeros(grid.shape)
    for ax in range(grid.d):
        diff = barrs[ax] - deriv(grid, w, ax, method)
        energy += diff * diff
    value = float(np.mean(energy * fv))
    return CorrectorSolution(
        w=ScalarField(grid, w), value=value, iterations=iters, residual=res
    )


def _check_density(f, tol=1e-6):
    if f.values.min() <= 0:
        raise DomainError("density must be strictly positive")
    if abs(mean(f) - 1.0) > tol:
        raise DomainError(f"density must have unit mean, got {mean(f)!r}")


def cell_energy(eta, f, tol=1e-8, maxiter=None):
    """Weighted cell-problem energy for a unit direction (H of the theory).

    Equals min over correctors of E[|eta - grad w|^2 f]; lies in
    [min f, 1] and is exactly 1 for the flat density.
    """
    grid = f.grid
    eta = np.asarray(eta, dtype=float).reshape(-1)
    if eta.shape != (grid.d,) or abs(np.linalg.norm(eta) - 1.0) > 1e-10:
        raise ParameterError("eta must be a unit vector of the grid dimension")
    _check_density(f)
    return solve_corrector(f, eta, tol=tol, maxiter=maxiter).value


def corrector_matrix(f, tol=1e-8, maxiter=None, warm=None):
    """Gram matrix of the coordinate cell problems.

    Solves the corrector problem for each coordinate direction and returns
    (A, solutions) where A[i, j] = E[(e_i - grad w_i).(e_j - grad w_j) f].
    The cell energy for any direction is then the quadratic form eta' A eta,
    by linearity of the corrector equation in b.
    """
    grid = f.grid
    fv = f.values
    sols = []
    residual_fields = []
    for ax in range(grid.d):
        x0 = None if warm is None else warm[ax].w.values
        e = np.zeros(grid.d)
        e[ax] = 1.0
        sol = solve_corrector(f, e, tol=tol, maxiter=maxiter, x0=x0)
        sols.append(sol)
        comps = []
        for ax2 in range(grid.d):
            g = deriv(grid, sol.w.values, ax2)
            comps.append((1.0 if ax2 == ax else 0.0) - g)
        residual_fields.append(comps)
    A = np.zeros((grid.d, grid.d))
    for i in range(grid.d):
        for j in range(i, grid.d):
            dot = np.zeros(grid.shape)
            for ax in range(grid.d):
                dot += residual_fields[i][ax] * residual_fields[j][ax]
            A[i, j] = A[j, i] = float(np.mean(dot * fv))
    return A, sols


def _golden_refine(fun, x_lo, x_hi, tol):
    """Golden-section maximization of a scalar function on [x_lo, x_hi]."""
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = x_lo, x_hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    while (b - a) > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    return (a + b) / 2.0


def sweep_directions(angles=64):
    """Uniform unit directions on the circle."""
    thetas = np.arange(angles) * (2.0 * np.pi / angles)
    return np.stack([np.cos(thetas), np.sin(thetas)], axis=-1), thetas


def flux_dual_value(mat, y, angles=64, angle_tol=1e-6):
    """sup over unit eta of <y, eta>^2 / (eta' mat eta).

    ``mat`` is the corrector Gram matrix.  In one dimension this is y^2 / mat;
    in two the sweep uses uniform angles plus golden-section refinement.
    Returns (value, eta_star).
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    d = y.shape[0]
    if d == 1:
        return float(y[0] ** 2 / mat[0, 0]), np.array([1.0 if y[0] >= 0 else -1.0])

    def val(theta):
        eta = np.array([np.cos(theta), np.sin(theta)])
        num = float(np.dot(y, eta)) ** 2
        return num / float(eta @ mat @ eta)

    _, thetas = sweep_directions(angles)
    vals = np.array([val(t) for t in thetas])
    k = int(np.argmax(vals))
    width = 2.0 * np.pi / angles
    theta = _golden_refine(val, thetas[k] - width, thetas[k] + width, angle_tol)
    eta = np.array([np.cos(theta), np.sin(theta)])
    return val(theta), eta


def direction_quotient_matrix(mat, y, angles=64, angle_tol=1e-6, skip_tol=1e-12):
    """inf over unit eta of (eta' mat eta) / <y, eta>^2 (the J functional).

    Directions nearly perpendicular to y (squared projection below
    ``skip_tol``) are skipped; they cannot attain the infimum.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    if np.linalg.norm(y) == 0:
        raise ParameterError("y must be nonzero")
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    d = y.shape[0]
    if d == 1:
        return float(mat[0, 0] / y[0] ** 2), np.array([1.0])

    def quotient(theta):
        eta = np.array([np.cos(theta), np.sin(theta)])
        num = float(np.dot(y, eta)) ** 2
        if num < skip_tol:
            return np.inf
        return float(eta @ mat @ eta) / num

    _, thetas = sweep_directions(angles)
    vals = np.array([quotient(t) for t in thetas])
    k = int(np.argmin(vals))
    width = 2.0 * np.pi / angles
    theta = _golden_refine(lambda t: -quotient(t), thetas[k] - width, thetas[k] + width, angle_tol)
    eta = np.array([np.cos(theta), np.sin(theta)])
    return quotient(theta), eta


def min_flux(f, y, tol=1e-8, maxiter=None):
    """Minimize E[|phi|^2 / f] over divergence-free fields of mean y.

    In one dimension the only admissible flux is the constant y.  In two, phi
    is parametrized as y plus the rotated gradient of a stream field w and the
    induced symmetric positive system is solved by conjugate gradients.
    """
    grid = f.grid
    fv = f.values
    if fv.min() <= 0:
        raise DomainError("flux weight f must be strictly positive")
    _check_density(f)
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.shape != (grid.d,):
        raise ParameterError(f"y must have dimension {grid.d}")
    if maxiter is None:
        maxiter = 10 * grid.npoints

    if grid.d == 1:
        phi = VectorField(grid, (np.full(grid.shape, y[0]),))
        value = float(y[0] ** 2 * np.mean(1.0 / fv))
        return FluxSolution(
            phi=phi,
            value=value,
            diagnostics={"iterations": 0, "residual": 0.0, "div_max": 0.0},
        )

    def rot(w):
        return deriv(grid, w, 1), -deriv(grid, w, 0)

    def rot_adj(v1, v2):
        return deriv(grid, v2, 0) - deriv(grid, v1, 1)

    def apply_op(w):
        r1, r2 = rot(w)
        return rot_adj(r1 / fv, r2 / fv)

    rhs = -rot_adj(np.full(grid.shape, y[0]) / fv, np.full(grid.shape, y[1]) / fv)
    precond = inverse_laplacian_preconditioner(grid, scale=float(np.mean(1.0 / fv)))
    w, iters, res = _cg(apply_op, rhs, tol, maxiter, precondition=precond)
    r1, r2 = rot(w)
    phi1 = y[0] + r1
    phi2 = y[1] + r2
    div = deriv(grid, phi1, 0) + deriv(grid, phi2, 1)
    value = float(np.mean((phi1 * phi1 + phi2 * phi2) / fv))
    return FluxSolution(
        phi=VectorField(grid, (phi1, phi2)),
        value=value,
        diagnostics={
            "iterations": iters,
            "residual": res,
            "div_max": float(np.abs(div).max()),
            "mean_flux": [float(phi1.mean()), float(phi2.mean())],
        },
    )
