"""Explicit-Euler propagator steps for the drifted killed generator.

One step maps u to u + dt * (Laplacian u / 2 + drift . grad u - V u) with
centered finite differences on the periodic grid, batched over a family of
drift vectors.  The kernels are jitted with numba when available; the numpy
fallback applies the identical stencil in the same accumulation order.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap


@njit(cache=True)
def _kernel_1d(u, out, c0, cp, cm, nsteps):
    B, n = u.shape
    for _ in range(nsteps):
        for b in range(B):
            for i in range(n):
                ip = i + 1 if i + 1 < n else 0
                im = i - 1 if i - 1 >= 0 else n - 1
                out[b, i] = c0[b, i] * u[b, i] + cp[b] * u[b, ip] + cm[b] * u[b, im]
        u, out = out, u
    return u


@njit(cache=True)
def _kernel_2d(u, out, c0, cxp, cxm, cyp, cym, nsteps):
    B, nx, ny = u.shape
    for _ in range(nsteps):
        for b in range(B):
            for i in range(nx):
                ip = i + 1 if i + 1 < nx else 0
                im = i - 1 if i - 1 >= 0 else nx - 1
                for j in range(ny):
                    jp = j + 1 if j + 1 < ny else 0
                    jm = j - 1 if j - 1 >= 0 else ny - 1
                    out[b, i, j] = (
                        c0[b, i, j] * u[b, i, j]
                        + cxp[b] * u[b, ip, j]
                        + cxm[b] * u[b, im, j]
                        + cyp[b] * u[b, i, jp]
                        + cym[b] * u[b, i, jm]
                    )
        u, out = out, u
    return u


def _numpy_1d(u, out, c0, cp, cm, nsteps):
    for _ in range(nsteps):
        np.multiply(u, c0, out=out)
        out += cp[:, None] * np.roll(u, -1, axis=1)
        out += cm[:, None] * np.roll(u, 1, axis=1)
        u, out = out, u
    return u


def _numpy_2d(u, out, c0, cxp, cxm, cyp, cym, nsteps):
    for _ in range(nsteps):
        np.multiply(u, c0, out=out)
        out += cxp[:, None, None] * np.roll(u, -1, axis=1)
        out += cxm[:, None, None] * np.roll(u, 1, axis=1)
        out += cyp[:, None, None] * np.roll(u, -1, axis=2)
        out += cym[:, None, None] * np.roll(u, 1, axis=2)
        u, out = out, u
    return u


class Propagator:
    """Batched stepping for a fixed potential and a family of drifts."""

    def __init__(self, V_values, spacing, lams, dt):
        V_values = np.ascontiguousarray(V_values, dtype=float)
        lams = np.atleast_2d(np.asarray(lams, dtype=float))
        B = lams.shape[0]
        d = V_values.ndim
        self.dt = float(dt)
        self.shape = V_values.shape
        self.B = B
        if d == 1:
            h = spacing[0]
            diffusion = dt / (h * h)
            self.c0 = np.ascontiguousarray(
                np.broadcast_to(1.0 - diffusion - dt * V_values, (B,) + self.shape)
            )
            self.cp = np.ascontiguousarray(0.5 * diffusion + dt * lams[:, 0] / (2 * h))
            self.cm = np.ascontiguousarray(0.5 * diffusion - dt * lams[:, 0] / (2 * h))
            self._args = (self.c0, self.cp, self.cm)
            self._kernel = _kernel_1d if HAVE_NUMBA else _numpy_1d
        else:
            hx, hy = spacing
            diff = dt * (1.0 / hx**2 + 1.0 / hy**2)
            self.c0 = np.ascontiguousarray(
                np.broadcast_to(1.0 - diff - dt * V_values, (B,) + self.shape)
            )
            self.cxp = np.ascontiguousarray(0.5 * dt / hx**2 + dt * lams[:, 0] / (2 * hx))
            self.cxm = np.ascontiguousarray(0.5 * dt / hx**2 - dt * lams[:, 0] / (2 * hx))
            self.cyp = np.ascontiguousarray(0.5 * dt / hy**2 + dt * lams[:, 1] / (2 * hy))
            self.cym = np.ascontiguousarray(0.5 * dt / hy**2 - dt * lams[:, 1] / (2 * hy))
            self._args = (self.c0, self.cxp, self.cxm, self.cyp, self.cym)
            self._kernel = _kernel_2d if HAVE_NUMBA else _numpy_2d

    def positivity_ok(self):
        """The stencil weights stay nonnegative, so iterates stay positive."""
        ok = self.c0.min() > 0.0
        for arr in self._args[1:]:
            ok = ok and arr.min() >= 0.0
        return bool(ok)

    def run(self, u, nsteps):
        """Advance ``u`` (shape (B, *grid)) by ``nsteps``; returns the new array."""
        u = np.ascontiguousarray(u)
        out = np.empty_like(u)
        return np.array(self._kernel(u, out, *self._args, nsteps), copy=True)

    def apply_generator(self, u):
        """A u computed as (step(u) - u) / dt, one extra stencil application."""
        stepped = self.run(u, 1)
        return (stepped - u) / self.dt
