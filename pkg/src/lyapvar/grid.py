"""Periodic grids, sampled fields, and discrete calculus on the torus.

Everything downstream (potentials, cell problems, eigenvalue solves, path
sampling) works on uniform periodic grids built here.  Expectations are plain
grid averages (trapezoid rule on a periodic grid, spectrally accurate for
resolved trigonometric polynomials).  Differentiation is discrete-Fourier by
default with a centered second-order finite-difference alternative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

SPECTRAL = "spectral"
FD2 = "fd2"


def _check_power_of_two(n):
    return n >= 8 and (n & (n - 1)) == 0


class TorusGrid:
    """Uniform periodic grid on [0, L_1) x ... x [0, L_d), d in {1, 2}.

    ``n`` points per dimension (power of two, >= 8), physical period stored per
    dimension.  Instances are immutable and hashable; FFT symbol arrays are
    precomputed once.
    """

    def __init__(self, shape, period=1.0):
        shape = tuple(int(n) for n in np.atleast_1d(shape))
        d = len(shape)
        if d not in (1, 2):
            raise ParameterError(f"grid dimension must be 1 or 2, got {d}")
        for n in shape:
            if not _check_power_of_two(n):
                raise ParameterError(f"grid points per dimension must be a power of two >= 8, got {n}")
        period = np.broadcast_to(np.asarray(period, dtype=float), (d,))
        if np.any(period <= 0):
            raise ParameterError("grid period must be positive")
        self.shape = shape
        self.d = d
        self.period = tuple(float(L) for L in period)
        self.spacing = tuple(L / n for L, n in zip(self.period, shape))
        self.npoints = int(np.prod(shape))
        self._axes = tuple(
            np.arange(n) * h for n, h in zip(shape, self.spacing)
        )
        self._build_symbols()

    def _build_symbols(self):
        # Angular wavenumbers for the rfftn layout: full fftfreq on leading
        # axes, rfftfreq on the last.  Nyquist modes are zeroed in the
        # derivative symbols (standard convention for odd-order derivatives).
        ks = []
        for ax, (n, L) in enumerate(zip(self.shape, self.period)):
            if ax == self.d - 1:
                k = 2.0 * np.pi * np.fft.rfftfreq(n, d=L / n)
                k_deriv = k.copy()
                k_deriv[-1] = 0.0  # rfft last entry is the Nyquist mode
            else:
                k = 2.0 * np.pi * np.fft.fftfreq(n, d=L / n)
                k_deriv = k.copy()
                k_deriv[n // 2] = 0.0
            shape = [1] * self.d
            shape[ax] = len(k)
            ks.append((k.reshape(shape), k_deriv.reshape(shape)))
        self._deriv_symbols = tuple(1j * kd for _, kd in ks)
        self._fft_axes = tuple(range(self.d))
        # full |k|^2 symbol (Nyquist kept: the second-derivative symbol is even)
        ksq = np.zeros(np.broadcast_shapes(*(k.shape for k, _ in ks)))
        for k, _ in ks:
            ksq = ksq + k * k
        self._ksq_symbol = ksq

    def axes(self):
        """Coordinate arrays along each axis."""
        return self._axes

    def meshes(self):
        """Full coordinate arrays of the grid shape, one per dimension."""
        return np.meshgrid(*self._axes, indexing="ij")

    def wrap(self, points):
        """Reduce points modulo the period, per dimension."""
        points = np.asarray(points, dtype=float)
        return np.mod(points, np.asarray(self.period))

    def min_image_distance(self, points, center=None):
        """Torus (minimum image) distance from ``points`` to ``center``."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if center is None:
            center = np.zeros(self.d)
        delta = np.abs(pts - np.asarray(center, dtype=float))
        L = np.asarray(self.period)
        delta = np.minimum(delta, L - delta)
        return np.sqrt(np.sum(delta**2, axis=-1))

    def __eq__(self, other):
        return (
            isinstance(other, TorusGrid)
            and self.shape == other.shape
            and self.period == other.period
        )

    def __hash__(self):
        return hash((self.shape, self.period))

    def __repr__(self):
        return f"TorusGrid(shape={self.shape}, period={self.period})"


def _freeze(arr):
    arr = np.asarray(arr, dtype=float)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ScalarField:
    """Real function sampled on a TorusGrid.  Values are immutable."""

    grid: TorusGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise ParameterError(
                f"field shape {values.shape} does not match grid shape {self.grid.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ParameterError("field contains non-finite values")
        object.__setattr__(self, "values", _freeze(values.copy()))

    def min(self):
        return float(self.values.min())

    def max(self):
        return float(self.values.max())


@dataclass(frozen=True)
class VectorField:
    """d-component vector field; all components share one grid."""

    grid: TorusGrid
    components: tuple

    def __post_init__(self):
        comps = tuple(
            c if isinstance(c, ScalarField) else ScalarField(self.grid, c)
            for c in self.components
        )
        if len(comps) != self.grid.d:
            raise ParameterError("component count must equal grid dimension")
        for c in comps:
            if c.grid != self.grid:
                raise ParameterError("all components must share the grid")
        object.__setattr__(self, "components", comps)

    def arrays(self):
        return tuple(c.values for c in self.components)


def constant_field(grid, value):
    """Field identically equal to ``value``."""
    return ScalarField(grid, np.full(grid.shape, float(value)))


def mean(field):
    """Grid average, the discrete expectation E[.]."""
    values = field.values if isinstance(field, ScalarField) else np.asarray(field)
    return float(np.mean(values))


def _deriv_spectral(grid, values, axis):
    vh = np.fft.rfftn(values)
    return np.fft.irfftn(grid._deriv_symbols[axis] * vh, s=grid.shape, axes=grid._fft_axes)


def _deriv_fd2(grid, values, axis):
    h = grid.spacing[axis]
    return (np.roll(values, -1, axis=axis) - np.roll(values, 1, axis=axis)) / (2.0 * h)


def deriv(grid, values, axis, method=SPECTRAL):
    """Partial derivative of a raw value array along one axis."""
    if method == SPECTRAL:
        return _deriv_spectral(grid, values, axis)
    if method == FD2:
        return _deriv_fd2(grid, values, axis)
    raise ParameterError(f"unknown differentiation method: {method!r}")


def gradient(field, method=SPECTRAL):
    """Gradient with respect to physical coordinates."""
    grid = field.grid
    comps = tuple(
        ScalarField(grid, deriv(grid, field.values, ax, method)) for ax in range(grid.d)
    )
    return VectorField(grid, comps)


def divergence(vf, method=SPECTRAL):
    """Sum of component derivatives."""
    grid = vf.grid
    out = np.zeros(grid.shape)
    for ax, comp in enumerate(vf.components):
        out += deriv(grid, comp.values, ax, method)
    return ScalarField(grid, out)


def inverse_laplacian_preconditioner(grid, scale=1.0):
    """Apply (-scale * Laplacian)^+ in Fourier space, zeroing the mean mode.

    Constant-coefficient spectral preconditioner for the variable-coefficient
    elliptic solves: it caps the conditioning at max f / min f independently
    of the grid size.
    """
    symbol = grid._ksq_symbol.copy() * scale
    flat0 = (0,) * symbol.ndim
    symbol[flat0] = 1.0
    inv = 1.0 / symbol
    inv[flat0] = 0.0

    def apply(r):
        return np.fft.irfftn(np.fft.rfftn(r) * inv, s=grid.shape, axes=grid._fft_axes)

    return apply


def bump_profile(u):
    """Smooth compactly supported bump exp(-1/(1-u^2)) on |u| < 1, else 0."""
    u = np.asarray(u, dtype=float)
    out = np.zeros(u.shape)
    inside = np.abs(u) < 1.0
    ui = u[inside]
    out[inside] = np.exp(-1.0 / (1.0 - ui * ui))
    return out


def mollifier_weights(grid, eps):
    """Discrete unit-mass kernel: the bump profile at torus distance / eps.

    Centered at the origin grid point and normalized so the weights sum to
    one, which makes periodic convolution mean- and minimum-preserving.
    """
    if not eps > 0 or eps >= min(grid.period) / 2.0:
        raise ParameterError(
            f"mollifier width must satisfy 0 < eps < min period / 2, got {eps}"
        )
    meshes = grid.meshes()
    r2 = np.zeros(grid.shape)
    for x, L in zip(meshes, grid.period):
        d = np.minimum(x, L - x)
        r2 += d * d
    w = bump_profile(np.sqrt(r2) / eps)
    return w / w.sum()


def convolve_periodic(field, eps):
    """Periodic convolution with the smooth bump kernel of width ``eps``.

    Output mean equals input mean and output min is bounded below by the
    input min, both to rounding, because the discrete kernel is a unit-mass
    nonnegative weight.
    """
    grid = field.grid
    w = mollifier_weights(grid, eps)
    out = np.fft.irfftn(np.fft.rfftn(field.values) * np.fft.rfftn(w), s=grid.shape, axes=grid._fft_axes)
    return ScalarField(grid, out)


def interp_periodic(field, points):
    """Multilinear periodic interpolation of a field at arbitrary points.

    ``points`` has shape (m, d) or (m,) in one dimension.  Used for potential
    and drift lookups along sampled paths.
    """
    grid = field.grid
    values = field.values
    pts = np.asarray(points, dtype=float)
    if grid.d == 1:
        pts = pts.reshape(-1)
        t = pts / grid.spacing[0]
        i0 = np.floor(t).astype(np.int64)
        frac = t - i0
        i0 = np.mod(i0, grid.shape[0])
        i1 = np.mod(i0 + 1, grid.shape[0])
        return values[i0] * (1.0 - frac) + values[i1] * frac
    pts = pts.reshape(-1, 2)
    tx = pts[:, 0] / grid.spacing[0]
    ty = pts[:, 1] / grid.spacing[1]
    ix0 = np.floor(tx).astype(np.int64)
    iy0 = np.floor(ty).astype(np.int64)
    fx = tx - ix0
    fy = ty - iy0
    ix0 = np.mod(ix0, grid.shape[0])
    iy0 = np.mod(iy0, grid.shape[1])
    ix1 = np.mod(ix0 + 1, grid.shape[0])
    iy1 = np.mod(iy0 + 1, grid.shape[1])
    v00 = values[ix0, iy0]
    v01 = values[ix0, iy1]
    v10 = values[ix1, iy0]
    v11 = values[ix1, iy1]
    return (
        v00 * (1 - fx) * (1 - fy)
        + v01 * (1 - fx) * fy
        + v10 * fx * (1 - fy)
        + v11 * fx * fy
    )
