"""Nonnegative bounded potential fields on the torus.

Deterministic benchmarks (constant, cosine) and periodized random media
(chessboard, shot noise) with reproducible counter-based seeding.  Random
draws live on the torus itself, so the same spec realized on a finer grid
refines the same medium.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePotentialError, ParameterError
from .grid import ScalarField, TorusGrid, bump_profile, convolve_periodic, mean

KINDS = ("constant", "cosine", "chessboard", "shot_noise")


def seeded_rng(seed, stream=0):
    """Counter-based generator keyed by (seed, stream); deterministic and splittable."""
    key = (int(seed) & 0xFFFFFFFFFFFFFFFF) << 64 | (int(stream) & 0xFFFFFFFFFFFFFFFF)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class PotentialSpec:
    """Declarative description of a potential; realized on a grid by ``realize``.

    Magnitude parameters are kind-specific: ``v`` for constant level or cosine
    mean, (``cells``, ``lo``, ``hi``) for the chessboard, (``rate``, ``amp``,
    ``r0``) for shot noise.  ``cap`` truncates pointwise before mollification;
    ``floor`` is added pointwise at the end.
    """

    kind: str
    v: float = 1.0
    cells: int = 8
    lo: float = 0.0
    hi: float = 2.0
    rate: float = 20.0
    amp: float = 1.0
    r0: float = 0.1
    seed: int = 0
    mollify_eps: float = 0.0
    floor: float = 0.0
    cap: float | None = None

    def asdict(self):
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class PotentialField:
    """Realized nonnegative potential with its extremes and provenance."""

    field: ScalarField
    v_max: float
    v_mean: float
    spec: PotentialSpec

    @property
    def grid(self):
        return self.field.grid

    @property
    def values(self):
        return self.field.values

    def min_value(self):
        return self.field.min()

    def content_key(self):
        """Stable hash of the realized values, for caches."""
        import hashlib

        h = hashlib.sha256()
        h.update(repr((self.grid.shape, self.grid.period)).encode())
        h.update(self.field.values.tobytes())
        return h.hexdigest()[:16]


def _validate(spec, grid):
    if spec.kind not in KINDS:
        raise ParameterError(f"unknown potential kind {spec.kind!r}")
    for name in ("v", "lo", "hi", "rate", "amp", "r0", "mollify_eps", "floor"):
        if getattr(spec, name) < 0:
            raise ParameterError(f"potential parameter {name} must be >= 0")
    if spec.cap is not None and spec.cap <= 0:
        raise ParameterError("cap must be positive when given")
    if spec.mollify_eps >= min(grid.period) / 2.0:
        raise ParameterError("mollify_eps must be below half the smallest period")
    if spec.kind in ("chessboard", "shot_noise") and not spec.mollify_eps > 0:
        raise ParameterError(f"{spec.kind} potentials require mollify_eps > 0")
    if spec.kind == "chessboard":
        if spec.cells < 1:
            raise ParameterError("chessboard needs at least one cell per dimension")
        if spec.hi < spec.lo:
            raise ParameterError("chessboard needs lo <= hi")
    if spec.kind == "shot_noise" and not spec.r0 > 0:
        raise ParameterError("shot noise needs r0 > 0")


def _raw_values(spec, grid):
    if spec.kind == "constant":
        return np.full(grid.shape, spec.v)
    if spec.kind == "cosine":
        out = np.ones(grid.shape)
        for ax, (x, L) in enumerate(zip(grid.meshes(), grid.period)):
            out *= 1.0 + np.cos(2.0 * np.pi * x / L)
        m = out.mean()
        if m <= 0:
            raise DegeneratePotentialError("cosine construction averaged to zero")
        return out * (spec.v / m)
    if spec.kind == "chessboard":
        m = spec.cells
        rng = seeded_rng(spec.seed)
        draws = rng.uniform(spec.lo, spec.hi, size=m**grid.d).reshape((m,) * grid.d)
        idx = tuple(
            np.minimum((x * m / L).astype(np.int64), m - 1)
            for x, L in zip(grid.meshes(), grid.period)
        )
        return draws[idx]
    # shot noise: Poisson number of uniform centers, one radial bump each
    rng = seeded_rng(spec.seed)
    volume = float(np.prod(grid.period))
    n_centers = int(rng.poisson(spec.rate * volume))
    centers = rng.random((n_centers, grid.d)) * np.asarray(grid.period)
    out = np.zeros(grid.shape)
    if n_centers:
        pts = np.stack([x.ravel() for x in grid.meshes()], axis=-1)
        for c in centers:
            r = grid.min_image_distance(pts, c)
            out += bump_profile(r / spec.r0).reshape(grid.shape)
        out *= spec.amp
    return out


def realize(spec, grid):
    """Build the potential field: raw kind, then cap, mollify, and floor."""
    _validate(spec, grid)
    values = _raw_values(spec, grid)
    if spec.cap is not None:
        values = np.minimum(values, spec.cap)
    field = ScalarField(grid, values)
    if spec.mollify_eps > 0:
        field = convolve_periodic(field, spec.mollify_eps)
        values = field.values
    if values.min() < -1e-10:
        raise DegeneratePotentialError("potential went negative after construction")
    values = np.maximum(values, 0.0) + spec.floor
    field = ScalarField(grid, values)
    v_mean = mean(field)
    if not v_mean > 0:
        raise DegeneratePotentialError("realized potential has zero mean")
    return PotentialField(field=field, v_max=field.max(), v_mean=v_mean, spec=spec)


def averaged(p):
    """Constant potential at the mean level of ``p`` (the annealed comparison)."""
    grid = p.grid
    spec = dataclasses.replace(
        p.spec, kind="constant", v=p.v_mean, mollify_eps=0.0, floor=0.0, cap=None
    )
    field = ScalarField(grid, np.full(grid.shape, p.v_mean))
    return PotentialField(field=field, v_max=p.v_mean, v_mean=p.v_mean, spec=spec)
