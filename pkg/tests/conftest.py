"""Shared builders for test fields and densities."""

import numpy as np
import pytest

from lyapvar.grid import ScalarField, TorusGrid


def make_grid(d, n, L=1.0):
    return TorusGrid((n,) * d, L)


def band_limited(grid, seed, modes=3, scale=0.5):
    """Random real trig polynomial with frequencies up to ``modes``."""
    rng = np.random.default_rng(seed)
    out = np.zeros(grid.shape)
    meshes = grid.meshes()
    for kvec in np.ndindex(*((modes + 1,) * grid.d)):
        if all(k == 0 for k in kvec):
            continue
        arg = sum(2 * np.pi * k * x / L for k, x, L in zip(kvec, meshes, grid.period))
        out += scale * rng.normal() * np.cos(arg + rng.uniform(0, 2 * np.pi))
    return out


def random_density(grid, seed, scale=0.5, modes=2):
    """Strictly positive unit-mean density exp(g)/E[exp(g)] with smooth g."""
    g = band_limited(grid, seed, modes=modes, scale=scale)
    f = np.exp(g)
    f /= f.mean()
    return ScalarField(grid, f)


@pytest.fixture
def grid1d64():
    return make_grid(1, 64)


@pytest.fixture
def grid2d32():
    return make_grid(2, 32)
