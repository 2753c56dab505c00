"""Field substrate: averages, derivatives, and periodic convolution."""

import numpy as np
import pytest

from lyapvar.errors import ParameterError
from lyapvar.grid import (
    FD2,
    ScalarField,
    TorusGrid,
    VectorField,
    constant_field,
    convolve_periodic,
    divergence,
    gradient,
    interp_periodic,
    mean,
)


def grid1d(n=64, L=1.0):
    return TorusGrid((n,), L)


def grid2d(n=32, L=1.0):
    return TorusGrid((n, n), L)


def random_smooth_field(grid, seed=0, modes=3, scale=1.0):
    """Band-limited random field, smooth by construction."""
    rng = np.random.default_rng(seed)
    out = np.zeros(grid.shape)
    meshes = grid.meshes()
    for _ in range(modes):
        ks = rng.integers(1, 4, size=grid.d)
        phase = rng.uniform(0, 2 * np.pi)
        amp = scale * rng.normal()
        arg = sum(2 * np.pi * k * x / L for k, x, L in zip(ks, meshes, grid.period))
        out += amp * np.cos(arg + phase)
    return ScalarField(grid, out)


class TestGridConstruction:
    def test_rejects_non_power_of_two(self):
        with pytest.raises(ParameterError):
            TorusGrid((48,))

    def test_rejects_small_grid(self):
        with pytest.raises(ParameterError):
            TorusGrid((4,))

    def test_rejects_bad_dimension(self):
        with pytest.raises(ParameterError):
            TorusGrid((8, 8, 8))

    def test_spacing(self):
        g = TorusGrid((16,), 2.0)
        assert g.spacing == (0.125,)

    def test_field_shape_mismatch(self):
        with pytest.raises(ParameterError):
            ScalarField(grid1d(16), np.zeros(8))

    def test_fields_immutable(self):
        f = constant_field(grid1d(16), 1.0)
        with pytest.raises(ValueError):
            f.values[0] = 2.0


class TestMean:
    def test_constant(self):
        assert mean(constant_field(grid1d(), 3.0)) == pytest.approx(3.0, abs=0)

    def test_zero_mean_mode(self):
        g = grid1d(64)
        f = ScalarField(g, np.cos(2 * np.pi * g.axes()[0] / g.period[0]))
        assert abs(mean(f)) < 1e-12

    def test_matches_direct_summation(self):
        g = grid2d(16)
        rng = np.random.default_rng(42)
        vals = rng.normal(size=g.shape)
        oracle = vals.sum() / vals.size  # brute-force sum/count
        assert mean(ScalarField(g, vals)) == pytest.approx(oracle, rel=1e-14)


class TestGradient:
    def test_constant_is_zero(self):
        g = grid2d()
        vf = gradient(constant_field(g, 5.0))
        for c in vf.components:
            assert np.abs(c.values).max() < 1e-12

    def test_spectral_matches_analytic(self):
        L = 2.0
        g = grid1d(64, L)
        x = g.axes()[0]
        f = ScalarField(g, np.sin(2 * np.pi * x / L))
        want = (2 * np.pi / L) * np.cos(2 * np.pi * x / L)
        got = gradient(f).components[0].values
        assert np.abs(got - want).max() < 1e-10

    def test_fd2_is_second_order(self):
        L = 1.0
        errs = []
        for n in (32, 64):
            g = grid1d(n, L)
            x = g.axes()[0]
            f = ScalarField(g, np.sin(2 * np.pi * x / L))
            want = (2 * np.pi / L) * np.cos(2 * np.pi * x / L)
            got = gradient(f, method=FD2).components[0].values
            errs.append(np.abs(got - want).max())
        # halving h divides the error by about 4
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)

    def test_methods_agree_on_smooth_fields(self):
        g = grid2d(32)
        f = random_smooth_field(g, seed=1)
        h = max(g.spacing)
        for ax in range(2):
            a = gradient(f).components[ax].values
            b = gradient(f, method=FD2).components[ax].values
            # centered-difference truncation bound: h^2 |f'''| / 6
            d3 = gradient(gradient(gradient(f).components[ax]).components[ax]).components[ax]
            bound = (h**2 / 6.0) * np.abs(d3.values).max()
            assert np.abs(a - b).max() < 1.1 * bound


class TestDivergence:
    def test_constant_vector_field(self):
        g = grid2d()
        vf = VectorField(g, (np.ones(g.shape), 2 * np.ones(g.shape)))
        assert np.abs(divergence(vf).values).max() < 1e-12

    def test_rotated_gradient_is_divergence_free(self):
        g = grid2d(32)
        w = random_smooth_field(g, seed=3)
        gw = gradient(w)
        phi = VectorField(g, (gw.components[1].values, -gw.components[0].values))
        assert np.abs(divergence(phi).values).max() < 1e-10

    def test_analytic_1d(self):
        g = grid1d(64)
        x = g.axes()[0]
        vf = VectorField(g, (np.sin(2 * np.pi * x),))
        want = 2 * np.pi * np.cos(2 * np.pi * x)
        assert np.abs(divergence(vf).values - want).max() < 1e-10


class TestIntegrationByParts:
    @pytest.mark.parametrize("method", ["spectral", FD2])
    @pytest.mark.parametrize("seed", [0, 1, 2, 3])
    def test_derivative_has_zero_mean(self, method, seed):
        g = grid2d(16)
        f = random_smooth_field(g, seed=seed)
        for ax in range(2):
            assert abs(mean(gradient(f, method=method).components[ax])) < 1e-10

    @pytest.mark.parametrize("method", ["spectral", FD2])
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_pairing_antisymmetry(self, method, seed):
        g = grid1d(32)
        f = random_smooth_field(g, seed=seed)
        h = random_smooth_field(g, seed=seed + 100)
        df = gradient(f, method=method).components[0].values
        dh = gradient(h, method=method).components[0].values
        lhs = np.mean(f.values * dh) + np.mean(df * h.values)
        assert abs(lhs) < 1e-10


class TestConvolution:
    def test_constant_unchanged(self):
        g = grid1d()
        f = constant_field(g, 2.5)
        out = convolve_periodic(f, 0.1)
        assert np.abs(out.values - 2.5).max() < 1e-12

    def test_step_mean_preserved_and_smooth(self):
        g = grid1d(128)
        x = g.axes()[0]
        f = ScalarField(g, (np.abs(x - 0.5) < 0.2).astype(float))
        out = convolve_periodic(f, 0.1)
        assert abs(mean(out) - mean(f)) < 1e-12
        assert out.min() >= f.min() - 1e-12
        assert out.max() <= f.max() + 1e-12
        # smoothed: the jump is gone
        assert np.abs(np.diff(out.values)).max() < 0.5 * np.abs(np.diff(f.values)).max()

    def test_small_width_near_identity(self):
        g = grid1d(128)
        f = random_smooth_field(g, seed=5)
        eps = 2 * g.spacing[0]
        out = convolve_periodic(f, eps)
        # second-moment bound: |f*k - f| <= eps^2 max|f''| / 2
        d2 = gradient(gradient(f).components[0]).components[0].values
        assert np.abs(out.values - f.values).max() <= 0.5 * eps**2 * np.abs(d2).max() + 1e-12

    def test_eps_out_of_range(self):
        g = grid1d()
        with pytest.raises(ParameterError):
            convolve_periodic(constant_field(g, 1.0), 0.6)

    def test_2d_mean_preserved(self):
        g = grid2d(32)
        f = random_smooth_field(g, seed=7)
        out = convolve_periodic(f, 0.07)
        assert abs(mean(out) - mean(f)) < 1e-12


class TestInterpolation:
    def test_exact_on_grid_points(self):
        g = grid1d(32)
        f = random_smooth_field(g, seed=9)
        got = interp_periodic(f, g.axes()[0])
        assert np.abs(got - f.values).max() < 1e-14

    def test_wraps_periodically(self):
        g = grid1d(32)
        f = random_smooth_field(g, seed=10)
        pts = np.array([0.3, 0.7])
        assert np.allclose(interp_periodic(f, pts), interp_periodic(f, pts + 5.0))

    def test_bilinear_2d(self):
        g = grid2d(16)
        x, y = g.meshes()
        f = ScalarField(g, 1.0 + 0.0 * x)  # constant: interpolation exact anywhere
        pts = np.random.default_rng(0).random((20, 2))
        assert np.allclose(interp_periodic(f, pts), 1.0)
