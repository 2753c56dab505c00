"""Spectral route: eigenvalues vs dense oracle, transform, recovery checks."""

import numpy as np
import pytest
import scipy.linalg as sla

from conftest import make_grid
from lyapvar.errors import ConvergenceError, ParameterError
from lyapvar.potential import PotentialSpec, realize
from lyapvar.spectral import (
    SpectralDecayEvaluator,
    decay_rate_spectral,
    inverse_r_check,
    lipschitz_check,
    principal_eigenvalue,
    r_transform,
)


def dense_generator_1d(V, lam=0.0):
    """Dense matrix of the same centered-difference discretization."""
    grid = V.grid
    n = grid.shape[0]
    h = grid.spacing[0]
    A = np.zeros((n, n))
    for i in range(n):
        ip, im = (i + 1) % n, (i - 1) % n
        A[i, i] = -1.0 / h**2 - V.values[i]
        A[i, ip] += 0.5 / h**2 + lam / (2 * h)
        A[i, im] += 0.5 / h**2 - lam / (2 * h)
    return A


@pytest.fixture(scope="module")
def cosine_128():
    return realize(PotentialSpec("cosine", v=1.0), make_grid(1, 128))


class TestPrincipalEigenvalue:
    def test_constant_potential_exact(self):
        V = realize(PotentialSpec("constant", v=0.7), make_grid(1, 64))
        eig = principal_eigenvalue(V, [0.0], tol=1e-10)
        assert eig.principal_value == pytest.approx(-0.7, abs=1e-9)
        assert np.abs(eig.eigenfield.values - 1.0).max() < 1e-9

    def test_constant_with_drift(self):
        V = realize(PotentialSpec("constant", v=0.5), make_grid(1, 64))
        eig = principal_eigenvalue(V, [0.4], tol=1e-10)
        assert eig.principal_value == pytest.approx(-0.5, abs=1e-9)

    def test_matches_dense_oracle(self, cosine_128):
        eig = principal_eigenvalue(cosine_128, [0.0], tol=1e-9)
        dense = np.max(sla.eigvals(dense_generator_1d(cosine_128)).real)
        assert eig.principal_value == pytest.approx(dense, abs=1e-6)

    def test_matches_dense_oracle_with_drift(self, cosine_128):
        eig = principal_eigenvalue(cosine_128, [0.5], tol=1e-9)
        dense = np.max(sla.eigvals(dense_generator_1d(cosine_128, 0.5)).real)
        assert eig.principal_value == pytest.approx(dense, abs=1e-6)

    def test_eigenfield_positive_and_residual(self, cosine_128):
        eig = principal_eigenvalue(cosine_128, [0.0], tol=1e-8)
        assert eig.eigenfield.min() > 0
        assert eig.residual <= 1e-8

    def test_drift_reflection_symmetry(self, cosine_128):
        plus = principal_eigenvalue(cosine_128, [0.3], tol=1e-10)
        minus = principal_eigenvalue(cosine_128, [-0.3], tol=1e-10)
        assert abs(plus.principal_value - minus.principal_value) < 1e-8

    def test_2d_smoke(self):
        V = realize(PotentialSpec("cosine", v=1.0), make_grid(2, 16))
        eig = principal_eigenvalue(V, [0.0, 0.0], tol=1e-8)
        assert -V.v_max <= eig.principal_value <= 0.0

    def test_convergence_error_carries_partial(self, cosine_128):
        with pytest.raises(ConvergenceError) as err:
            principal_eigenvalue(cosine_128, [0.0], tol=1e-12, max_steps=256)
        values, fields, steps, residuals = err.value.best
        assert np.isfinite(values[0])

    def test_rejects_wrong_drift_dimension(self, cosine_128):
        with pytest.raises(ParameterError):
            principal_eigenvalue(cosine_128, [0.0, 0.0])


class TestDecayRateSpectral:
    def test_constant(self):
        V = realize(PotentialSpec("constant", v=0.5), make_grid(1, 64))
        rate = decay_rate_spectral(V, [0.0], tol=1e-9)
        assert rate.value == pytest.approx(0.5, abs=1e-8)
        assert rate.route == "spectral"

    def test_bounds_sandwich(self, cosine_128):
        rate = decay_rate_spectral(cosine_128, [0.0], tol=1e-9)
        assert 0.0 <= rate.value <= cosine_128.v_max

    def test_floored_chessboard_above_floor(self):
        V = realize(
            PotentialSpec("chessboard", cells=8, lo=0.0, hi=2.0, seed=7, mollify_eps=0.05, floor=0.1),
            make_grid(1, 128),
        )
        rate = decay_rate_spectral(V, [0.0], tol=1e-8)
        assert rate.value >= 0.1 - 1e-6

    def test_flat_density_upper_bound(self, cosine_128):
        # decay rate minus |lam|^2/2 never exceeds E[V] - |lam|^2/2
        ev = SpectralDecayEvaluator(cosine_128, tol=1e-9)
        for s in (0.0, 0.5, 1.0):
            assert ev.at(np.array([s])) - s * s / 2 <= cosine_128.v_mean - s * s / 2 + 1e-8


class TestEvaluatorCache:
    def test_cache_hit_is_identical(self, cosine_128):
        ev = SpectralDecayEvaluator(cosine_128, tol=1e-8)
        a = ev.at(np.array([0.25]))
        n_evals = ev.evaluations
        b = ev.at(np.array([0.25]))
        assert a == b
        assert ev.evaluations == n_evals

    def test_batch_matches_singles(self, cosine_128):
        ev1 = SpectralDecayEvaluator(cosine_128, tol=1e-8)
        batch = ev1.evaluate_batch(np.array([[0.1], [0.2]]))
        ev2 = SpectralDecayEvaluator(cosine_128, tol=1e-8)
        singles = [ev2.at(np.array([0.1])), ev2.at(np.array([0.2]))]
        assert np.allclose(batch, singles, atol=1e-8)


class TestRTransform:
    def test_constant_rate_1d(self):
        const = lambda s, eta: 0.5
        res = r_transform(const, np.array([1.0]), tol=1e-8)
        assert res.value == pytest.approx(1.0, abs=1e-6)

    def test_constant_rate_2d_rotational(self):
        const = lambda s, eta: 0.5
        y = np.array([0.6, 0.8])
        res = r_transform(const, y, tol=1e-6, angle_tol=1e-6)
        assert res.value == pytest.approx(1.0, rel=1e-5)
        assert np.dot(res.eta_star, y) == pytest.approx(1.0, abs=1e-4)

    def test_degenerate_rate_sentinel(self):
        res = r_transform(lambda s, eta: 0.0, np.array([1.0]), tol=1e-6)
        assert res.value == float("-inf")

    def test_margin_monotone_along_samples(self, cosine_128):
        ev = SpectralDecayEvaluator(cosine_128, tol=1e-9)
        res = r_transform(ev, np.array([1.0]), tol=1e-5)
        for sample in res.diagnostics["samples"]:
            pts = sorted(sample)
            margins = [s * s / 2 - sig for s, sig in pts]
            assert all(a < b for a, b in zip(margins, margins[1:]))

    def test_root_above_zero_rate_radius(self, cosine_128):
        # rate grows with drift, so the root exceeds sqrt(2 sigma(0))
        ev = SpectralDecayEvaluator(cosine_128, tol=1e-9)
        res = r_transform(ev, np.array([1.0]), tol=1e-6)
        assert res.value >= np.sqrt(2 * res.diagnostics["sigma0"]) - 1e-5


class TestRateStructure:
    def test_midpoint_concavity(self, cosine_128):
        ev = SpectralDecayEvaluator(cosine_128, tol=1e-10)
        rng = np.random.default_rng(3)
        pairs = rng.uniform(-1.2, 1.2, size=(10, 2))
        lams = np.concatenate([pairs[:, :1], pairs[:, 1:], pairs.mean(axis=1, keepdims=True)])
        vals = ev.evaluate_batch(lams)
        m = lambda lam, sig: sig - 0.5 * lam * lam
        for k in range(10):
            left = m(pairs[k, 0], vals[k])
            right = m(pairs[k, 1], vals[10 + k])
            mid = m(pairs[k].mean(), vals[20 + k])
            assert mid >= 0.5 * (left + right) - 1e-8

    def test_ray_margin_decreasing(self, cosine_128):
        ev = SpectralDecayEvaluator(cosine_128, tol=1e-10)
        svals = np.linspace(0.0, 1.4, 8)
        vals = ev.evaluate_batch(svals[:, None])
        margins = vals - 0.5 * svals**2
        assert all(a >= b - 1e-8 for a, b in zip(margins, margins[1:]))


class TestInverseRecovery:
    def test_constant_zero_drift(self):
        V = realize(PotentialSpec("constant", v=0.6), make_grid(1, 64))
        out = inverse_r_check(V, np.array([0.0]), c=0.3, mu_step=1e-3)
        assert out["error"] <= 1e-3

    def test_constant_quarter_drift(self):
        v = 0.6
        V = realize(PotentialSpec("constant", v=v), make_grid(1, 64))
        lam = np.sqrt(v / 2.0)  # |lam|^2/2 = v/4, so the target is 3v/4
        out = inverse_r_check(V, np.array([lam]), c=v, mu_step=1e-3)
        assert out["capped"] == pytest.approx(0.75 * v, abs=1e-6)
        assert out["error"] <= 2e-3

    def test_rejects_c_above_zero_rate(self):
        V = realize(PotentialSpec("constant", v=0.5), make_grid(1, 64))
        with pytest.raises(ParameterError):
            inverse_r_check(V, np.array([0.0]), c=2.0)


class TestLipschitz:
    def test_constant_exact_constant(self):
        V = realize(PotentialSpec("constant", v=0.5), make_grid(1, 64))
        report = lipschitz_check(V, [(np.array([1.0]), np.array([2.0]))])
        assert report["constant"] == pytest.approx(1.0, abs=1e-4)
        assert report["all_ok"]
        # parallel directions attain the bound: |R(2) - R(1)| = C exactly
        row = report["pairs"][0]
        assert row["difference"] == pytest.approx(report["constant"], abs=1e-4)

    def test_same_point_zero_difference(self):
        V = realize(PotentialSpec("constant", v=0.5), make_grid(1, 64))
        report = lipschitz_check(V, [(np.array([1.5]), np.array([1.5]))])
        assert report["pairs"][0]["difference"] == 0.0

    def test_random_pairs_on_cosine(self, cosine_128):
        rng = np.random.default_rng(5)
        pairs = [(rng.normal(size=1), rng.normal(size=1)) for _ in range(4)]
        report = lipschitz_check(cosine_128, pairs)
        assert report["all_ok"]
