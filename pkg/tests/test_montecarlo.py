"""Path estimators: free energy, survival decay, tilting, determinism."""

import numpy as np
import pytest

from conftest import make_grid
from lyapvar.errors import ParameterError, StatisticalValidityError
from lyapvar.montecarlo import (
    TiltSpec,
    _pairwise_logsumexp,
    mc_free_energy,
    mc_survival_decay_1d,
)
from lyapvar.potential import PotentialSpec, realize
from lyapvar.spectral import decay_rate_spectral


@pytest.fixture(scope="module")
def const_half():
    return realize(PotentialSpec("constant", v=0.5, floor=0.0), make_grid(1, 64))


@pytest.fixture(scope="module")
def cosine_floored():
    return realize(PotentialSpec("cosine", v=1.0, floor=0.05), make_grid(1, 128))


class TestPairwiseLogSumExp:
    def test_matches_direct(self):
        rng = np.random.default_rng(0)
        a = rng.normal(size=101)
        direct = np.log(np.exp(a).sum())
        assert _pairwise_logsumexp(a) == pytest.approx(direct, abs=1e-12)

    def test_handles_minus_inf(self):
        a = np.array([-np.inf, 0.0, -np.inf])
        assert _pairwise_logsumexp(a) == pytest.approx(0.0, abs=1e-15)

    def test_empty(self):
        assert _pairwise_logsumexp(np.array([])) == float("-inf")


class TestFreeEnergy:
    def test_constant_deterministic_weights(self, const_half):
        est = mc_free_energy(const_half, [0.0], t=10.0, dt=1e-2, npaths=1000, seed=3)
        assert est.value == pytest.approx(-0.5, abs=1e-12)
        assert est.stderr == pytest.approx(0.0, abs=1e-13)

    def test_seeded_reproducibility(self, const_half):
        a = mc_free_energy(const_half, [0.2], t=10.0, npaths=1000, seed=11)
        b = mc_free_energy(const_half, [0.2], t=10.0, npaths=1000, seed=11)
        assert a.value == b.value
        assert a.stderr == b.stderr

    def test_worker_count_invariance(self, cosine_floored):
        vals = [
            mc_free_energy(cosine_floored, [0.0], t=10.0, npaths=1200, seed=5, workers=w).value
            for w in (1, 2, 8)
        ]
        assert vals[0] == vals[1] == vals[2]

    def test_matches_spectral_rate(self, cosine_floored):
        est = mc_free_energy(cosine_floored, [0.0], t=15.0, npaths=4000, seed=7)
        rate = decay_rate_spectral(cosine_floored, [0.0], tol=1e-8)
        assert abs(est.value + rate.value) < 3 * est.stderr

    def test_dt_halving_consistent(self, cosine_floored):
        a = mc_free_energy(cosine_floored, [0.0], t=10.0, dt=1e-2, npaths=2000, seed=9)
        b = mc_free_energy(cosine_floored, [0.0], t=10.0, dt=5e-3, npaths=2000, seed=9)
        assert abs(a.value - b.value) < 3 * (a.stderr + b.stderr)

    def test_parameter_validation(self, const_half):
        with pytest.raises(ParameterError):
            mc_free_energy(const_half, [0.0], t=5.0)
        with pytest.raises(ParameterError):
            mc_free_energy(const_half, [0.0], dt=0.05)
        with pytest.raises(ParameterError):
            mc_free_energy(const_half, [0.0], npaths=10)


class TestSurvivalDecay:
    def test_constant_slope(self, const_half):
        dec = mc_survival_decay_1d(const_half, [2.0, 3.0, 4.0], npaths=4000, seed=1)
        assert dec.slope == pytest.approx(1.0, rel=0.1)
        # the affine fit absorbs the unit hitting radius: intercept near -1
        assert dec.intercept == pytest.approx(-1.0, abs=0.35)

    def test_reproducible(self, const_half):
        a = mc_survival_decay_1d(const_half, [2.0, 3.0], npaths=1500, seed=2)
        b = mc_survival_decay_1d(const_half, [2.0, 3.0], npaths=1500, seed=2)
        assert a.slope == b.slope
        assert a.table[0]["log_e"] == b.table[0]["log_e"]

    def test_worker_invariance(self, const_half):
        a = mc_survival_decay_1d(const_half, [2.0, 3.0], npaths=1500, seed=2, workers=1)
        b = mc_survival_decay_1d(const_half, [2.0, 3.0], npaths=1500, seed=2, workers=4)
        assert a.slope == b.slope

    def test_tilted_agrees_and_reduces_variance(self, const_half):
        r_list = [3.0, 4.0]
        plain = mc_survival_decay_1d(const_half, r_list, npaths=4000, seed=4)
        tilt = TiltSpec(params=None, flux=1.0, speed=1.0)  # speed = sqrt(2 v)
        tilted = mc_survival_decay_1d(const_half, r_list, npaths=4000, seed=4, tilt=tilt)
        for pr, tr in zip(plain.table, tilted.table):
            se = 3 * (pr["stderr_log"] + tr["stderr_log"])
            assert abs(pr["log_e"] - tr["log_e"]) < se
        assert tilted.table[-1]["estimator_variance"] < plain.table[-1]["estimator_variance"]

    def test_requires_floor(self):
        V = realize(PotentialSpec("cosine", v=1.0), make_grid(1, 64))
        with pytest.raises(ParameterError):
            mc_survival_decay_1d(V, [2.0, 3.0], npaths=1000, seed=0)

    def test_too_few_hits_raises_with_partial(self):
        V = realize(PotentialSpec("constant", v=8.0), make_grid(1, 64))
        with pytest.raises(StatisticalValidityError) as err:
            mc_survival_decay_1d(V, [2.0, 6.0], npaths=1000, seed=6)
        partial = err.value.partial
        assert partial is not None
        assert partial.table[-1]["hits"] < 100

    def test_rejects_bad_r_list(self, const_half):
        with pytest.raises(ParameterError):
            mc_survival_decay_1d(const_half, [3.0, 2.0], npaths=1000)
        with pytest.raises(ParameterError):
            mc_survival_decay_1d(const_half, [2.0, 12.0], npaths=1000)


class TestTiltSpec:
    def test_flat_density_constant_drift(self):
        g = make_grid(1, 64)
        tilt = TiltSpec(params=None, flux=1.0, speed=0.7)
        assert np.allclose(tilt.drift_values(g), 0.7)

    def test_density_drift_finite(self):
        from lyapvar.functionals import DensityParams

        g = make_grid(1, 64)
        c = np.zeros(9)
        c[1] = 0.4
        tilt = TiltSpec(params=DensityParams(c), flux=1.0, speed=1.0)
        b = tilt.drift_values(g)
        assert np.all(np.isfinite(b))
        assert b.shape == g.shape

    def test_speed_must_be_positive(self):
        g = make_grid(1, 64)
        with pytest.raises(ParameterError):
            TiltSpec(speed=0.0).drift_values(g)
