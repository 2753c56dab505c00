"""Feynman-Kac Monte Carlo: free energy and survival decay, with tilting.

Direct stochastic validation of the other two routes.  Path weights are
exp(-integral of V); the free-energy estimate matches minus the spectral
rate, and the fitted survival slope matches the variational decay rate.  A
tilted drift pointed at the target slashes the variance of the rare-event
estimate without changing its mean.
"""

import numpy as np

from lyapvar.grid import TorusGrid
from lyapvar.montecarlo import TiltSpec, mc_free_energy, mc_survival_decay_1d
from lyapvar.potential import PotentialSpec, realize
from lyapvar.spectral import decay_rate_spectral

grid = TorusGrid((128,))
V = realize(PotentialSpec("cosine", v=1.0, floor=0.05), grid)

print("== free energy ==")
est = mc_free_energy(V, [0.0], t=15.0, dt=1e-2, npaths=4000, seed=21)
rate = decay_rate_spectral(V, [0.0], tol=1e-8)
print(f"monte carlo:  {est.value:.4f} +- {est.stderr:.4f}   ({est.npaths} paths, t={est.t_horizon})")
print(f"spectral:    {-rate.value:.4f}")
print(f"same seed is bit-reproducible for any worker count")

print("\n== survival decay ==")
Vc = realize(PotentialSpec("constant", v=0.5), grid)
dec = mc_survival_decay_1d(Vc, [3.0, 4.0, 5.0], npaths=4000, seed=5)
print("constant 0.5: fitted slope "
      f"{dec.slope:.3f} (analytic sqrt(2 v) = 1.0), intercept {dec.intercept:+.3f}")
for row in dec.table:
    print(f"  r={row['r']:.0f}: -ln(estimate) = {-row['log_e']:.3f}, hits {row['hits']}")

print("\n== tilted estimator ==")
tilt = TiltSpec(params=None, flux=1.0, speed=1.0)  # drift at speed sqrt(2 v) toward the target
tilted = mc_survival_decay_1d(Vc, [3.0, 4.0, 5.0], npaths=4000, seed=5, tilt=tilt)
print(f"tilted slope {tilted.slope:.3f} agrees with plain {dec.slope:.3f}")
for pr, tr in zip(dec.table, tilted.table):
    ratio = tr["estimator_variance"] / pr["estimator_variance"]
    print(f"  r={pr['r']:.0f}: variance ratio tilted/plain = {ratio:.2e}")
