"""Feynman-Kac Monte Carlo: free-energy and survival-decay estimators.

Paths are Euler-Maruyama with the potential sampled at step midpoints and
weights carried in log space.  Every path owns a counter-based random stream
keyed by (seed, path index), so estimates are bit-identical for any worker
count or chunking.  Reductions are pairwise log-sum-exp trees in fixed path
order.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, StatisticalValidityError, WeightUnderflowError
from .functionals import DensityBasis, DensityParams
from .grid import ScalarField, interp_periodic
from .potential import seeded_rng

LOG_KILL = 45.0  # drop contributions below exp(-45): zero at double precision
CHUNK = 512


def _pairwise_logsumexp(a):
    """Deterministic pairwise log-sum-exp over a vector (fixed order)."""
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return float("-inf")
    while a.size > 1:
        m = a.size // 2
        head = np.logaddexp(a[:m], a[m : 2 * m])
        a = np.concatenate([head, a[2 * m :]])
    return float(a[0])


@dataclass
class McEstimate:
    """Monte Carlo value with its batch-means standard error."""

    value: float
    stderr: float
    npaths: int
    t_horizon: float
    dt: float
    seed: int


@dataclass
class TiltSpec:
    """Importance-sampling drift b = f'/(2f) + speed * flux / f (one dimension).

    ``params`` selects the density f (None means flat), ``flux`` the constant
    admissible flux, ``speed`` the travel speed along it.
    """

    params: DensityParams | None = None
    flux: float = 1.0
    speed: float = 1.0

    def drift_values(self, grid):
        if self.speed <= 0:
            raise ParameterError("tilt speed must be positive")
        if self.params is None:
            return np.full(grid.shape, self.speed * self.flux)
        basis = DensityBasis.get(grid, self.params.modes)
        f = basis.density_values(self.params.coeffs)
        df = basis.log_density_grad(self.params.coeffs)[0] * f
        return df / (2.0 * f) + self.speed * self.flux / f


def _chunks(npaths, chunk=CHUNK):
    out = []
    start = 0
    while start < npaths:
        out.append((start, min(start + chunk, npaths)))
        start = out[-1][1]
    return out


def _run_chunks(worker, spans, workers):
    if workers <= 1:
        return [worker(span) for span in spans]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, spans))


def mc_free_energy(V, lambda_drift, t=20.0, dt=1e-2, npaths=10_000, seed=0, workers=1):
    """Estimate the drifted free-energy rate (1/t) ln E[exp(-int V)].

    Weights use midpoint potential sampling along Euler-Maruyama paths with
    constant drift.  The standard error comes from ten contiguous path
    batches via the delta method on the log-mean.
    """
    grid = V.grid
    d = grid.d
    lam = np.zeros(d) if lambda_drift is None else np.asarray(lambda_drift, dtype=float).reshape(-1)
    if lam.shape != (d,):
        raise ParameterError("drift must match the grid dimension")
    if t < 10.0:
        raise ParameterError("horizon must be at least 10")
    if dt > 1e-2:
        raise ParameterError("dt must be at most 1e-2")
    if npaths < 1000:
        raise ParameterError("need at least 1000 paths")
    nsteps = int(round(t / dt))
    dt = t / nsteps
    sqdt = np.sqrt(dt)
    field = V.field

    def worker(span):
        lo, hi = span
        nc = hi - lo
        logw = np.zeros(nc)
        pos = np.zeros((nc, d))
        noise = np.empty((nc, nsteps, d))
        for i in range(nc):
            noise[i] = seeded_rng(seed, lo + i).standard_normal((nsteps, d))
        for k in range(nsteps):
            step = lam[None, :] * dt + sqdt * noise[:, k, :]
            mid = pos + 0.5 * step
            logw -= interp_periodic(field, mid) * dt
            pos += step
        return logw

    parts = _run_chunks(worker, _chunks(npaths), workers)
    logw = np.concatenate(parts)
    lse = _pairwise_logsumexp(logw)
    if not np.isfinite(lse):
        raise WeightUnderflowError(
            "all path weights vanished; shorten the horizon or floor the potential"
        )
    log_mean = lse - np.log(npaths)
    value = log_mean / t

    nb = 10
    edges = np.linspace(0, npaths, nb + 1).astype(int)
    ratios = np.empty(nb)
    for b in range(nb):
        part = logw[edges[b] : edges[b + 1]]
        ratios[b] = np.exp(_pairwise_logsumexp(part) - np.log(part.size) - log_mean)
    stderr = float(np.std(ratios, ddof=1) / np.sqrt(nb) / t)
    return McEstimate(
        value=float(value), stderr=stderr, npaths=npaths, t_horizon=t, dt=dt, seed=seed
    )


@dataclass
class SurvivalDecay:
    """Fitted exponential decay of first-passage survival weights."""

    slope: float
    intercept: float
    table: list
    npaths: int
    seed: int
    diagnostics: dict


def _survive_one_r(field, drift_field, r, npaths, seed, stream_base, dt, t_max, workers):
    """Contributions exp(-int V) at the hitting time of [-1, 1], from -r.

    Paths that neither hit within t_max nor keep a representable weight
    contribute zero.  Returns per-path log contributions (-inf for zero).
    """
    sqdt = np.sqrt(dt)
    max_steps = int(round(t_max / dt))
    block = 4096
    tilted = drift_field is not None

    def worker(span):
        lo, hi = span
        nc = hi - lo
        gens = [seeded_rng(seed, stream_base + lo + i) for i in range(nc)]
        pos = np.full(nc, -float(r))
        logw = np.zeros(nc)
        out = np.full(nc, -np.inf)
        alive = np.arange(nc)
        buf = np.vstack([g.standard_normal(block) for g in gens])
        ptr = 0
        step_count = 0
        while alive.size and step_count < max_steps:
            if ptr == block:
                for row, idx in enumerate(alive):
                    buf[row, :] = gens[idx].standard_normal(block)
                ptr = 0
            xi = buf[: alive.size, ptr]
            p = pos[alive]
            if tilted:
                b = interp_periodic(drift_field, p)
                newp = p + b * dt + sqdt * xi
                logw[alive] += -b * sqdt * xi - 0.5 * b * b * dt
            else:
                newp = p + sqdt * xi
            mid = 0.5 * (p + newp)
            logw[alive] -= interp_periodic(field, mid) * dt
            pos[alive] = newp
            ptr += 1
            step_count += 1
            hit = np.abs(newp) <= 1.0
            dead = logw[alive] < -LOG_KILL
            if np.any(hit):
                hit_idx = alive[hit]
                out[hit_idx] = logw[hit_idx]
            drop = hit | dead
            if np.any(drop):
                keep = ~drop
                nkeep = int(keep.sum())
                buf[:nkeep, :] = buf[: alive.size][keep, :]
                alive = alive[keep]
        return out

    parts = _run_chunks(worker, _chunks(npaths), workers)
    return np.concatenate(parts)


def mc_survival_decay_1d(
    V,
    r_list,
    npaths=10_000,
    seed=0,
    tilt=None,
    dt=1e-2,
    t_max=1000.0,
    workers=1,
    min_hits=100,
):
    """Estimate the decay exponent of survival weights over distance.

    For each starting distance r the path runs until it hits [-1, 1]; the
    estimate is the average of exp(-int V) over paths (zero for capped ones),
    optionally under the tilted drift with the exact discrete change-of-
    measure correction.  The exponent is the slope of an affine least-squares
    fit of -ln(estimate) against r.
    """
    grid = V.grid
    if grid.d != 1:
        raise ParameterError("survival decay estimation is one-dimensional")
    r_list = [float(r) for r in r_list]
    if any(b <= a for a, b in zip(r_list, r_list[1:])) or not r_list:
        raise ParameterError("r_list must be strictly increasing and nonempty")
    if max(r_list) > 10.0:
        raise ParameterError("starting distances above 10 are not supported")
    if V.min_value() <= 0.0:
        raise ParameterError("potential must be floored away from zero")
    drift_field = None
    if tilt is not None:
        drift_field = ScalarField(grid, tilt.drift_values(grid))

    table = []
    for ridx, r in enumerate(r_list):
        logc = _survive_one_r(
            V.field, drift_field, r, npaths, seed, ridx * npaths, dt, t_max, workers
        )
        hits = int(np.isfinite(logc).sum())
        lse = _pairwise_logsumexp(logc)
        log_e = lse - np.log(npaths) if np.isfinite(lse) else float("-inf")
        lse2 = _pairwise_logsumexp(2.0 * logc)
        second = np.exp(lse2 - np.log(npaths)) if np.isfinite(lse2) else 0.0
        mean = np.exp(log_e) if np.isfinite(log_e) else 0.0
        var = max(second - mean * mean, 0.0)
        table.append(
            {
                "r": r,
                "log_e": log_e,
                "estimate": mean,
                "hits": hits,
                "estimator_variance": var / npaths,
                "stderr_log": (np.sqrt(var / npaths) / mean) if mean > 0 else float("inf"),
            }
        )

    valid = [row for row in table if row["hits"] >= min_hits and np.isfinite(row["log_e"])]
    if len(valid) >= 2:
        rs = np.array([row["r"] for row in valid])
        ys = np.array([-row["log_e"] for row in valid])
        slope, intercept = np.polyfit(rs, ys, 1)
    else:
        slope, intercept = float("nan"), float("nan")
    result = SurvivalDecay(
        slope=float(slope),
        intercept=float(intercept),
        table=table,
        npaths=npaths,
        seed=seed,
        diagnostics={
            "dt": dt,
            "t_max": t_max,
            "tilted": tilt is not None,
            "rows_in_fit": len(valid),
        },
    )
    if table[-1]["hits"] < min_hits:
        raise StatisticalValidityError(
            f"only {table[-1]['hits']} surviving contributions at r={r_list[-1]}",
            partial=result,
        )
    return result
