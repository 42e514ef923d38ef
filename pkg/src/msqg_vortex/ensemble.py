"""Monte Carlo over initial states and noise: near-collision probabilities and the noise demo.

Trajectories are split into fixed batches by index, independent of the
worker count, and each trajectory owns counter-based random streams derived
from (master_seed, index). Results are therefore identical for any number of
workers.
"""
from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats as sps

from .collapse import CollapseConfig, centered, scale_config
from .geometry import Torus, VortexState, min_distance
from .integrator import (
    IntegratorSpec,
    NormalStream,
    StoppingRule,
    integrate_deterministic,
    run_stochastic_batch,
    trajectory_rng,
)
from .kernel import KernelSpec
from .noise import NoiseSpec, mode_table

UNIFORM = "uniform"
FIXED = "fixed"

# intensities used for uniform starts unless configured: the collapse triple
DEFAULT_INTENSITIES = (1.1556160804937567, 1.0, -0.5174190024018089)


@dataclass(frozen=True)
class EnsembleSpec:
    n_samples: int
    master_seed: int = 0
    horizon_T: float = 1.0
    delta_grid: tuple = (0.1, 0.05, 0.02, 0.01)
    init: str = UNIFORM
    fixed_state: VortexState | None = None
    intensities: tuple | None = None
    n_vortices: int = 3
    # reject uniform starts with min distance <= reject_factor * max(delta_grid); None disables
    reject_factor: float | None = 2.0
    workers: int = 1
    batch_size: int = 128

    def __post_init__(self) -> None:
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        grid = tuple(float(d) for d in self.delta_grid)
        if not grid:
            raise ValueError("delta_grid must not be empty")
        if any(not (0.0 < d < 1.0) for d in grid):
            raise ValueError("delta_grid entries must lie in (0, 1)")
        if any(b >= a for a, b in zip(grid, grid[1:])):
            raise ValueError("delta_grid must be strictly decreasing")
        object.__setattr__(self, "delta_grid", grid)
        if self.init not in (UNIFORM, FIXED):
            raise ValueError("init must be 'uniform' or 'fixed'")
        if self.init == FIXED and self.fixed_state is None:
            raise ValueError("fixed init needs fixed_state")
        if not self.horizon_T > 0.0:
            raise ValueError("horizon_T must be positive")
        if self.workers < 1 or self.batch_size < 1:
            raise ValueError("workers and batch_size must be >= 1")

    def resolved_intensities(self) -> np.ndarray:
        if self.init == FIXED:
            return np.asarray(self.fixed_state.intensities)
        if self.intensities is not None:
            xi = np.asarray(self.intensities, dtype=np.float64)
        elif self.n_vortices == 3:
            xi = np.asarray(DEFAULT_INTENSITIES)
        else:
            xi = np.ones(self.n_vortices)
        if xi.shape != (self.n_vortices,) or np.any(xi == 0.0):
            raise ValueError("intensities must be n_vortices nonzero values")
        return xi


@dataclass
class EnsembleStats:
    delta_grid: tuple
    n_samples: int
    hits: np.ndarray  # (G,) counts of trajectories reaching each delta
    wilson: np.ndarray  # (G, 2)
    hit_times: np.ndarray  # (n, G), NaN when not reached
    stop_times: np.ndarray  # (n,) time the trajectory ended
    running_min: np.ndarray  # (n,)
    runtime: dict = field(default_factory=dict)

    @property
    def p_hat(self) -> np.ndarray:
        return self.hits / self.n_samples

    def to_dict(self, include_samples: bool = True) -> dict:
        out = {
            "delta_grid": list(self.delta_grid),
            "n_samples": int(self.n_samples),
            "hits": [int(h) for h in self.hits],
            "p_hat": [float(p) for p in self.p_hat],
            "wilson_95": [[float(a), float(b)] for a, b in self.wilson],
        }
        if include_samples:
            out["stop_times"] = [float(t) for t in self.stop_times]
            out["running_min"] = [float(m) for m in self.running_min]
        return out


def wilson_interval(k: int, n: int, level: float = 0.95) -> tuple[float, float]:
    ci = sps.binomtest(int(k), int(n)).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


def initial_state(espec: EnsembleSpec, index: int) -> np.ndarray:
    """Initial positions for trajectory ``index`` (uniform on the torus, optionally rejected)."""
    if espec.init == FIXED:
        return np.array(espec.fixed_state.positions)
    rng = trajectory_rng(espec.master_seed, index, stream=1)
    floor = None if espec.reject_factor is None else espec.reject_factor * max(espec.delta_grid)
    for _ in range(100_000):
        x = rng.uniform(-0.5, 0.5, size=(espec.n_vortices, 2))
        if floor is None or espec.n_vortices < 2 or min_distance(x, Torus) > floor:
            return x
    raise RuntimeError("rejection sampling of initial states did not terminate")


def _run_batch(job) -> tuple:
    lo, hi, espec, kspec, nspec, ispec = job
    domain = espec.fixed_state.domain if espec.init == FIXED else Torus
    xi = espec.resolved_intensities()
    x0 = np.stack([initial_state(espec, i) for i in range(lo, hi)])
    width = mode_table(nspec).k.shape[0]
    streams = [NormalStream(trajectory_rng(espec.master_seed, i, stream=0), width) for i in range(lo, hi)]
    ispec = replace(ispec, t_end=espec.horizon_T)
    res = run_stochastic_batch(x0, xi, domain, kspec, nspec, ispec, espec.delta_grid, streams)
    return res.hit_times, res.t, res.running_min


def run_ensemble(espec: EnsembleSpec, kspec: KernelSpec, nspec: NoiseSpec, ispec: IntegratorSpec) -> EnsembleStats:
    """Hit statistics of min pairwise distance over [0, T] for every delta in the grid."""
    if kspec.delta is None or kspec.delta > min(espec.delta_grid):
        raise ValueError("regularization delta must be set and at most min(delta_grid)")
    t0 = time.perf_counter()
    jobs = [
        (lo, min(lo + espec.batch_size, espec.n_samples), espec, kspec, nspec, ispec)
        for lo in range(0, espec.n_samples, espec.batch_size)
    ]
    if espec.workers == 1 or len(jobs) == 1:
        results = [_run_batch(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=espec.workers) as pool:
            results = list(pool.map(_run_batch, jobs))
    hit_times = np.concatenate([r[0] for r in results])
    stop_times = np.concatenate([r[1] for r in results])
    running_min = np.concatenate([r[2] for r in results])
    hits = np.sum(~np.isnan(hit_times), axis=0)
    wil = np.array([wilson_interval(h, espec.n_samples) for h in hits])
    runtime = {
        "wall_seconds": time.perf_counter() - t0,
        "workers": espec.workers,
        "batch_size": espec.batch_size,
        "cpu_count": os.cpu_count(),
    }
    return EnsembleStats(espec.delta_grid, espec.n_samples, hits, wil, hit_times, stop_times, running_min, runtime)


@dataclass(frozen=True)
class ScalingFit:
    slope: float
    stderr: float
    consistent: bool
    z: float
    n_points: int

    def to_dict(self) -> dict:
        return {"slope": self.slope, "stderr": self.stderr, "consistent": self.consistent, "z": self.z, "n_points": self.n_points}


def delta_scaling_fit(stats, eps: float, z_crit: float = 1.6448536269514722) -> ScalingFit:
    """Weighted least-squares slope of log P(delta) against log delta.

    Weights are inverse delta-method variances (1 - p)/(n p) of log p-hat; grid
    points with no hits are dropped. ``consistent`` is False only when the
    one-sided 95% test rejects slope >= 1 - eps (a shallower decay than the
    bound allows).
    """
    deltas = np.asarray(stats.delta_grid, dtype=np.float64)
    hits = np.asarray(stats.hits, dtype=np.float64)
    n = float(stats.n_samples)
    keep = hits > 0
    if keep.sum() < 3:
        raise ValueError("increase n_samples or enlarge δ grid")
    p = hits[keep] / n
    # a cell with every sample hit carries no binomial variance; cap it at half a count
    p = np.minimum(p, 1.0 - 0.5 / n)
    var = (1.0 - p) / (n * p)
    x, y = np.log(deltas[keep]), np.log(p)
    coef, cov = np.polyfit(x, y, 1, w=1.0 / np.sqrt(var), cov="unscaled")
    slope, se = float(coef[0]), float(math.sqrt(cov[0, 0]))
    z = (slope - (1.0 - eps)) / se
    return ScalingFit(slope, se, bool(z >= -z_crit), float(z), int(keep.sum()))


@dataclass
class SyntheticStats:
    delta_grid: tuple
    hits: np.ndarray
    n_samples: int


def synthetic_stats(delta_grid, exponent: float, n_samples: int, rng: np.random.Generator, scale: float = 1.0) -> SyntheticStats:
    """Independent binomial counts with P(delta) = scale * delta^exponent."""
    d = np.asarray(delta_grid, dtype=np.float64)
    p = np.clip(scale * d**exponent, 0.0, 1.0)
    return SyntheticStats(tuple(d), rng.binomial(n_samples, p), n_samples)


@dataclass
class DemoReport:
    lam: float
    t_star_scaled: float
    horizon: float
    delta_stop: float
    control_stop_reason: str
    control_stop_time: float
    control_rel_err: float
    n_samples: int
    survivors: int
    wilson: tuple
    noise_scale: float
    runtime: dict = field(default_factory=dict)

    @property
    def surviving_fraction(self) -> float:
        return self.survivors / self.n_samples

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "t_star_scaled": self.t_star_scaled,
            "horizon": self.horizon,
            "delta_stop": self.delta_stop,
            "control": {
                "stop_reason": self.control_stop_reason,
                "stop_time": self.control_stop_time,
                "rel_err": self.control_rel_err,
            },
            "n_samples": self.n_samples,
            "survivors": self.survivors,
            "surviving_fraction": self.surviving_fraction,
            "wilson_95": list(self.wilson),
            "noise_scale": self.noise_scale,
        }


def regularization_demo(
    cfg: CollapseConfig,
    lam: float,
    nspec: NoiseSpec,
    espec: EnsembleSpec,
    kspec: KernelSpec,
    ispec: IntegratorSpec,
    delta_stop: float = 1e-3,
    horizon_factor: float = 1.5,
) -> DemoReport:
    """Noisy ensemble from the torus-scaled collapse state, beside the deterministic control.

    The control integrates the exact kernel on the torus and should stop near
    t*/lam. The noisy runs use the kernel regularized at ``kspec.delta``
    (at most delta_stop) and count samples whose min distance stays above
    delta_stop over [0, horizon_factor * t*/lam].
    """
    t0 = time.perf_counter()
    sc = centered(scale_config(cfg, lam))
    ts = sc.t_star
    if ts is None:
        raise ValueError("configuration does not collapse")
    horizon = horizon_factor * ts
    s0 = sc.state(Torus)
    kexact = kspec.regularized(None)
    ctrl = integrate_deterministic(
        s0, kexact, IntegratorSpec(t_end=horizon, adaptive_tol=ispec.adaptive_tol, dt=ts * 1e-3), StoppingRule(delta_stop)
    )
    if kspec.delta is None or kspec.delta > delta_stop:
        kspec = kspec.regularized(delta_stop)
    noisy = replace(espec, init=FIXED, fixed_state=s0, horizon_T=horizon, delta_grid=(delta_stop,))
    st = run_ensemble(noisy, kspec, nspec, ispec)
    survivors = int(noisy.n_samples - st.hits[0])
    return DemoReport(
        lam=float(lam),
        t_star_scaled=float(ts),
        horizon=float(horizon),
        delta_stop=float(delta_stop),
        control_stop_reason=ctrl.stop_reason,
        control_stop_time=float(ctrl.stop_time),
        control_rel_err=float(abs(ctrl.stop_time - ts) / ts),
        n_samples=noisy.n_samples,
        survivors=survivors,
        wilson=wilson_interval(survivors, noisy.n_samples),
        noise_scale=float(nspec.global_scale if nspec.enabled else 0.0),
        runtime={"wall_seconds": time.perf_counter() - t0},
    )
