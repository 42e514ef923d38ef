"""Monitored functionals: three-vortex invariants, signed area, g_delta, h1, h2.

Sums written over ``i != j`` run over ordered pairs, so every unordered pair
is counted twice; the triple sum in h1 runs over ordered triples of distinct
indices.
"""
from __future__ import annotations

import functools
from dataclasses import asdict, dataclass

import numpy as np
from scipy import optimize

from .geometry import DomainSpec, FloatArray, Torus, VortexState, cross, displacement, pair_displacements, pair_distances
from .kernel import KernelSpec, pair_green


@dataclass(frozen=True)
class DiagnosticsSpec:
    c0: float
    cadence: int = 1

    def __post_init__(self) -> None:
        if not np.isfinite(self.c0):
            raise ValueError("c0 must be finite")
        if self.cadence < 1:
            raise ValueError("cadence must be >= 1")


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    min_dist: float
    S: float | None = None
    S_eps: float | None = None
    area_A: float | None = None
    g_delta: float | None = None
    h1: float | None = None
    h2: float | None = None

    def as_dict(self) -> dict:
        return asdict(self)


def _three(s: VortexState, what: str) -> None:
    if s.n != 3:
        raise ValueError(f"{what} defined for three vortices")


def side_lengths(s: VortexState) -> tuple[float, float, float]:
    """(l12, l23, l31) with minimal-image distances on the torus."""
    _three(s, "side lengths")
    x, d = s.positions, s.domain
    l12 = float(np.linalg.norm(displacement(x[0], x[1], d)))
    l23 = float(np.linalg.norm(displacement(x[1], x[2], d)))
    l31 = float(np.linalg.norm(displacement(x[2], x[0], d)))
    return l12, l23, l31


def invariant_S(s: VortexState) -> float:
    _three(s, "S")
    l12, l23, l31 = side_lengths(s)
    x1, x2, x3 = s.intensities
    return l12**2 / x3 + l23**2 / x1 + l31**2 / x2


def invariant_S_eps(s: VortexState, eps: float) -> float:
    _three(s, "S_eps")
    l12, l23, l31 = side_lengths(s)
    if min(l12, l23, l31) == 0.0:
        raise ValueError("S_eps undefined for coincident vortices")
    x1, x2, x3 = s.intensities
    p = eps - 1.0
    return l12**p / x3 + l23**p / x1 + l31**p / x2


def signed_area_A(s: VortexState) -> float:
    """Twice the signed area, cross(x2 - x1, x3 - x1); positive iff (x1, x2, x3) is counter-clockwise."""
    _three(s, "A")
    x, d = s.positions, s.domain
    return float(cross(displacement(x[1], x[0], d), displacement(x[2], x[0], d)))


@functools.lru_cache(maxsize=64)
def _torus_green_sup(spec: KernelSpec) -> float:
    g = np.linspace(-0.5, 0.5, 41)
    Y = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1)
    vals = pair_green(Y, spec, Torus)
    i = np.unravel_index(np.argmax(vals), vals.shape)
    best = float(vals[i])
    res = optimize.minimize(
        lambda y: -float(pair_green(np.asarray(y), spec, Torus)),
        Y[i],
        bounds=[(-0.5, 0.5), (-0.5, 0.5)],
        method="L-BFGS-B",
    )
    return max(best, -float(res.fun))


def compute_c0(kspec: KernelSpec, domain: DomainSpec) -> float:
    """Upper bound c0 >= sup G_delta with a 1% margin.

    The blend is radially increasing, so the supremum sits far from the
    origin: 0 (approached at infinity) on the plane, and at the cell corner
    region on the torus (found by grid search plus local refinement). The
    value does not depend on delta as long as delta < 1/2.
    """
    spec = kspec if kspec.delta is not None else kspec.regularized(0.25)
    if domain.is_torus:
        sup = _torus_green_sup(spec.regularized(min(spec.delta, 0.25)))
    else:
        if spec.epsilon == 1.0:
            raise ValueError("log Green function is unbounded above on the plane")
        sup = 0.0
    return sup + 0.01 * max(abs(sup), kspec.c_eps)


def collision_threshold(kspec: KernelSpec, c0: float) -> float:
    """Lower bound c0 + C delta^(eps-1) on g_delta whenever some pair is within delta (C = c_eps)."""
    if kspec.delta is None:
        raise ValueError("threshold needs delta")
    return c0 + kspec.c_eps * kspec.delta ** (kspec.epsilon - 1.0)


def lyapunov_g_delta(s: VortexState, kspec: KernelSpec, dspec: DiagnosticsSpec) -> float:
    if kspec.delta is None:
        raise ValueError("g_delta needs a regularized kernel (delta)")
    if s.n < 2:
        return 0.0
    g = pair_green(pair_displacements(s.positions, s.domain), kspec, s.domain)
    return float(-2.0 * np.sum(g - dspec.c0))


def _distance_matrix(s: VortexState) -> FloatArray:
    d = np.linalg.norm(displacement(s.positions[:, None, :], s.positions[None, :, :], s.domain), axis=-1)
    off = ~np.eye(s.n, dtype=bool)
    if np.any(d[off] == 0.0):
        raise ValueError("majorants undefined for coincident vortices")
    return d


def majorant_h1(s: VortexState, eps: float) -> float:
    if s.n < 2:
        return 0.0
    d = _distance_matrix(s)
    off = ~np.eye(s.n, dtype=bool)
    a = np.where(off, np.where(off, d, 1.0) ** (eps - 2.0), 0.0)
    rows = a.sum(axis=1)
    # sum over ordered j != k, both != i, of a_ij a_ik
    triple = float(np.sum(rows**2 - (a**2).sum(axis=1)))
    pairs = float(np.sum(d[off] ** (eps - 1.0)))
    return triple + pairs


def majorant_h2(s: VortexState, eps: float) -> float:
    if s.n < 2:
        return 0.0
    d = _distance_matrix(s)
    off = ~np.eye(s.n, dtype=bool)
    return float(np.sum(d[off] ** (2.0 * eps - 2.0)))


def record(t: float, s: VortexState, eps: float, kspec: KernelSpec | None = None, dspec: DiagnosticsSpec | None = None) -> DiagnosticsRecord:
    """All diagnostics applicable to s; g_delta only when a delta and c0 are supplied."""
    md = float(pair_distances(s.positions, s.domain).min()) if s.n >= 2 else float("inf")
    kw: dict = {}
    if s.n == 3:
        kw.update(S=invariant_S(s), area_A=signed_area_A(s))
        kw["S_eps"] = invariant_S_eps(s, eps) if md > 0.0 else None
    if kspec is not None and kspec.delta is not None and dspec is not None:
        kw["g_delta"] = lyapunov_g_delta(s, kspec, dspec)
    if s.n >= 2 and md > 0.0:
        kw.update(h1=majorant_h1(s, eps), h2=majorant_h2(s, eps))
    return DiagnosticsRecord(t=float(t), min_dist=md, **kw)


def trajectory_records(traj, eps: float, kspec: KernelSpec | None = None, dspec: DiagnosticsSpec | None = None) -> list[DiagnosticsRecord]:
    return [record(t, s, eps, kspec, dspec) for t, s in zip(traj.times, traj.states)]
