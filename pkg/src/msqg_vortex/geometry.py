"""Points, the periodic unit torus and minimal-image displacements.

All functions accept arrays whose last axis has length 2 and broadcast over
any leading batch axes, so the same code serves single states and stacked
ensembles of shape ``(B, N, 2)``.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

FloatArray = NDArray[np.float64]

PLANE = "plane"
TORUS = "torus"


@dataclass(frozen=True)
class DomainSpec:
    kind: Literal["plane", "torus"] = PLANE
    period: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in (PLANE, TORUS):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.kind == TORUS and self.period != 1.0:
            raise ValueError("torus period is fixed to 1")

    @property
    def is_torus(self) -> bool:
        return self.kind == TORUS


Plane = DomainSpec(PLANE)
Torus = DomainSpec(TORUS)


def perp(v: ArrayLike) -> FloatArray:
    """Rotate by -90 degrees: (v1, v2) -> (v2, -v1)."""
    v = np.asarray(v, dtype=np.float64)
    out = np.empty_like(v)
    out[..., 0] = v[..., 1]
    out[..., 1] = -v[..., 0]
    return out


def cross(a: FloatArray, b: FloatArray) -> FloatArray:
    """Scalar 2D cross product a1*b2 - a2*b1, equal to a . perp(b)."""
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def wrap_coords(x: ArrayLike) -> FloatArray:
    """Map coordinates into the half-open cell [-1/2, 1/2)."""
    x = np.asarray(x, dtype=np.float64)
    y = x - np.floor(x + 0.5)
    # rounding in x + 0.5 can leave y a hair outside the cell
    y = np.where(y >= 0.5, y - 1.0, y)
    y = np.where(y < -0.5, y + 1.0, y)
    return y


def wrap(p: ArrayLike, d: DomainSpec) -> FloatArray:
    p = np.asarray(p, dtype=np.float64)
    if not d.is_torus:
        return p.copy()
    return wrap_coords(p)


def displacement(a: ArrayLike, b: ArrayLike, d: DomainSpec) -> FloatArray:
    """a - b on the plane, or its minimal-image representative on the torus."""
    diff = np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)
    if d.is_torus:
        return wrap_coords(diff)
    return diff


@functools.lru_cache(maxsize=64)
def pair_indices(n: int) -> tuple[NDArray[np.intp], NDArray[np.intp]]:
    """Index arrays (i, j) over unordered pairs i < j (cached, read-only)."""
    i, j = np.triu_indices(n, 1)
    i.setflags(write=False)
    j.setflags(write=False)
    return i, j


def pair_displacements(x: FloatArray, d: DomainSpec) -> FloatArray:
    """Displacements x_i - x_j for all i < j; shape (..., P, 2)."""
    i, j = pair_indices(x.shape[-2])
    return displacement(x[..., i, :], x[..., j, :], d)


def pair_distances(x: FloatArray, d: DomainSpec) -> FloatArray:
    return np.linalg.norm(pair_displacements(x, d), axis=-1)


def min_distance(x: FloatArray, d: DomainSpec) -> FloatArray | float:
    """Smallest pairwise distance, reduced over the vortex axis only."""
    if x.shape[-2] < 2:
        raise ValueError("need at least two vortices")
    return pair_distances(x, d).min(axis=-1)


@dataclass(frozen=True)
class VortexState:
    """N point vortices: positions (N, 2) and nonzero intensities (N,)."""

    positions: FloatArray
    intensities: FloatArray
    domain: DomainSpec = field(default=Plane)

    def __post_init__(self) -> None:
        pos = np.array(self.positions, dtype=np.float64, ndmin=2)
        xi = np.array(self.intensities, dtype=np.float64, ndmin=1)
        if pos.ndim != 2 or pos.shape[1] != 2:
            raise ValueError("positions must have shape (N, 2)")
        if xi.shape != (pos.shape[0],):
            raise ValueError("intensities must have shape (N,) matching positions")
        if pos.shape[0] < 1:
            raise ValueError("need at least one vortex")
        if not (np.isfinite(pos).all() and np.isfinite(xi).all()):
            raise ValueError("state contains non-finite values")
        if np.any(xi == 0.0):
            raise ValueError("intensities must be nonzero")
        if self.domain.is_torus:
            pos = wrap_coords(pos)
        pos.setflags(write=False)
        xi.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "intensities", xi)

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    def with_positions(self, positions: ArrayLike) -> "VortexState":
        return VortexState(np.asarray(positions, dtype=np.float64), self.intensities, self.domain)


def min_pairwise_distance(s: VortexState) -> float:
    if s.n < 2:
        raise ValueError("need at least two vortices")
    return float(min_distance(s.positions, s.domain))
