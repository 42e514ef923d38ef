"""Self-similar three-vortex collapse on the plane and its rescaling into the torus.

Pairs are labelled (1,2|3), (2,3|1), (3,1|2): pair (i, j) with opposite
vertex k. With ``A = cross(x2 - x1, x3 - x1)`` (twice the signed area,
positive for counter-clockwise (x1, x2, x3)), the pair distances obey

    d(l_ij^2)/dt = c_ij l_ij^(eps-1),
    c_ij = 2 c_eps xi_k A l_ij^(1-eps) (l_ik^(eps-3) - l_kj^(eps-3)),

where c_ij is constant when S = S_eps = 0. Separating the ODE gives
``l(t) = (l0^(3-eps) + c (3-eps) t / 2)^(1/(3-eps))`` and the collapse time
``t* = -2 l0^(3-eps) / (c (3-eps))`` when c < 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .geometry import FloatArray, Plane, VortexState, cross


class DegenerateGeometryError(ValueError):
    """Triangle or linear system admits no unique collapse construction."""


class NoCollapseError(ValueError):
    """The configuration expands instead of collapsing."""


SINGULAR_RTOL = 1e-12


def _lengths(p: FloatArray) -> tuple[float, float, float]:
    return (
        float(np.linalg.norm(p[0] - p[1])),
        float(np.linalg.norm(p[1] - p[2])),
        float(np.linalg.norm(p[2] - p[0])),
    )


def _check_triangle(l12: float, l23: float, l31: float) -> None:
    ls = (l12, l23, l31)
    if min(ls) <= 0.0:
        raise DegenerateGeometryError("degenerate geometry: distances must be positive")
    s = sorted(ls)
    if not s[2] < s[0] + s[1]:
        raise DegenerateGeometryError("degenerate geometry: strict triangle inequality violated")


def solve_intensities(l12: float, l23: float, l31: float, eps: float, xi2: float = 1.0) -> tuple[float, float]:
    """(xi1, xi3) making S = 0 = S_eps for the given side lengths and xi2."""
    _check_triangle(l12, l23, l31)
    if xi2 == 0.0:
        raise ValueError("xi2 must be nonzero")
    p = eps - 1.0
    M = np.array([[l23**2, l12**2], [l23**p, l12**p]])
    rhs = -np.array([l31**2, l31**p]) / xi2
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    scale = abs(M[0, 0] * M[1, 1]) + abs(M[0, 1] * M[1, 0])
    if abs(det) <= SINGULAR_RTOL * scale:
        raise DegenerateGeometryError("degenerate geometry: intensities underdetermined")
    u, w = np.linalg.solve(M, rhs)
    if u == 0.0 or w == 0.0 or not (np.isfinite(u) and np.isfinite(w)):
        raise DegenerateGeometryError("degenerate geometry: solution has a vanishing 1/xi component")
    return float(1.0 / u), float(1.0 / w)


@dataclass(frozen=True)
class ScalingMap:
    lam: float
    alpha: float

    @classmethod
    def for_eps(cls, lam: float, eps: float) -> "ScalingMap":
        if not lam > 0.0:
            raise ValueError("lambda must be positive")
        return cls(lam, -1.0 / (3.0 - eps))

    @property
    def factor(self) -> float:
        return self.lam**self.alpha


@dataclass(frozen=True)
class CollapseConfig:
    eps: float
    positions0: FloatArray  # (3, 2) plane positions
    xi: FloatArray  # (xi1, xi2, xi3)
    l0: tuple[float, float, float]  # (l12, l23, l31)
    c_coeffs: tuple[float, float, float]  # (c12, c23, c31)
    area0: float
    c_eps: float = 1.0
    lam: float = 1.0

    @property
    def xi1(self) -> float:
        return float(self.xi[0])

    @property
    def xi2(self) -> float:
        return float(self.xi[1])

    @property
    def xi3(self) -> float:
        return float(self.xi[2])

    @property
    def collapses(self) -> bool:
        return all(c < 0.0 for c in self.c_coeffs)

    @property
    def t_star(self) -> float | None:
        return collapse_time(self) if self.collapses else None

    @property
    def scaling(self) -> ScalingMap:
        return ScalingMap.for_eps(self.lam, self.eps)

    def state(self, domain=Plane) -> VortexState:
        return VortexState(self.positions0, self.xi, domain)

    def center_of_vorticity(self) -> FloatArray:
        return (self.xi[:, None] * self.positions0).sum(axis=0) / self.xi.sum()


def _coefficients(p: FloatArray, xi: FloatArray, eps: float, c_eps: float) -> tuple[tuple[float, float, float], float]:
    l12, l23, l31 = _lengths(p)
    A = float(cross(p[1] - p[0], p[2] - p[0]))
    if abs(A) <= 1e-14 * max(l12, l23, l31) ** 2:
        raise DegenerateGeometryError("degenerate geometry: collinear triangle")
    q = eps - 3.0
    x1, x2, x3 = xi
    c12 = 2.0 * c_eps * x3 * A * l12 ** (1.0 - eps) * (l31**q - l23**q)
    c23 = 2.0 * c_eps * x1 * A * l23 ** (1.0 - eps) * (l12**q - l31**q)
    c31 = 2.0 * c_eps * x2 * A * l31 ** (1.0 - eps) * (l23**q - l12**q)
    return (float(c12), float(c23), float(c31)), A


def c_coefficients(cfg: CollapseConfig, c_eps: float | None = None) -> tuple[float, float, float]:
    c = cfg.c_eps if c_eps is None else c_eps
    return _coefficients(np.asarray(cfg.positions0), np.asarray(cfg.xi), cfg.eps, c)[0]


def mirror(p: FloatArray) -> FloatArray:
    """Reflect across the horizontal axis, reversing orientation."""
    q = np.array(p, dtype=np.float64)
    q[:, 1] = -q[:, 1]
    return q


def build_config(
    positions,
    eps: float,
    xi2: float = 1.0,
    c_eps: float = 1.0,
    orient: str = "given",
) -> CollapseConfig:
    """Solve intensities for a plane triangle and evaluate the collapse data.

    ``orient="auto"`` mirrors the triangle when the given orientation
    expands, since the sign of every c_ij flips with the orientation.
    """
    p = np.array(positions, dtype=np.float64).reshape(3, 2)
    l12, l23, l31 = _lengths(p)
    xi1, xi3 = solve_intensities(l12, l23, l31, eps, xi2)
    xi = np.array([xi1, xi2, xi3])
    coeffs, A = _coefficients(p, xi, eps, c_eps)
    if orient == "auto" and not all(c < 0.0 for c in coeffs):
        p = mirror(p)
        coeffs, A = _coefficients(p, xi, eps, c_eps)
    elif orient not in ("given", "auto"):
        raise ValueError("orient must be 'given' or 'auto'")
    p.setflags(write=False)
    xi.setflags(write=False)
    return CollapseConfig(eps, p, xi, (l12, l23, l31), coeffs, A, c_eps)


def triangle_from_distances(l12: float, l23: float, l31: float, clockwise: bool = True) -> FloatArray:
    """x1 = (-l12/2, 0), x2 = (l12/2, 0) and x3 placed by the law of cosines."""
    _check_triangle(l12, l23, l31)
    x1 = np.array([-l12 / 2.0, 0.0])
    x2 = np.array([l12 / 2.0, 0.0])
    # |x3 - x1| = l31, |x3 - x2| = l23
    u = (l31**2 - l23**2) / (2.0 * l12)
    h = math.sqrt(max(l31**2 - (u + l12 / 2.0) ** 2, 0.0))
    x3 = np.array([u, -h if clockwise else h])
    return np.stack([x1, x2, x3])


def reference_configuration(eps: float = 0.5, c_eps: float = 1.0) -> CollapseConfig:
    """Triangle with sides (2, sqrt2, sqrt6) at (-1,0), (1,0), (1,-sqrt2): the collapsing orientation."""
    return build_config(triangle_from_distances(2.0, math.sqrt(2.0), math.sqrt(6.0)), eps, 1.0, c_eps)


def analytic_distance(t, l0: float, c: float, eps: float):
    """l(t) = (l0^(3-eps) + c (3-eps) t / 2)^(1/(3-eps))."""
    a = 3.0 - eps
    base = l0**a + 0.5 * c * a * np.asarray(t, dtype=np.float64)
    # round-off at t = t* may leave a tiny negative base
    base = np.where(np.abs(base) <= 1e-12 * l0**a, 0.0, base)
    if np.any(base < 0.0):
        raise ValueError("past collapse time")
    out = base ** (1.0 / a)
    return float(out) if out.ndim == 0 else out


def collapse_time(cfg: CollapseConfig) -> float:
    if not cfg.collapses:
        raise NoCollapseError("no collapse for this configuration")
    a = 3.0 - cfg.eps
    # scaled lengths already carry the 1/lambda factor: (lam^alpha l)^(3-eps) = l^(3-eps) / lam
    return -2.0 * cfg.l0[0] ** a / (cfg.c_coeffs[0] * a)


def pair_collapse_times(cfg: CollapseConfig) -> tuple[float, float, float]:
    a = 3.0 - cfg.eps
    return tuple(-2.0 * l**a / (c * a) for l, c in zip(cfg.l0, cfg.c_coeffs))  # type: ignore[return-value]


def scale_config(cfg: CollapseConfig, lam: float) -> CollapseConfig:
    """Positions times lam^alpha, alpha = -1/(3-eps); c_ij unchanged; t* divided by lam.

    x_i^lam(t) = lam^alpha x_i(lam t) solves the same system. Scaling is
    relative to the current configuration, so factors compose.
    """
    f = ScalingMap.for_eps(lam, cfg.eps).factor
    p = np.array(cfg.positions0) * f
    p.setflags(write=False)
    l0 = tuple(l * f for l in cfg.l0)
    return replace(cfg, positions0=p, l0=l0, area0=cfg.area0 * f * f, lam=cfg.lam * lam)  # type: ignore[arg-type]


def centered(cfg: CollapseConfig) -> CollapseConfig:
    """Translate so the bounding box is centred on the origin (the dynamics are translation invariant)."""
    p = np.array(cfg.positions0)
    p = p - 0.5 * (p.min(axis=0) + p.max(axis=0))
    p.setflags(write=False)
    return replace(cfg, positions0=p)


def fits_in_box(cfg: CollapseConfig, half_width: float = 0.25) -> bool:
    return bool(np.all(np.abs(cfg.positions0) <= half_width))


def min_lambda_to_fit(cfg: CollapseConfig, half_width: float = 0.25) -> float:
    """Smallest lambda placing the (current) positions inside [-hw, hw]^2."""
    m = float(np.abs(cfg.positions0).max())
    if m <= half_width:
        return 1.0
    alpha = -1.0 / (3.0 - cfg.eps)
    return (half_width / m) ** (1.0 / alpha)
