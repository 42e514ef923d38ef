"""Interaction kernel and Green function of the mSQG point-vortex model.

Conventions
-----------
The plane Green function is ``G(x) = -c_eps |x|^(eps-1)`` (``c_eps log|x|`` at
``eps = 1``) and the velocity kernel is

    K(x) = c_eps x_perp / |x|^(3-eps) = perp(grad G)(x) / kappa,

with ``kappa = 1 - eps`` (``kappa = 1`` at ``eps = 1``). A single ``c_eps`` is
stored; the factor ``kappa`` is applied internally so that ``K`` is the exact
kernel while ``G`` keeps the unit-coefficient form.

On the torus both are split into the minimal-image plane part plus a smooth
remainder ``G_R``/``K_R`` carried by the images ``n != 0``. The remainder is
normalized by ``G_R(0) = 0``; the raw lattice sum of ``G`` diverges, so only
differences of ``G`` are meaningful and this fixes the additive constant.

The regularized Green function replaces ``G`` inside ``|x| < delta`` by the
even quartic ``a + b r^2 + c r^4`` matching value, first and second radial
derivative at ``r = delta``. The blend is radially increasing, so the
regularized Green function never exceeds the unregularized one.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from numpy.polynomial import chebyshev as cheb
from scipy import integrate, special

from .geometry import DomainSpec, FloatArray, Plane, Torus, displacement, pair_indices, perp

DIRECT = "direct"
FOURIER = "fourier"


class KernelSingularityError(ValueError):
    """The exact (unregularized) kernel was evaluated at a coincidence."""


@dataclass(frozen=True)
class KernelSpec:
    epsilon: float
    c_eps: float = 1.0
    delta: float | None = None
    lattice_M: int = 20
    method: Literal["direct", "fourier"] = DIRECT
    fourier_cutoff: int = 64
    # add the analytic far-shell correction to the truncated lattice sum
    tail_correction: bool = True
    # evaluate the smooth torus remainder from a Chebyshev table built once
    tabulate: bool = True

    def __post_init__(self) -> None:
        if not (0.0 < self.epsilon <= 1.0):
            raise ValueError("epsilon must lie in (0, 1]")
        if not self.c_eps > 0.0:
            raise ValueError("c_eps must be positive")
        if self.delta is not None and not (0.0 < self.delta < 1.0):
            raise ValueError("delta must lie in (0, 1)")
        if self.lattice_M < 1:
            raise ValueError("lattice_M must be >= 1")
        if self.method not in (DIRECT, FOURIER):
            raise ValueError(f"unknown kernel method {self.method!r}")
        if self.fourier_cutoff < 1:
            raise ValueError("fourier_cutoff must be >= 1")

    @property
    def kappa(self) -> float:
        return 1.0 if self.epsilon == 1.0 else 1.0 - self.epsilon

    def regularized(self, delta: float | None) -> "KernelSpec":
        return _replace(self, delta=delta)


def _replace(spec: KernelSpec, **kw) -> KernelSpec:
    from dataclasses import replace

    return replace(spec, **kw)


# ---------------------------------------------------------------------------
# radial profile of the plane Green function and its quartic blend


def _radial_exact(r: FloatArray, eps: float, c: float):
    """G, G'(r)/r and (G'' - G'/r)/r^2 of the unregularized plane Green function."""
    if eps == 1.0:
        g = c * np.log(r)
        d1 = c / r**2
        h = -2.0 * c / r**4
        return g, d1, h
    p = eps - 1.0
    rp = r**p
    g = -c * rp
    d1 = -c * p * rp / r**2
    h = -c * p * (p - 2.0) * rp / r**4
    return g, d1, h


@functools.lru_cache(maxsize=256)
def blend_coefficients(delta: float, eps: float, c: float = 1.0) -> tuple[float, float, float]:
    """(a, b, c4) of the quartic matching G, G', G'' at r = delta."""
    if eps == 1.0:
        g0, g1, g2 = c * math.log(delta), c / delta, -c / delta**2
    else:
        p = eps - 1.0
        g0 = -c * delta**p
        g1 = -c * p * delta ** (p - 1.0)
        g2 = -c * p * (p - 1.0) * delta ** (p - 2.0)
    c4 = (g2 - g1 / delta) / (8.0 * delta**2)
    b = (g1 / delta - 4.0 * c4 * delta**2) / 2.0
    a = g0 - b * delta**2 - c4 * delta**4
    return a, b, c4


@dataclass(frozen=True)
class GreenBlend:
    delta: float
    poly_coeffs: tuple[float, float, float]

    @classmethod
    def from_spec(cls, spec: KernelSpec) -> "GreenBlend":
        if spec.delta is None:
            raise ValueError("GreenBlend needs a regularization radius")
        return cls(spec.delta, blend_coefficients(spec.delta, spec.epsilon, spec.c_eps))

    def value(self, r: FloatArray) -> FloatArray:
        a, b, c4 = self.poly_coeffs
        r2 = np.asarray(r) ** 2
        return a + b * r2 + c4 * r2 * r2


def _radial(r: FloatArray, spec: KernelSpec):
    """Radial profile with the blend applied inside delta when regularized."""
    if spec.delta is None:
        return _radial_exact(r, spec.epsilon, spec.c_eps)
    delta = spec.delta
    a, b, c4 = blend_coefficients(delta, spec.epsilon, spec.c_eps)
    inside = r < delta
    r_out = np.where(inside, delta, r)
    g, d1, h = _radial_exact(r_out, spec.epsilon, spec.c_eps)
    r2 = r * r
    g = np.where(inside, a + b * r2 + c4 * r2 * r2, g)
    d1 = np.where(inside, 2.0 * b + 4.0 * c4 * r2, d1)
    h = np.where(inside, 8.0 * c4, h)
    return g, d1, h


def _check_nonzero(r: FloatArray, what: str) -> None:
    if np.any(r == 0.0):
        raise KernelSingularityError(f"{what} singularity")


def _hessian(d1: FloatArray, h: FloatArray, y: FloatArray) -> FloatArray:
    """(G'/r) I + h y y^T for radial profiles; shape (..., 2, 2)."""
    out = h[..., None, None] * y[..., :, None] * y[..., None, :]
    out[..., 0, 0] += d1
    out[..., 1, 1] += d1
    return out


def _perp_matrix(H: FloatArray) -> FloatArray:
    """Matrix of v -> perp(H v)."""
    out = np.empty_like(H)
    out[..., 0, :] = H[..., 1, :]
    out[..., 1, :] = -H[..., 0, :]
    return out


# ---------------------------------------------------------------------------
# smooth torus remainder: lattice sum, Ewald split, Chebyshev table


def _square_annulus_integral(q: float, L: float) -> float:
    """Integral of |y|^-q over the region |y|_inf > L in the plane (q > 2)."""
    ang = integrate.quad(lambda t: math.cos(t) ** (q - 2.0), 0.0, math.pi / 4.0, epsabs=1e-14)[0]
    return 8.0 * L ** (2.0 - q) / (q - 2.0) * ang


def lattice_tail_sum(M: int, eps: float) -> float:
    """Approximate sum of |n|^-(3-eps) over lattice points with |n|_inf > M.

    Midpoint rule over unit cells with its Laplacian correction; the relative
    error is O(M^-4).
    """
    a = 3.0 - eps
    L = M + 0.5
    return _square_annulus_integral(a, L) - a * a / 24.0 * _square_annulus_integral(a + 2.0, L)


def _lattice(M: int, include_origin: bool = False) -> FloatArray:
    r = np.arange(-M, M + 1, dtype=np.float64)
    n = np.stack(np.meshgrid(r, r, indexing="ij"), axis=-1).reshape(-1, 2)
    if not include_origin:
        n = n[np.any(n != 0.0, axis=1)]
    return n


class _Remainder:
    """Smooth part G_R of the torus Green function and its derivatives."""

    def green(self, y: FloatArray) -> FloatArray:
        raise NotImplementedError

    def grad(self, y: FloatArray) -> FloatArray:
        raise NotImplementedError

    def hess(self, y: FloatArray) -> FloatArray:
        raise NotImplementedError

    def _chunked(self, fn, y: FloatArray, tail_shape: tuple[int, ...], chunk: int):
        y = np.asarray(y, dtype=np.float64)
        flat = y.reshape(-1, 2)
        out = np.empty((flat.shape[0],) + tail_shape)
        for s in range(0, flat.shape[0], chunk):
            out[s : s + chunk] = fn(flat[s : s + chunk])
        return out.reshape(y.shape[:-1] + tail_shape)


class LatticeRemainder(_Remainder):
    """Paired lattice sum over 0 < |n|_inf <= M, optionally tail-corrected."""

    def __init__(self, eps: float, c: float, M: int, tail: bool = True):
        if eps >= 1.0:
            raise ValueError("torus kernel requires eps < 1")
        self.eps, self.c, self.M = eps, c, M
        self.n = _lattice(M)
        self.g_n = _radial_exact(np.linalg.norm(self.n, axis=1), eps, c)[0]
        self.tail = lattice_tail_sum(M, eps) if tail else 0.0
        # shell-averaged second-order Taylor term of the far images
        self._tail_h = -c * (1.0 - eps) ** 2 * self.tail / 2.0
        self._chunk = max(1, 400_000 // len(self.n))

    def _images(self, y):
        z = y[:, None, :] + self.n[None, :, :]
        return z, np.sqrt(z[..., 0] ** 2 + z[..., 1] ** 2)

    def _green(self, y):
        z, r = self._images(y)
        g = _radial_exact(r, self.eps, self.c)[0]
        return (g - self.g_n).sum(axis=1) + 0.5 * self._tail_h * (y**2).sum(axis=1)

    def _grad(self, y):
        z, r = self._images(y)
        d1 = _radial_exact(r, self.eps, self.c)[1]
        return (d1[..., None] * z).sum(axis=1) + self._tail_h * y

    def _hess(self, y):
        z, r = self._images(y)
        _, d1, h = _radial_exact(r, self.eps, self.c)
        H = _hessian(d1, h, z).sum(axis=1)
        H[:, 0, 0] += self._tail_h
        H[:, 1, 1] += self._tail_h
        return H

    def green(self, y):
        return self._chunked(self._green, y, (), self._chunk)

    def grad(self, y):
        return self._chunked(self._grad, y, (2,), self._chunk)

    def hess(self, y):
        return self._chunked(self._hess, y, (2, 2), self._chunk)


class EwaldRemainder(_Remainder):
    """Spectral evaluation of the same remainder by an Ewald splitting.

    ``|x|^-beta`` is split with the incomplete gamma function into a real-space
    part that decays like ``exp(-alpha^2 r^2)`` and a Fourier series whose
    coefficients decay like ``exp(-pi^2 k^2 / alpha^2)``; Fourier modes with
    ``|k|_inf <= cutoff`` are kept (those that underflow are dropped).
    """

    def __init__(self, eps: float, c: float, cutoff: int = 64, alpha: float = math.sqrt(math.pi), real_cut: int = 4):
        if eps >= 1.0:
            raise ValueError("torus kernel requires eps < 1")
        self.eps, self.c, self.alpha = eps, c, alpha
        beta = 1.0 - eps
        s = beta / 2.0
        self.beta, self.s = beta, s
        self.n = _lattice(real_cut)
        k = _lattice(cutoff)
        kk = np.linalg.norm(k, axis=1)
        coef = (math.pi / special.gamma(s)) * (math.pi * kk) ** (beta - 2.0) * special.gammaincc(
            1.0 - s, (math.pi * kk / alpha) ** 2
        ) * special.gamma(1.0 - s)
        keep = coef > 0.0
        self.k, self.coef = k[keep], coef[keep]
        self._pref = 2.0 * alpha**beta / special.gamma(s)
        self._g0 = self._phi_total(np.zeros((1, 2)))[0]

    # real-space image term f(r) = Q(s, alpha^2 r^2) r^-beta
    def _real(self, r):
        u = (self.alpha * r) ** 2
        Q = special.gammaincc(self.s, u)
        e = np.exp(-u)
        b = self.beta
        f = Q * r**-b
        d1 = -self._pref * e / r**2 - b * Q * r ** (-b - 2.0)
        f2 = self._pref * e * (2.0 * self.alpha**2 + (1.0 + b) / r**2) + b * (b + 1.0) * Q * r ** (-b - 2.0)
        h = (f2 - d1) / r**2
        return f, d1, h

    # origin image minus the plane singularity: -alpha^beta * phi(alpha^2 r^2)
    def _origin(self, r):
        s, a = self.s, self.alpha
        u = (a * r) ** 2
        g1 = special.gamma(s + 1.0)
        phi = special.hyp1f1(s, s + 1.0, -u) / g1
        dphi = -(s / (s + 1.0)) * special.hyp1f1(s + 1.0, s + 2.0, -u) / g1
        ddphi = (s / (s + 2.0)) * special.hyp1f1(s + 2.0, s + 3.0, -u) / g1
        ab = a**self.beta
        return -ab * phi, -2.0 * ab * a**2 * dphi, -4.0 * ab * a**4 * ddphi

    def _phase(self, y):
        return 2.0 * math.pi * (y @ self.k.T)

    def _phi_total(self, y):
        z = y[:, None, :] + self.n[None]
        f = self._real(np.linalg.norm(z, axis=-1))[0].sum(axis=1)
        f = f + self._origin(np.linalg.norm(y, axis=-1))[0]
        return f + (self.coef * np.cos(self._phase(y))).sum(axis=1)

    def _green(self, y):
        return -self.c * (self._phi_total(y) - self._g0)

    def _grad(self, y):
        z = y[:, None, :] + self.n[None]
        d1 = self._real(np.linalg.norm(z, axis=-1))[1]
        g = (d1[..., None] * z).sum(axis=1)
        g += self._origin(np.linalg.norm(y, axis=-1))[1][:, None] * y
        g -= (self.coef * np.sin(self._phase(y))) @ (2.0 * math.pi * self.k)
        return -self.c * g

    def _hess(self, y):
        z = y[:, None, :] + self.n[None]
        _, d1, h = self._real(np.linalg.norm(z, axis=-1))
        H = _hessian(d1, h, z).sum(axis=1)
        _, o1, oh = self._origin(np.linalg.norm(y, axis=-1))
        H += _hessian(o1, oh, y)
        kk = (2.0 * math.pi) ** 2 * self.k[:, :, None] * self.k[:, None, :]
        H -= np.einsum("pk,kab->pab", self.coef * np.cos(self._phase(y)), kk)
        return -self.c * H

    def green(self, y):
        return self._chunked(self._green, y, (), 256)

    def grad(self, y):
        return self._chunked(self._grad, y, (2,), 256)

    def hess(self, y):
        return self._chunked(self._hess, y, (2, 2), 256)


class ChebyshevRemainder(_Remainder):
    """Tensor Chebyshev interpolant of G_R on the closed cell [-1/2, 1/2]^2.

    G_R is analytic on the closed cell (its nearest singularities sit at the
    neighbouring lattice points), so a degree-31 interpolant reproduces the
    base evaluator to roughly machine precision. Derivatives come from the
    same polynomial, so the tabulated kernel stays exactly divergence free.
    """

    def __init__(self, base: _Remainder, nodes: int = 32):
        t = np.cos(math.pi * (np.arange(nodes) + 0.5) / nodes)
        Y = np.stack(np.meshgrid(t / 2.0, t / 2.0, indexing="ij"), axis=-1)
        F = base.green(Y)
        V = cheb.chebvander(t, nodes - 1)
        Vinv = np.linalg.inv(V)
        C = Vinv @ F @ Vinv.T
        self.C = C
        # d/dy = 2 d/dt on the cell
        self.Cx = 2.0 * cheb.chebder(C, axis=0)
        self.Cy = 2.0 * cheb.chebder(C, axis=1)
        self.Cxx = 2.0 * cheb.chebder(self.Cx, axis=0)
        self.Cxy = 2.0 * cheb.chebder(self.Cx, axis=1)
        self.Cyy = 2.0 * cheb.chebder(self.Cy, axis=1)
        self.g0 = float(cheb.chebval2d(0.0, 0.0, C))
        self._orders = np.arange(nodes, dtype=np.float64)

        def pad(D):
            out = np.zeros((nodes, nodes))
            out[: D.shape[0], : D.shape[1]] = D
            return out

        self._Cv = C[None]
        self._Cg = np.stack([pad(self.Cx), pad(self.Cy)])
        self._Ch = np.stack([pad(self.Cxx), pad(self.Cxy), pad(self.Cyy)])

    def _ev(self, Cs, y):
        """Evaluate the stacked tables Cs (m, n, n) at points y (..., 2); returns (..., m)."""
        y = np.asarray(y, dtype=np.float64)
        flat = y.reshape(-1, 2)
        # T_k(t) = cos(k arccos t) on [-1, 1]
        Tx = np.cos(np.arccos(np.clip(2.0 * flat[:, 0], -1.0, 1.0))[:, None] * self._orders)
        Ty = np.cos(np.arccos(np.clip(2.0 * flat[:, 1], -1.0, 1.0))[:, None] * self._orders)
        out = ((Tx @ Cs) * Ty).sum(axis=-1)
        return np.moveaxis(out, 0, -1).reshape(y.shape[:-1] + (Cs.shape[0],))

    def green(self, y):
        return self._ev(self._Cv, y)[..., 0] - self.g0

    def grad(self, y):
        return self._ev(self._Cg, y)

    def hess(self, y):
        h = self._ev(self._Ch, y)
        return np.stack([h[..., 0:2], h[..., 1:3]], axis=-2)


@functools.lru_cache(maxsize=32)
def _remainder_cached(eps, c, M, method, cutoff, tail, tabulate) -> _Remainder:
    if method == DIRECT:
        base: _Remainder = LatticeRemainder(eps, c, M, tail)
    else:
        base = EwaldRemainder(eps, c, cutoff)
    return ChebyshevRemainder(base) if tabulate else base


def torus_remainder(spec: KernelSpec, tabulate: bool | None = None) -> _Remainder:
    tab = spec.tabulate if tabulate is None else tabulate
    return _remainder_cached(
        spec.epsilon, spec.c_eps, spec.lattice_M, spec.method, spec.fourier_cutoff, spec.tail_correction, tab
    )


# ---------------------------------------------------------------------------
# evaluators on displacement arrays (last axis = 2)


def pair_green(y: FloatArray, spec: KernelSpec, domain: DomainSpec = Plane) -> FloatArray:
    """Green function (regularized iff spec.delta is set) at displacements y."""
    y = np.asarray(y, dtype=np.float64)
    r = np.sqrt(y[..., 0] ** 2 + y[..., 1] ** 2)
    if spec.delta is None:
        _check_nonzero(r, "Green")
    g = _radial(r, spec)[0]
    if domain.is_torus:
        g = g + torus_remainder(spec).green(y)
    return g


def pair_grad_green(y: FloatArray, spec: KernelSpec, domain: DomainSpec = Plane) -> FloatArray:
    y = np.asarray(y, dtype=np.float64)
    r = np.sqrt(y[..., 0] ** 2 + y[..., 1] ** 2)
    if spec.delta is None:
        _check_nonzero(r, "Green")
    g = _radial(r, spec)[1][..., None] * y
    if domain.is_torus:
        g = g + torus_remainder(spec).grad(y)
    return g


def pair_kernel(y: FloatArray, spec: KernelSpec, domain: DomainSpec = Plane) -> FloatArray:
    """Velocity kernel at displacements y (already minimal-image on the torus)."""
    y = np.asarray(y, dtype=np.float64)
    r = np.sqrt(y[..., 0] ** 2 + y[..., 1] ** 2)
    if spec.delta is None:
        _check_nonzero(r, "kernel")
        fac = spec.c_eps * r ** (spec.epsilon - 3.0)
    else:
        _, b, c4 = blend_coefficients(spec.delta, spec.epsilon, spec.c_eps)
        with np.errstate(divide="ignore"):
            exact = spec.c_eps * r ** (spec.epsilon - 3.0)
        # G'(r)/r of the quartic is 2b + 4 c4 r^2
        fac = np.where(r >= spec.delta, exact, (2.0 * b + 4.0 * c4 * r * r) / spec.kappa)
    k = fac[..., None] * perp(y)
    if domain.is_torus:
        k = k + perp(torus_remainder(spec).grad(y)) / spec.kappa
    return k


def pair_kernel_jacobian(y: FloatArray, spec: KernelSpec, domain: DomainSpec = Plane) -> FloatArray:
    """Jacobian dK/dy at displacements y; shape (..., 2, 2)."""
    y = np.asarray(y, dtype=np.float64)
    r = np.sqrt(y[..., 0] ** 2 + y[..., 1] ** 2)
    if spec.delta is None:
        _check_nonzero(r, "kernel")
    _, d1, h = _radial(r, spec)
    H = _hessian(d1, h, y)
    if domain.is_torus:
        H = H + torus_remainder(spec).hess(y)
    return _perp_matrix(H) / spec.kappa


# ---------------------------------------------------------------------------
# public single-point operations


def _vec(x) -> FloatArray:
    return np.asarray(x, dtype=np.float64)


def k_plane(x, spec: KernelSpec) -> FloatArray:
    return pair_kernel(_vec(x), spec.regularized(None), Plane)


def k_torus(x, spec: KernelSpec) -> FloatArray:
    y = displacement(_vec(x), 0.0, Torus)
    return pair_kernel(y, spec.regularized(None), Torus)


def green_plane(x, spec: KernelSpec) -> FloatArray:
    return pair_green(_vec(x), spec.regularized(None), Plane)


def green_torus(x, spec: KernelSpec) -> FloatArray:
    """Torus Green function, normalized so that G_torus - G_plane -> 0 at the origin."""
    y = displacement(_vec(x), 0.0, Torus)
    return pair_green(y, spec.regularized(None), Torus)


def green_regularized(x, spec: KernelSpec, domain: DomainSpec = Plane) -> FloatArray:
    if spec.delta is None:
        raise ValueError("green_regularized needs spec.delta")
    y = displacement(_vec(x), 0.0, domain)
    return pair_green(y, spec, domain)


def k_regularized(x, spec: KernelSpec, domain: DomainSpec = Plane) -> FloatArray:
    if spec.delta is None:
        raise ValueError("k_regularized needs spec.delta")
    y = displacement(_vec(x), 0.0, domain)
    return pair_kernel(y, spec, domain)


# ---------------------------------------------------------------------------
# N-vortex drift


def velocity(x: FloatArray, xi: FloatArray, spec: KernelSpec, domain: DomainSpec) -> FloatArray:
    """Drift dx_i/dt = sum_{j != i} xi_j K(x_i - x_j) for positions (..., N, 2).

    Each unordered pair is evaluated once and used with both signs, so the
    result only involves elementwise operations and reductions of fixed
    length; stacked batches give bitwise the same rows as single states.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[-2]
    if n < 2:
        return np.zeros_like(x)
    i, j = pair_indices(n)
    y = displacement(x[..., i, :], x[..., j, :], domain)
    k = pair_kernel(y, spec, domain)
    full = np.zeros(x.shape[:-2] + (n, n, 2))
    full[..., i, j, :] = k
    full[..., j, i, :] = -k
    xi = np.asarray(xi, dtype=np.float64)
    return (full * xi[..., None, :, None]).sum(axis=-2)


def drift(s, spec: KernelSpec) -> FloatArray:
    """Drift of a VortexState, shape (N, 2)."""
    return velocity(s.positions, s.intensities, spec, s.domain)


def drift_jacobian(x: FloatArray, xi: FloatArray, spec: KernelSpec, domain: DomainSpec) -> FloatArray:
    """Jacobian of the flattened drift with respect to flattened positions, (2N, 2N)."""
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    J = np.zeros((n, 2, n, 2))
    if n >= 2:
        i, j = pair_indices(n)
        y = displacement(x[i], x[j], domain)
        D = pair_kernel_jacobian(y, spec, domain)
        for p, (a, b) in enumerate(zip(i, j)):
            # K(x_a - x_b) enters b_a with xi_b, and -K(x_a - x_b) enters b_b with xi_a
            J[a, :, a, :] += xi[b] * D[p]
            J[a, :, b, :] -= xi[b] * D[p]
            J[b, :, b, :] += xi[a] * D[p]
            J[b, :, a, :] -= xi[a] * D[p]
    return J.reshape(2 * n, 2 * n)


# ---------------------------------------------------------------------------
# bound on the regularized Green function and its derivatives


def bound_constant(spec: KernelSpec) -> float:
    """Constant C with |grad^i G_delta(x)| <= C |x|^-(i+1-eps), i = 0, 1, 2, on the plane.

    Outside the blend the ratios are c_eps, c_eps (1-eps) and
    c_eps (1-eps)(2-eps). Inside, in the variable s = r/delta, they do not
    depend on delta; the supremum over s in (0, 1] is taken on a fine grid
    and padded by 1 percent. Depends on eps and c_eps only.
    """
    eps = spec.epsilon
    if eps == 1.0:
        raise ValueError("bound (5) is stated for eps < 1")
    unit = KernelSpec(eps, 1.0, delta=0.5)
    s = np.linspace(1e-6, 1.0, 20001) * 0.5
    g, d1, h = _radial(s, unit)
    g2_radial = h * s * s + d1
    ratios = [
        np.abs(g) * s ** (1.0 - eps),
        np.abs(d1 * s) * s ** (2.0 - eps),
        np.maximum(np.abs(g2_radial), np.abs(d1)) * s ** (3.0 - eps),
    ]
    inside = max(float(r.max()) for r in ratios)
    outside = max(1.0, (1.0 - eps), (1.0 - eps) * (2.0 - eps))
    return spec.c_eps * 1.01 * max(inside, outside)
