"""Divergence-free Fourier noise fields on the torus.

Mode ``k`` carries ``sigma_k(x) = c_k |k|^-gamma k_perp e_k(x)`` with
``e_k = sqrt2 cos(2 pi k.x)`` for k in the upper half lattice and
``sqrt2 sin(2 pi k.x)`` otherwise. Modes with ``0 < |k| <= k_max`` are kept;
the set is symmetric under ``k -> -k`` so the covariance is homogeneous.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .geometry import FloatArray, VortexState

SQRT2 = math.sqrt(2.0)
TWO_PI = 2.0 * math.pi


def is_upper(k) -> bool:
    """Membership in the upper half lattice (cosine modes)."""
    return k[0] > 0 or (k[0] == 0 and k[1] > 0)


@dataclass(frozen=True)
class NoiseSpec:
    gamma: float = 4.0
    k_max: int = 8
    global_scale: float = 1.0
    # optional ((k1, k2), c_k) pairs; missing modes default to 1
    mode_scales: tuple = ()
    enabled: bool = True

    def __post_init__(self) -> None:
        if not self.gamma > 3.0:
            raise ValueError("gamma must exceed 3")
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")
        if not self.global_scale >= 0.0:
            raise ValueError("global_scale must be >= 0")
        scales = {tuple(int(v) for v in k): float(c) for k, c in self.mode_scales}
        for k, c in scales.items():
            if not c > 0.0:
                raise ValueError(f"mode scale for {k} must be positive")
            if scales.get((-k[0], -k[1]), 1.0) != c:
                raise ValueError(f"mode scales must satisfy c_k = c_-k (mode {k})")
        object.__setattr__(self, "mode_scales", tuple(sorted(scales.items())))

    @property
    def active(self) -> bool:
        return self.enabled and self.global_scale > 0.0

    @property
    def n_modes(self) -> int:
        return len(mode_table(self).k)

    def lipschitz_constant(self) -> float:
        """sum_k c_k^2 sup|grad sigma_k|^2 = sum_k 8 pi^2 c_k^2 |k|^(4 - 2 gamma)."""
        t = mode_table(self)
        return float(np.sum(2.0 * TWO_PI**2 * (t.amp * t.norm**2) ** 2))


@dataclass(frozen=True)
class ModeTable:
    k: FloatArray  # (M, 2) wave vectors, upper half first then their negatives
    cos_mode: np.ndarray  # (M,) bool
    amp: FloatArray  # (M,) c_k |k|^-gamma
    kperp: FloatArray  # (M, 2)
    norm: FloatArray  # (M,) |k|


@functools.lru_cache(maxsize=64)
def mode_table(spec: NoiseSpec) -> ModeTable:
    r = np.arange(-spec.k_max, spec.k_max + 1)
    upper = [(a, b) for a in r for b in r if 0 < a * a + b * b <= spec.k_max**2 and is_upper((a, b))]
    ks = upper + [(-a, -b) for a, b in upper]
    k = np.array(ks, dtype=np.float64)
    norm = np.hypot(k[:, 0], k[:, 1])
    scales = dict(spec.mode_scales)
    c = np.array([scales.get(kk, 1.0) for kk in ks]) * spec.global_scale
    amp = c * norm**-spec.gamma
    kperp = np.stack([k[:, 1], -k[:, 0]], axis=1)
    cos_mode = np.array([is_upper(kk) for kk in ks])
    for a in (k, norm, amp, kperp, cos_mode):
        a.setflags(write=False)
    return ModeTable(k, cos_mode, amp, kperp, norm)


def _check_k(k) -> tuple[int, int]:
    k = (int(k[0]), int(k[1]))
    if k == (0, 0):
        raise ValueError("mode k = 0 is excluded")
    return k


def _scale(k: tuple[int, int], spec: NoiseSpec) -> float:
    return dict(spec.mode_scales).get(k, 1.0) * spec.global_scale


def basis_e(k, x) -> FloatArray:
    k = _check_k(k)
    x = np.asarray(x, dtype=np.float64)
    ph = TWO_PI * (k[0] * x[..., 0] + k[1] * x[..., 1])
    return SQRT2 * (np.cos(ph) if is_upper(k) else np.sin(ph))


def basis_e_grad(k, x) -> FloatArray:
    k = _check_k(k)
    x = np.asarray(x, dtype=np.float64)
    ph = TWO_PI * (k[0] * x[..., 0] + k[1] * x[..., 1])
    d = -np.sin(ph) if is_upper(k) else np.cos(ph)
    return (SQRT2 * TWO_PI * d)[..., None] * np.array(k, dtype=np.float64)


def sigma(k, x, spec: NoiseSpec) -> FloatArray:
    k = _check_k(k)
    kk = np.array(k, dtype=np.float64)
    kperp = np.array([kk[1], -kk[0]])
    a = _scale(k, spec) * math.hypot(*k) ** -spec.gamma
    return (a * basis_e(k, x))[..., None] * kperp


def sigma_jacobian(k, x, spec: NoiseSpec) -> FloatArray:
    """d sigma_a / d x_b, analytic; shape (..., 2, 2)."""
    k = _check_k(k)
    kk = np.array(k, dtype=np.float64)
    kperp = np.array([kk[1], -kk[0]])
    a = _scale(k, spec) * math.hypot(*k) ** -spec.gamma
    g = basis_e_grad(k, x)
    return a * kperp[:, None] * g[..., None, :]


def sigma_divergence(k, x, spec: NoiseSpec) -> FloatArray:
    """div sigma_k = c_k |k|^-gamma (k_perp . k) d e_k; the integer dot product is exactly 0."""
    k = _check_k(k)
    dot = k[1] * k[0] - k[0] * k[1]
    a = _scale(k, spec) * math.hypot(*k) ** -spec.gamma
    x = np.asarray(x, dtype=np.float64)
    ph = TWO_PI * (k[0] * x[..., 0] + k[1] * x[..., 1])
    de = SQRT2 * TWO_PI * (-np.sin(ph) if is_upper(k) else np.cos(ph))
    return a * dot * de


def _phases(x: FloatArray, t: ModeTable) -> FloatArray:
    # elementwise rather than matmul so rows never depend on batch shape
    return TWO_PI * (x[..., 0, None] * t.k[:, 0] + x[..., 1, None] * t.k[:, 1])


def _basis_all(x: FloatArray, t: ModeTable) -> FloatArray:
    ph = _phases(x, t)
    return SQRT2 * np.where(t.cos_mode, np.cos(ph), np.sin(ph))


def sigma_all(x, spec: NoiseSpec) -> FloatArray:
    """All retained sigma_k at points x; shape (..., M, 2)."""
    t = mode_table(spec)
    x = np.asarray(x, dtype=np.float64)
    w = _basis_all(x, t) * t.amp
    return w[..., None] * t.kperp


def strat_ito_correction(x, spec: NoiseSpec) -> FloatArray:
    """sum_k (sigma_k . grad) sigma_k with analytic gradients."""
    t = mode_table(spec)
    x = np.asarray(x, dtype=np.float64)
    ph = _phases(x, t)
    e = SQRT2 * np.where(t.cos_mode, np.cos(ph), np.sin(ph))
    de = SQRT2 * TWO_PI * np.where(t.cos_mode, -np.sin(ph), np.cos(ph))
    # (sigma_k . grad) e_k = amp e_k (k_perp . k) de_k
    directional = t.amp * e * (t.kperp * t.k).sum(axis=-1) * de
    return (t.amp * directional)[..., None] * t.kperp


def strat_ito_total(x, spec: NoiseSpec) -> FloatArray:
    return strat_ito_correction(x, spec).sum(axis=-2)


def covariance_Q(x, spec: NoiseSpec) -> FloatArray:
    s = sigma_all(x, spec)
    return np.einsum("...ma,...mb->...ab", s, s)


def trace_Q_series(spec: NoiseSpec) -> float:
    """Trace of Q from the mode list alone: sum over +-k pairs of 2 c_k^2 |k|^(2 - 2 gamma)."""
    t = mode_table(spec)
    half = t.cos_mode
    return float(np.sum(2.0 * (t.amp[half] * t.norm[half]) ** 2))


def system_diffusion(s: VortexState, spec: NoiseSpec) -> FloatArray:
    """Matrix (2N, M) whose column k stacks sigma_k(x_1), ..., sigma_k(x_N)."""
    sig = sigma_all(s.positions, spec)  # (N, M, 2)
    return np.transpose(sig, (0, 2, 1)).reshape(2 * s.n, -1)


def ellipticity_min_eig(s: VortexState, spec: NoiseSpec) -> float:
    """Smallest eigenvalue of sum_k A_k A_k^T; clipped at 0 (the matrix is PSD)."""
    A = system_diffusion(s, spec)
    lam = np.linalg.eigvalsh(A @ A.T)[0]
    return float(max(lam, 0.0))


def noise_increment(x: FloatArray, dW: FloatArray, spec: NoiseSpec) -> FloatArray:
    """sum_k sigma_k(x_i) dW_k for positions (..., N, 2) and increments (..., M)."""
    t = mode_table(spec)
    w = _basis_all(x, t) * (t.amp * dW[..., None, :])
    return np.stack([(w * t.kperp[:, 0]).sum(axis=-1), (w * t.kperp[:, 1]).sum(axis=-1)], axis=-1)
