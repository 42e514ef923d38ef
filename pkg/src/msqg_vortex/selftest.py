"""Fast invariant battery run by ``msqg-vortex selftest``."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .collapse import reference_configuration
from .geometry import Plane, Torus, VortexState, cross
from .kernel import KernelSpec, blend_coefficients, pair_green, pair_kernel
from .noise import NoiseSpec, covariance_Q, ellipticity_min_eig, sigma_divergence, strat_ito_total


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    tol: float


def _pts(n: int = 64, seed: int = 12345) -> np.ndarray:
    return np.random.default_rng(seed).uniform(-0.45, 0.45, size=(n, 2))


def _kernel_antisymmetry() -> float:
    y = _pts()
    worst = 0.0
    for dom in (Plane, Torus):
        for delta in (None, 0.05):
            k = KernelSpec(0.5, delta=delta)
            a, b = pair_kernel(y, k, dom), pair_kernel(-y, k, dom)
            worst = max(worst, float(np.max(np.abs(a + b)) / np.max(np.abs(a))))
    return worst


def _kernel_orthogonality() -> float:
    y = _pts()
    k = pair_kernel(y, KernelSpec(0.5), Plane)
    return float(np.max(np.abs(np.sum(k * y, axis=-1)) / (np.linalg.norm(k, axis=-1) * np.linalg.norm(y, axis=-1))))


def _noise_divergence() -> float:
    x = _pts()
    spec = NoiseSpec()
    return float(max(np.max(np.abs(sigma_divergence(k, x, spec))) for k in [(1, 0), (2, -3), (5, 7), (-8, 1)]))


def _q_homogeneity() -> float:
    q = covariance_Q(_pts(), NoiseSpec())
    return float(np.max(np.abs(q - q[0])))


def _q_unit() -> float:
    q = covariance_Q(_pts(8), NoiseSpec(k_max=1))
    return float(np.max(np.abs(q - 2.0 * np.eye(2))))


def _strat_correction() -> float:
    return float(np.max(np.abs(strat_ito_total(_pts(), NoiseSpec()))))


def _blend_seam() -> float:
    """Relative jump of G, G', G'' across r = delta for the quartic blend."""
    worst = 0.0
    for eps in (0.25, 0.5, 1.0):
        for delta in (0.01, 0.1):
            a, b, c4 = blend_coefficients(delta, eps)
            inner = (a + b * delta**2 + c4 * delta**4, 2 * b * delta + 4 * c4 * delta**3, 2 * b + 12 * c4 * delta**2)
            if eps == 1.0:
                outer = (np.log(delta), 1 / delta, -1 / delta**2)
            else:
                p = eps - 1.0
                outer = (-(delta**p), -p * delta ** (p - 1), -p * (p - 1) * delta ** (p - 2))
            worst = max(worst, max(abs(i - o) / abs(o) for i, o in zip(inner, outer)))
    # value-level continuity through the public evaluator
    k = KernelSpec(0.5, delta=0.1)
    r = np.array([[0.1 * (1 - 1e-12), 0.0], [0.1 * (1 + 1e-12), 0.0]])
    g = pair_green(r, k)
    return max(worst, float(abs(g[0] - g[1]) / abs(g[1])))


def _ellipticity() -> float:
    cfg = reference_configuration()
    s = VortexState(np.asarray(cfg.positions0) * 0.2, cfg.xi, Torus)
    return ellipticity_min_eig(s, NoiseSpec())


def _ellipticity_ok() -> tuple[bool, float]:
    v = _ellipticity()
    return v > 0.0, v


def _area_sign() -> float:
    cfg = reference_configuration()
    p = np.asarray(cfg.positions0)
    return float(abs(cross(p[1] - p[0], p[2] - p[0]) - cfg.area0))


CHECKS: list[tuple[str, Callable[[], float], float]] = [
    ("kernel_antisymmetry", _kernel_antisymmetry, 1e-12),
    ("kernel_orthogonality", _kernel_orthogonality, 1e-12),
    ("noise_divergence_free", _noise_divergence, 1e-12),
    ("noise_Q_homogeneous", _q_homogeneity, 1e-12),
    ("noise_Q_equals_2I_kmax1", _q_unit, 1e-12),
    ("strat_ito_correction_zero", _strat_correction, 1e-12),
    ("blend_C2_seam", _blend_seam, 1e-9),
    ("signed_area_consistent", _area_sign, 1e-12),
]


def run_battery() -> list[CheckResult]:
    out = []
    for name, fn, tol in CHECKS:
        try:
            v = float(fn())
            out.append(CheckResult(name, bool(v <= tol), v, tol))
        except Exception:  # a crashing check is a failing check
            out.append(CheckResult(name, False, float("nan"), tol))
    try:
        ok, v = _ellipticity_ok()
    except Exception:
        ok, v = False, float("nan")
    out.append(CheckResult("ellipticity_reference_state", ok, v, 0.0))
    return out


def format_table(results: list[CheckResult]) -> str:
    w = max(len(r.name) for r in results)
    lines = [f"{'check':<{w}}  status  value"]
    for r in results:
        rel = ">" if r.name.startswith("ellipticity") else "<="
        lines.append(f"{r.name:<{w}}  {'PASS' if r.passed else 'FAIL'}    {r.value:.3e} ({rel} {r.tol:g})")
    return "\n".join(lines)
