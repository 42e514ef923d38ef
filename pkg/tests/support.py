"""Shared generators for the test suite."""
import math

import numpy as np

from msqg_vortex.geometry import Torus, VortexState, min_distance


def random_torus_states(n_states: int, seed: int = 2024, n: int = 3, min_sep: float = 0.2):
    """Uniform torus positions with min separation, intensities +-U(0.3, 1)."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n_states:
        x = rng.uniform(-0.5, 0.5, (n, 2))
        xi = rng.uniform(0.3, 1.0, n) * rng.choice([-1.0, 1.0], n)
        if min_distance(x, Torus) > min_sep:
            out.append(VortexState(x, xi, Torus))
    return out


def two_vortex_period(d: float, xi1: float, xi2: float, eps: float, c_eps: float = 1.0) -> float:
    """Relative vector rotates at omega = c_eps (xi1 + xi2) d^(eps-3)."""
    return 2.0 * math.pi * d ** (3.0 - eps) / (c_eps * (xi1 + xi2))
