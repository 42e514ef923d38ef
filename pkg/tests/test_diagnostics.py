import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from msqg_vortex.collapse import reference_configuration
from msqg_vortex.diagnostics import (
    DiagnosticsSpec,
    collision_threshold,
    compute_c0,
    invariant_S,
    invariant_S_eps,
    lyapunov_g_delta,
    majorant_h1,
    majorant_h2,
    record,
    signed_area_A,
)
from msqg_vortex.geometry import Plane, Torus, VortexState
from msqg_vortex.kernel import KernelSpec, pair_green

K = KernelSpec(0.5, delta=0.05)


def test_invariants_vanish_on_reference():
    s = reference_configuration().state()
    assert abs(invariant_S(s)) < 1e-5
    assert abs(invariant_S_eps(s, 0.5)) < 1e-5


def test_S_equilateral_and_errors():
    l = 0.7
    s = VortexState([(0, 0), (l, 0), (l / 2, l * math.sqrt(3) / 2)], [2.0, 2.0, 2.0])
    assert math.isclose(invariant_S(s), 3 * l**2 / 2.0, rel_tol=1e-12)
    assert math.isclose(invariant_S_eps(s, 1.0), 1.5, rel_tol=1e-12)
    with pytest.raises(ValueError, match="S defined for three vortices"):
        invariant_S(VortexState([(0, 0), (1, 0)], [1, 1]))
    with pytest.raises(ValueError):
        invariant_S_eps(VortexState([(0, 0), (0, 0), (1, 0)], [1, 1, 1]), 0.5)


def test_signed_area_examples():
    assert signed_area_A(VortexState([(0, 0), (1, 1), (2, 2)], [1, 1, 1])) == 0.0
    p = [(-1.0, 0.0), (1.0, 0.0), (1.0, math.sqrt(2))]
    a = signed_area_A(VortexState(p, [1, 1, 1]))
    assert math.isclose(abs(a), 2 * math.sqrt(2), rel_tol=1e-15)
    assert a > 0  # counter-clockwise
    assert signed_area_A(VortexState([p[1], p[0], p[2]], [1, 1, 1])) == -a


def test_c0_bounds_and_threshold():
    for dom in (Plane, Torus):
        c0 = compute_c0(K, dom)
        assert np.isfinite(c0)
        d = DiagnosticsSpec(c0)
        rng = np.random.default_rng(0)
        for _ in range(20):
            s = VortexState(rng.uniform(-0.5, 0.5, (4, 2)), [1, -1, 2, 0.5], dom)
            assert lyapunov_g_delta(s, K, d) >= 0.0
    # any pair within delta pushes g above the collision threshold
    c0 = compute_c0(K, Torus)
    for r in (0.0, 0.01, 0.049):
        s = VortexState([(0.0, 0.0), (r, 0.0), (0.3, 0.2)], [1, 1, 1], Torus)
        assert lyapunov_g_delta(s, K, DiagnosticsSpec(c0)) >= collision_threshold(K, c0)


def test_g_delta_pair_at_c0_contributes_zero():
    # choose c0 equal to G at the pair separation
    s = VortexState([(0.0, 0.0), (0.3, 0.0)], [1, 1], Plane)
    c0 = float(pair_green(np.array([0.3, 0.0]), K))
    assert lyapunov_g_delta(s, K, DiagnosticsSpec(c0)) == 0.0


def test_g_delta_monotone_blowup():
    c0 = compute_c0(K, Plane)
    vals = [lyapunov_g_delta(VortexState([(0, 0), (d, 0)], [1, 1]), K, DiagnosticsSpec(c0)) for d in (0.2, 0.1, 0.05, 0.01)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def brute_h(x, eps):
    n = len(x)
    d = lambda i, j: np.linalg.norm(x[i] - x[j])  # noqa: E731
    h1 = sum(1 / (d(i, j) ** (2 - eps) * d(i, k) ** (2 - eps)) for i, j, k in itertools.permutations(range(n), 3))
    h1 += sum(1 / d(i, j) ** (1 - eps) for i, j in itertools.permutations(range(n), 2))
    h2 = sum(1 / d(i, j) ** (2 - 2 * eps) for i, j in itertools.permutations(range(n), 2))
    return h1, h2


def test_majorants_two_vortices():
    d, eps = 0.37, 0.5
    s = VortexState([(0, 0), (d, 0)], [1, 1])
    assert math.isclose(majorant_h1(s, eps), 2 * d ** (eps - 1), rel_tol=1e-14)
    assert math.isclose(majorant_h2(s, eps), 2 * d ** (2 * eps - 2), rel_tol=1e-14)


def test_majorants_match_brute_force_on_reference():
    s = reference_configuration().state()
    h1, h2 = brute_h(np.asarray(s.positions), 0.5)
    assert math.isclose(majorant_h1(s, 0.5), h1, rel_tol=1e-12)
    assert math.isclose(majorant_h2(s, 0.5), h2, rel_tol=1e-12)


@given(st.integers(0, 100_000), st.integers(2, 6), st.sampled_from([0.25, 0.5, 0.8]))
def test_majorants_match_brute_force_random(seed, n, eps):
    x = np.random.default_rng(seed).uniform(-1, 1, (n, 2))
    s = VortexState(x, np.ones(n))
    h1, h2 = brute_h(x, eps)
    assert math.isclose(majorant_h1(s, eps), h1, rel_tol=1e-12)
    assert math.isclose(majorant_h2(s, eps), h2, rel_tol=1e-12)
    lam = 2.5
    assert math.isclose(majorant_h2(VortexState(lam * x, np.ones(n)), eps), lam ** (2 * eps - 2) * h2, rel_tol=1e-12)


def test_record_fields():
    s = reference_configuration().state()
    r = record(0.5, s, 0.5, K, DiagnosticsSpec(compute_c0(K, Plane)))
    d = r.as_dict()
    assert set(d) == {"t", "min_dist", "S", "S_eps", "area_A", "g_delta", "h1", "h2"}
    assert d["h1"] >= 0 and d["h2"] >= 0 and d["min_dist"] >= 0
    r2 = record(0.0, VortexState([(0, 0), (1, 0)], [1, 1]), 0.5)
    assert r2.S is None and r2.g_delta is None
    with pytest.raises(ValueError):
        DiagnosticsSpec(float("inf"))
