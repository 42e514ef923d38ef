import math
from dataclasses import replace

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from msqg_vortex.collapse import (
    DegenerateGeometryError,
    NoCollapseError,
    ScalingMap,
    analytic_distance,
    build_config,
    c_coefficients,
    centered,
    collapse_time,
    fits_in_box,
    min_lambda_to_fit,
    pair_collapse_times,
    reference_configuration,
    scale_config,
    solve_intensities,
    triangle_from_distances,
)
from msqg_vortex.diagnostics import invariant_S, invariant_S_eps
from msqg_vortex.geometry import Plane
from msqg_vortex.integrator import IntegratorSpec, NO_STOP, integrate_deterministic
from msqg_vortex.kernel import KernelSpec

R2, R6 = math.sqrt(2), math.sqrt(6)
T_STAR_REF = 3.482262367518544  # frozen regression value, c_eps = 1


def test_solve_intensities_reference():
    xi1, xi3 = solve_intensities(2.0, R2, R6, 0.5, 1.0)
    assert abs(xi1 - 1.155616) < 1e-5
    assert abs(xi3 + 0.517419) < 1e-5


def test_solution_satisfies_invariants():
    for ls in ((2.0, R2, R6), (1.0, 1.3, 0.8), (3.0, 2.0, 1.5)):
        cfg = build_config(triangle_from_distances(*ls), 0.5)
        s = cfg.state()
        assert abs(invariant_S(s)) < 1e-10 * max(ls) ** 2
        assert abs(invariant_S_eps(s, 0.5)) < 1e-10


def test_degenerate_inputs():
    with pytest.raises(DegenerateGeometryError, match="degenerate geometry: intensities underdetermined"):
        solve_intensities(1.0, 1.0, 1.0, 0.5)
    with pytest.raises(DegenerateGeometryError):
        solve_intensities(1.0, 1.0, 2.0, 0.5)
    with pytest.raises(DegenerateGeometryError):
        solve_intensities(0.0, 1.0, 1.0, 0.5)


def test_c_coefficients_reference():
    cfg = reference_configuration()
    c = cfg.c_coeffs
    assert all(v < 0 for v in c)
    assert c_coefficients(cfg) == c
    ratios = [ci * li ** (0.5 - 3.0) for ci, li in zip(c, cfg.l0)]
    assert max(ratios) - min(ratios) < 1e-10 * abs(ratios[0])


def test_isoceles_bracket_vanishes():
    # l31 = l23 makes the bracket of c12 vanish
    p = triangle_from_distances(1.2, 1.0, 1.0)
    from msqg_vortex.collapse import _coefficients

    c, _ = _coefficients(p, np.array([1.0, 1.0, 1.0]), 0.5, 1.0)
    assert abs(c[0]) < 1e-15


def test_orientation_flip_expands():
    p = triangle_from_distances(2.0, R2, R6, clockwise=False)
    cfg = build_config(p, 0.5)
    assert all(v > 0 for v in cfg.c_coeffs)
    with pytest.raises(NoCollapseError, match="no collapse for this configuration"):
        collapse_time(cfg)
    auto = build_config(p, 0.5, orient="auto")
    assert auto.collapses


def test_intensity_sign_flip_expands():
    cfg = reference_configuration()
    flipped = replace(cfg, xi=-np.asarray(cfg.xi))
    flipped = replace(flipped, c_coeffs=c_coefficients(flipped))
    with pytest.raises(NoCollapseError):
        collapse_time(flipped)


def test_analytic_distance():
    assert analytic_distance(0.0, 1.3, -1.0, 0.5) == 1.3
    ts = -2 * 1.3**2.5 / (-1.0 * 2.5)
    assert analytic_distance(ts, 1.3, -1.0, 0.5) == 0.0
    with pytest.raises(ValueError, match="past collapse time"):
        analytic_distance(1.01 * ts, 1.3, -1.0, 0.5)


def test_distance_law_ode_oracle():
    eps, c, l0 = 0.5, -1.0, 1.0
    ts = -2 * l0 ** (3 - eps) / (c * (3 - eps))
    t = np.linspace(0, 0.9 * ts, 50)
    sol = solve_ivp(lambda _t, y: [c * y[0] ** ((eps - 1) / 2)], (0, t[-1]), [l0**2], t_eval=t, rtol=1e-12, atol=1e-14)
    assert np.max(np.abs(np.sqrt(sol.y[0]) - analytic_distance(t, l0, c, eps)) / analytic_distance(t, l0, c, eps)) < 1e-8


def test_collapse_time_reference_and_homogeneity():
    cfg = reference_configuration()
    assert math.isclose(collapse_time(cfg), T_STAR_REF, rel_tol=1e-12)
    a, b, c = pair_collapse_times(cfg)
    assert max(a, b, c) - min(a, b, c) < 1e-10 * a
    big = build_config(2.0 * np.asarray(cfg.positions0), 0.5)
    assert math.isclose(collapse_time(big), 2.0**2.5 * collapse_time(cfg), rel_tol=1e-10)


def test_scaling_map():
    assert ScalingMap.for_eps(3.0, 0.5).alpha == -0.4
    cfg = reference_configuration()
    one = scale_config(cfg, 1.0)
    assert np.array_equal(one.positions0, cfg.positions0)
    s = scale_config(cfg, 10.0)
    assert math.isclose(collapse_time(s), collapse_time(cfg) / 10.0, rel_tol=1e-12)
    assert s.c_coeffs == cfg.c_coeffs
    with pytest.raises(ValueError):
        ScalingMap.for_eps(0.0, 0.5)


def test_scaled_trajectory_relation():
    cfg = reference_configuration()
    lam = min_lambda_to_fit(centered(cfg))
    sc = centered(scale_config(cfg, lam))
    assert fits_in_box(sc)
    k = KernelSpec(0.5)
    f = ScalingMap.for_eps(lam, 0.5).factor
    shift = np.asarray(sc.positions0) - f * np.asarray(cfg.positions0)
    ts = collapse_time(sc)
    grid = np.linspace(0, 0.8 * ts, 9)
    for t in grid[1:]:
        a = integrate_deterministic(sc.state(), k, IntegratorSpec(t_end=t, adaptive_tol=1e-12), NO_STOP).final_state.positions
        b = integrate_deterministic(cfg.state(), k, IntegratorSpec(t_end=lam * t, adaptive_tol=1e-12), NO_STOP).final_state.positions
        assert np.max(np.abs(a - (f * b + shift))) < 1e-6


def test_min_lambda_and_box():
    cfg = centered(reference_configuration())
    assert math.isclose(min_lambda_to_fit(cfg), 32.0, rel_tol=1e-9)
    assert not fits_in_box(centered(scale_config(reference_configuration(), 8.0)))
    assert fits_in_box(centered(scale_config(reference_configuration(), 32.0 * (1 + 1e-9))))
    assert centered(cfg).state(Plane).n == 3
