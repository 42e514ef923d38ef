"""Plane self-similar collapse: simulated side lengths against the closed form."""
import argparse

import numpy as np

from msqg_vortex.collapse import analytic_distance, collapse_time, reference_configuration
from msqg_vortex.diagnostics import side_lengths
from msqg_vortex.integrator import IntegratorSpec, StoppingRule, integrate_deterministic
from msqg_vortex.kernel import KernelSpec


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eps", type=float, default=0.5)
    ap.add_argument("--tol", type=float, default=1e-10)
    ap.add_argument("--delta-stop", type=float, default=1e-3)
    a = ap.parse_args()
    cfg = reference_configuration(a.eps)
    ts = collapse_time(cfg)
    tr = integrate_deterministic(cfg.state(), KernelSpec(a.eps), IntegratorSpec(adaptive_tol=a.tol, t_end=2 * ts), StoppingRule(a.delta_stop))
    print(f"xi = {np.round(cfg.xi, 7)}  t* = {ts:.10f}")
    print(f"stop: {tr.stop_reason} at t = {tr.stop_time:.10f} (rel {abs(tr.stop_time - ts) / ts:.2e})")
    print(f"{'t/t*':>6} {'l12':>12} {'exact':>12} {'l23':>12} {'exact':>12} {'l31':>12} {'exact':>12}")
    for frac in (0.0, 0.25, 0.5, 0.75, 0.9, 0.99):
        i = int(np.searchsorted(tr.times, frac * ts))
        t = tr.times[i]
        ls = side_lengths(tr.states[i])
        ex = [analytic_distance(t, l0, c, a.eps) for l0, c in zip(cfg.l0, cfg.c_coeffs)]
        print(f"{t / ts:6.3f} " + " ".join(f"{l:12.8f} {e:12.8f}" for l, e in zip(ls, ex)))


if __name__ == "__main__":
    main()
