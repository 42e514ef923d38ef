"""Collapse of the reference triangle scaled into the torus, over a range of lambda."""
import argparse

from msqg_vortex.collapse import centered, collapse_time, fits_in_box, reference_configuration, scale_config
from msqg_vortex.geometry import Torus, min_distance
from msqg_vortex.integrator import IntegratorSpec, StoppingRule, integrate_deterministic
from msqg_vortex.kernel import KernelSpec


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eps", type=float, default=0.5)
    ap.add_argument("--lambdas", type=float, nargs="+", default=[32, 256, 1024, 2048, 4096])
    ap.add_argument("--lattice-M", type=int, default=20)
    a = ap.parse_args()
    base = reference_configuration(a.eps)
    print(f"{'lambda':>8} {'fits':>5} {'stop':>16} {'t_stop*lam/t*':>14} {'min dist':>10}")
    for lam in a.lambdas:
        sc = centered(scale_config(base, lam))
        ts = collapse_time(sc)
        tr = integrate_deterministic(sc.state(Torus), KernelSpec(a.eps, lattice_M=a.lattice_M), IntegratorSpec(t_end=1.5 * ts, dt=ts * 1e-3), StoppingRule(1e-3))
        print(f"{lam:8g} {str(fits_in_box(sc)):>5} {tr.stop_reason:>16} {tr.stop_time / ts:14.6f} {min(min_distance(p, Torus) for p in tr.positions):10.2e}")


if __name__ == "__main__":
    main()
