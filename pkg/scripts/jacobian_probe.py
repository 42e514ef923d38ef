"""log|det DX_t| of regularized torus flows: variational equations against finite differences."""
import argparse

import numpy as np

from msqg_vortex.geometry import Torus, VortexState, min_distance
from msqg_vortex.integrator import IntegratorSpec, finite_difference_jacobian, flow_jacobian
from msqg_vortex.kernel import KernelSpec


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=10)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--delta", type=float, default=0.05)
    ap.add_argument("--t", type=float, default=1.0)
    a = ap.parse_args()
    rng = np.random.default_rng(a.seed)
    k = KernelSpec(0.5, delta=a.delta)
    print(f"{'variational':>12} {'finite diff':>12} {'cond(J)':>9}")
    done = 0
    while done < a.n:
        x = rng.uniform(-0.5, 0.5, (3, 2))
        xi = rng.uniform(0.3, 1.0, 3) * rng.choice([-1.0, 1.0], 3)
        if min_distance(x, Torus) <= 0.2:
            continue
        s = VortexState(x, xi, Torus)
        _, J = flow_jacobian(s, k, a.t, IntegratorSpec(adaptive_tol=1e-10))
        Jf = finite_difference_jacobian(s, k, a.t)
        print(f"{np.linalg.slogdet(J)[1]:12.2e} {np.linalg.slogdet(Jf)[1]:12.2e} {np.linalg.cond(J):9.1e}")
        done += 1


if __name__ == "__main__":
    main()
