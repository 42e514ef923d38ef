"""Point-vortex dynamics for the modified surface quasi-geostrophic (mSQG) equations."""
from .collapse import (
    CollapseConfig,
    DegenerateGeometryError,
    NoCollapseError,
    build_config,
    collapse_time,
    reference_configuration,
    scale_config,
    solve_intensities,
)
from .diagnostics import DiagnosticsSpec, compute_c0, invariant_S, invariant_S_eps, lyapunov_g_delta, signed_area_A
from .ensemble import EnsembleSpec, EnsembleStats, delta_scaling_fit, regularization_demo, run_ensemble
from .geometry import DomainSpec, Plane, Torus, VortexState, displacement, min_pairwise_distance, wrap
from .integrator import (
    IntegratorSpec,
    StoppingRule,
    Trajectory,
    flow_jacobian_logdet,
    integrate_deterministic,
    integrate_stochastic,
)
from .kernel import KernelSingularityError, KernelSpec, drift, green_regularized, k_plane, k_torus, velocity
from .noise import NoiseSpec, covariance_Q, ellipticity_min_eig, sigma

__version__ = "0.1.0"

__all__ = [
    "CollapseConfig",
    "DegenerateGeometryError",
    "NoCollapseError",
    "build_config",
    "collapse_time",
    "reference_configuration",
    "scale_config",
    "solve_intensities",
    "DiagnosticsSpec",
    "compute_c0",
    "invariant_S",
    "invariant_S_eps",
    "lyapunov_g_delta",
    "signed_area_A",
    "EnsembleSpec",
    "EnsembleStats",
    "delta_scaling_fit",
    "regularization_demo",
    "run_ensemble",
    "DomainSpec",
    "Plane",
    "Torus",
    "VortexState",
    "displacement",
    "min_pairwise_distance",
    "wrap",
    "IntegratorSpec",
    "StoppingRule",
    "Trajectory",
    "flow_jacobian_logdet",
    "integrate_deterministic",
    "integrate_stochastic",
    "KernelSingularityError",
    "KernelSpec",
    "drift",
    "green_regularized",
    "k_plane",
    "k_torus",
    "velocity",
    "NoiseSpec",
    "covariance_Q",
    "ellipticity_min_eig",
    "sigma",
]
