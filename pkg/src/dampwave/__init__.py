"""Numerical laboratory for damped waves with growing damping and their diffusive limit."""
from __future__ import annotations

from dampwave.grid import (
    DampingProfile,
    Field,
    InitialData,
    Perturbation,
    RadialGrid,
    build_grid,
    bump_initial_data,
    damping_eval,
    quadrature,
    weighted_l2_norm,
)
from dampwave.heat import apply_generator, duhamel_reconstruct, evolve_heat, step_heat
from dampwave.rates import fit_decay_slope, rate_table, verdict
from dampwave.transform import TransformParams, apply_B_radial, j_transform, psi_map
from dampwave.wave import WaveRunConfig, check_support, radial_laplacian, solve_wave, step_wave
from dampwave.weight import assemble_A_eps, phi_weight, verify_elliptic_bounds

__version__ = "0.1.0"

__all__ = [
    "DampingProfile", "Field", "InitialData", "Perturbation", "RadialGrid", "TransformParams",
    "WaveRunConfig", "apply_B_radial", "apply_generator", "assemble_A_eps", "build_grid",
    "bump_initial_data", "check_support", "damping_eval", "duhamel_reconstruct", "evolve_heat",
    "fit_decay_slope", "j_transform", "phi_weight", "psi_map", "quadrature", "radial_laplacian",
    "rate_table", "solve_wave", "step_heat", "step_wave", "verdict", "verify_elliptic_bounds",
    "weighted_l2_norm",
]
