from .exact_swe import ExactSolution, depth_function, exact_swe_solve, exact_swe_solver, godunov_state, wave_speeds
from .flux import FluxMode, fvs_flux, fvs_interface_flux, godunov_flux, numerical_flux, pressure_star
from .pressure import (
    RiemannSolverError,
    SolverTolerances,
    StarState,
    Wave,
    exact_pressure,
    exact_pressure_star,
    pressure_function,
    shock_speed_left,
    shock_speed_right,
    two_rarefaction,
    two_rarefaction_star,
)

__all__ = [
    "ExactSolution", "FluxMode", "RiemannSolverError", "SolverTolerances", "StarState", "Wave",
    "depth_function", "exact_pressure", "exact_pressure_star", "exact_swe_solve", "exact_swe_solver",
    "fvs_flux", "fvs_interface_flux", "godunov_flux", "godunov_state", "numerical_flux",
    "pressure_function", "pressure_star", "shock_speed_left", "shock_speed_right",
    "two_rarefaction", "two_rarefaction_star", "wave_speeds",
]
