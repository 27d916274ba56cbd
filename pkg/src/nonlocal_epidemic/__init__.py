"""Nonlocal-diffusion epidemic model on a moving interval: simulation and threshold quantities."""
from .classify import ClassifyConfig, Outcome, Verdict, classify, mu_star, phase_sweep
from .dynamics import (InitialData, SimConfig, SimState, Trajectory, mass_balance_residual, run_fb,
                       solve_ode, step_fb, step_fixed)
from .growth import GrowthLaw, ModelParams, equilibrium, r0, theta, validate_growth
from .kernels import Kernel, kernel_density, kernel_tail, validate_kernel
from .quadgrid import ActiveWindow, Grid, active_quadrature, boundary_flux, nonlocal_convolve
from .spectral import l_star, lambda_p, steady_state

__version__ = "0.1.0"

__all__ = [
    "ActiveWindow", "ClassifyConfig", "Grid", "GrowthLaw", "InitialData", "Kernel", "ModelParams", "Outcome",
    "SimConfig", "SimState", "Trajectory", "Verdict", "active_quadrature", "boundary_flux", "classify",
    "equilibrium", "kernel_density", "kernel_tail", "l_star", "lambda_p", "mass_balance_residual", "mu_star",
    "nonlocal_convolve", "phase_sweep", "r0", "run_fb", "solve_ode", "steady_state", "step_fb", "step_fixed",
    "theta", "validate_growth", "validate_kernel",
]
