"""Spectral tools for the cubic Schrodinger equation with Wiener-randomized initial data."""

__version__ = "0.1.0"

from .grid import Field, Grid, make_grid, plane_wave
from .norms import critical_indices, is_admissible, lebesgue_norm, sobolev_norm, spacetime_norm
from .randomization import RandomizationSpec, randomize, randomize_dilated
from .evolution import EvolveParams, NumericalAbort, Trajectory, evolve_nls, evolve_perturbed
from .pvariation import StepFunction, vp_norm
from .experiments import ExperimentConfig, TailEstimate, estimate_tail, fit_subgaussian

__all__ = [
    "Field", "Grid", "make_grid", "plane_wave",
    "critical_indices", "is_admissible", "lebesgue_norm", "sobolev_norm", "spacetime_norm",
    "RandomizationSpec", "randomize", "randomize_dilated",
    "EvolveParams", "NumericalAbort", "Trajectory", "evolve_nls", "evolve_perturbed",
    "StepFunction", "vp_norm",
    "ExperimentConfig", "TailEstimate", "estimate_tail", "fit_subgaussian",
]
