"""Semilinear time-fractional diffusion-wave equations on Dirichlet boxes.

The main entry points are:

* ``ml``: the two-parameter Mittag-Leffler function.
* ``build_domain``: spectral discretization of the Dirichlet Laplacian.
* ``multipliers`` and ``apply``: the E, S and R solution families.
* ``solve``: mild solutions by product integration and Picard iteration.
* ``fracwave.harness``: the numerical experiments.
"""
from .gamma import gamma, log_gamma, rgamma
from .mittag_leffler import MLParams, MittagLefflerError, ml, ml_contour, ml_series
from .operators import FamilyKind, apply, multipliers, operator_norm, subordination_residual, symbol_inversion
from .spectral import (
    DomainSpec,
    SpectralDomain,
    SpectralField,
    admissibility,
    build_domain,
    fractional_norm,
    inverse_transform,
    lq_norm,
    mode_field,
    transform,
    zero_field,
)
from .volterra import (
    NonlinearitySpec,
    SolverConfig,
    Trajectory,
    continue_trajectory,
    convolution_weights,
    detect_blowup,
    solve,
    solve_picard_global,
)

__version__ = "0.1.0"

__all__ = [
    "gamma", "log_gamma", "rgamma", "MLParams", "MittagLefflerError", "ml", "ml_contour", "ml_series",
    "FamilyKind", "apply", "multipliers", "operator_norm", "subordination_residual", "symbol_inversion",
    "DomainSpec", "SpectralDomain", "SpectralField", "admissibility", "build_domain", "fractional_norm",
    "inverse_transform", "lq_norm", "mode_field", "transform", "zero_field", "NonlinearitySpec", "SolverConfig", "Trajectory",
    "continue_trajectory", "convolution_weights", "detect_blowup", "solve", "solve_picard_global",
]
