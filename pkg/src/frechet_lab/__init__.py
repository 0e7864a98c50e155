"""Frechet means on spheres under rotationally symmetric measures.

Closed-form derivative tensors of the squared distance, the coefficient
integrals alpha_d and beta_d that decide classical versus smeary behaviour of
the mean, cap+strip densities with a smeary pole, and Monte Carlo checks of
the corresponding central limit theorems.
"""
from .clt import (
    CltConfig,
    InitPolicy,
    Regime,
    compare_to_limit,
    correction_classical,
    correction_smeary,
    fit_exponent,
    perturbation_map,
    run_scaling_experiment,
)
from .frechet import (
    EmpiricalSample,
    estimate_mean,
    frechet_value_symmetric,
    tangent_covariance,
)
from .radial import (
    Classification,
    RadialDensity,
    alpha_coefficient,
    beta_coefficient,
    classify,
    fourth_directional,
    normalize,
)
from .sampling import RadialSampler
from .smeary import design_smeary, solve_levels
from .sphere import CutLocusError, exp_map, geodesic_distance, log_map

__version__ = "0.1.0"
