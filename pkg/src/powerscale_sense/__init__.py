"""Power-scaling prior and likelihood sensitivity analysis from posterior draws."""

from .divergence import cjs, cjs_dist, d_cjs
from .draws import (
    DrawsMatrix,
    Quantity,
    WeightedECDF,
    effective_sample_size,
    validate_draws,
    weighted_ecdf,
    weighted_moments,
    weighted_quantile,
)
from .errors import PowerscaleError
from .io import read_draws, write_draws
from .moment_match import Evaluation, MomentMatchResult, moment_match
from .powerscale import AlphaGrid, PowerScaleSpec, alpha_grid, importance_resample, log_weights, whiten
from .psis import SmoothedWeights, fit_gpd_tail, psis_smooth
from .sensitivity import (
    Diagnosis,
    SensitivityRecord,
    diagnose,
    perturb,
    powerscale_sensitivity,
    powerscale_sequence,
    quantity_sensitivity,
)

__version__ = "0.1.0"

__all__ = [
    "AlphaGrid",
    "Diagnosis",
    "DrawsMatrix",
    "Evaluation",
    "MomentMatchResult",
    "PowerScaleSpec",
    "PowerscaleError",
    "Quantity",
    "SensitivityRecord",
    "SmoothedWeights",
    "WeightedECDF",
    "alpha_grid",
    "cjs",
    "cjs_dist",
    "d_cjs",
    "diagnose",
    "effective_sample_size",
    "fit_gpd_tail",
    "importance_resample",
    "log_weights",
    "moment_match",
    "perturb",
    "powerscale_sensitivity",
    "powerscale_sequence",
    "psis_smooth",
    "quantity_sensitivity",
    "read_draws",
    "validate_draws",
    "weighted_ecdf",
    "weighted_moments",
    "weighted_quantile",
    "whiten",
    "write_draws",
]
