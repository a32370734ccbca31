"""Second-order comparison of estimators by their number of eps-misses."""

from .ard import (
    ArdValue,
    TransformSpec,
    argmin_c,
    binomial_risk,
    denominator_zoo,
    hl_deficiency,
    lambda0,
    lambda0_squared_mean,
    lambda0_transformed,
    lambda_a,
)
from .dist import MomentSpec, generator_spec, stream_seed
from .mc import ExperimentPlan, McEstimate, run_ard_experiment
from .qsim import QConfig, ShrinkMean, SquaredMean, Transformed, VarianceDenom, count_q

__version__ = "0.1.0"

__all__ = [
    "ArdValue",
    "ExperimentPlan",
    "McEstimate",
    "MomentSpec",
    "QConfig",
    "ShrinkMean",
    "SquaredMean",
    "TransformSpec",
    "Transformed",
    "VarianceDenom",
    "argmin_c",
    "binomial_risk",
    "count_q",
    "denominator_zoo",
    "generator_spec",
    "hl_deficiency",
    "lambda0",
    "lambda0_squared_mean",
    "lambda0_transformed",
    "lambda_a",
    "run_ard_experiment",
    "stream_seed",
]
