"""Sequential prediction with eventually-almost-sure guarantees.

A library of predictor combinators and concrete predictors, seeded model
streams, a Monte Carlo harness with settle-rate acceptance checks, and
brute-force oracles for the small-instance bounds.
"""

__version__ = "0.1.0"

from .core import (BINARY, CLASS, NATURAL, PVECTOR, REAL, ConfigurationError,
                   ConstantPredictor, DegenerateEstimateError, HorizonExhausted,
                   LossEvaluator, ModelAttributes, PreconditionError, Prediction,
                   Predictor, Trajectory, cumulative_loss, last_error_time,
                   run_trajectory)
from .rng import SplitMix64, trial_seed

__all__ = [
    "BINARY", "CLASS", "NATURAL", "PVECTOR", "REAL",
    "ConfigurationError", "ConstantPredictor", "DegenerateEstimateError",
    "HorizonExhausted", "LossEvaluator", "ModelAttributes", "PreconditionError",
    "Prediction", "Predictor", "SplitMix64", "Trajectory",
    "cumulative_loss", "last_error_time", "run_trajectory", "trial_seed",
    "__version__",
]
