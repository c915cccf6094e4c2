"""Non-parametric stochastic sequential assignment.

Estimate the arrival rate and the mean shortage function from observed job
streams, derive the optimal threshold curves by ODE integration, and replay
and score threshold policies.
"""
from ._backend import BACKEND
from .arrival import (Constant, IntensityFunction, PiecewiseConstant, Realization, Scaled,
                      realization_rngs, simulate, simulate_many, simulate_scored)
from .core import (ConstantThresholds, CriticalCurveSet, GridCurves, ReplayResult,
                   derive_critical_curves, exact_curves, expected_reward, optimal_reward,
                   replay_policy)
from .estimators import (IntensityEstimate, MeanShortageCache, build_mean_shortage_cache, ecdf,
                         estimate_intensity, eval_mean_shortage, pooled_values)
from .ode import DenseSolution, SolverConfig, SolverError, solve_ivp
from .value_dist import Empirical, Exponential, Lomax, ValueDistribution

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "Constant", "ConstantThresholds", "CriticalCurveSet", "DenseSolution", "Empirical",
    "Exponential", "GridCurves", "IntensityEstimate", "IntensityFunction", "Lomax",
    "MeanShortageCache", "PiecewiseConstant", "Realization", "ReplayResult", "Scaled",
    "SolverConfig", "SolverError", "ValueDistribution", "build_mean_shortage_cache",
    "derive_critical_curves", "ecdf", "estimate_intensity", "eval_mean_shortage", "exact_curves",
    "expected_reward", "optimal_reward", "pooled_values", "realization_rngs", "replay_policy",
    "simulate", "simulate_many", "simulate_scored", "solve_ivp",
]
