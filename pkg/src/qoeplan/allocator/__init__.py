"""Budget-constrained allocation of training epochs across models."""

from .baselines import average_allocate, fcfs_allocate, random_allocate
from .exhaustive import exhaustive_allocate, grid_points
from .ga import GaConfig, ga_allocate
from .problem import (
    BUDGET_TOL,
    METHODS,
    AllocationPlan,
    AllocationProblem,
    MetricCurve,
    ModelEntry,
    evaluate_allocation,
    extend_trace,
)
from .sweep import STOCHASTIC, SweepRow, mean_totals, run_method, sweep, sweep_csv

__all__ = [
    "BUDGET_TOL",
    "METHODS",
    "STOCHASTIC",
    "AllocationPlan",
    "AllocationProblem",
    "GaConfig",
    "MetricCurve",
    "ModelEntry",
    "SweepRow",
    "average_allocate",
    "evaluate_allocation",
    "exhaustive_allocate",
    "extend_trace",
    "fcfs_allocate",
    "ga_allocate",
    "grid_points",
    "mean_totals",
    "random_allocate",
    "run_method",
    "sweep",
    "sweep_csv",
]
