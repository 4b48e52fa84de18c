"""Allocation problem instances, plan evaluation and forecast-extended curves."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Sequence

import numpy as np

from ..curve import DEFAULT_MAX_EPOCHS, ModelMeta, TrainingTrace, epoch_to_time
from ..errors import EpochOutOfRange, InfeasibleProblem, LengthMismatch
from ..predictor import FORECAST_METHODS, PredictorConfig, forecast_tail
from ..qoe import DEFAULT_SCALES, FactorVector, QoeScales, QoeWeights, model_experience

BUDGET_TOL = 1e-9
METHODS = ("ga", "random", "fcfs", "average", "exhaustive")


@dataclass(frozen=True)
class MetricCurve:
    """Per-epoch MAE/MSE for epochs ``1..len``: observed up to ``observed``, forecast after."""

    mae: np.ndarray
    mse: np.ndarray
    observed: int
    method: str = "observed"

    def __post_init__(self):
        if len(self.mae) != len(self.mse):
            raise LengthMismatch("mae and mse curves differ in length")
        for name in ("mae", "mse"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return len(self.mae)


def extend_trace(
    trace: TrainingTrace,
    max_epochs: int = DEFAULT_MAX_EPOCHS,
    method: str = "lstm",
    config: PredictorConfig | None = None,
) -> MetricCurve:
    """Observed MAE/MSE, continued by forecasts up to ``max_epochs``.

    MAE and MSE each get their own forecaster. A trace that already covers
    ``max_epochs`` is used as is.
    """
    n = len(trace)
    if n >= max_epochs:
        return MetricCurve(trace.mae[:max_epochs], trace.mse[:max_epochs], observed=max_epochs)
    if method not in FORECAST_METHODS:
        raise ValueError(f"unknown forecast method {method!r}")
    horizon = max_epochs - n
    mae_tail = forecast_tail(trace.mae, horizon, method, config).values
    mse_tail = forecast_tail(trace.mse, horizon, method, config).values
    return MetricCurve(
        np.concatenate([trace.mae, mae_tail]),
        np.concatenate([trace.mse, mse_tail]),
        observed=n,
        method=method,
    )


@dataclass(frozen=True)
class ModelEntry:
    meta: ModelMeta
    curve: MetricCurve
    weights: QoeWeights
    scales: QoeScales = DEFAULT_SCALES

    @property
    def name(self) -> str:
        return self.meta.name


@dataclass(frozen=True)
class AllocationProblem:
    models: tuple[ModelEntry, ...]
    budget_hours: float
    base_epochs: int = 500
    max_epochs: int = DEFAULT_MAX_EPOCHS
    epoch_step: int = 1

    def __post_init__(self):
        object.__setattr__(self, "models", tuple(self.models))
        if not self.models:
            raise ValueError("an allocation problem needs at least one model")
        if not 1 <= self.base_epochs <= self.max_epochs:
            raise ValueError(
                f"need 1 <= base_epochs <= max_epochs, got {self.base_epochs}, {self.max_epochs}"
            )
        if self.epoch_step < 1:
            raise ValueError(f"epoch_step must be >= 1, got {self.epoch_step}")
        for m in self.models:
            if len(m.curve) < self.max_epochs:
                raise EpochOutOfRange(
                    f"{m.name}: curve covers {len(m.curve)} epochs, need {self.max_epochs}"
                )

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(m.name for m in self.models)

    def hours(self, index: int, epochs: int) -> float:
        return epoch_to_time(self.models[index].meta, epochs, self.max_epochs)

    def total_hours(self, epochs: Sequence[int]) -> float:
        return math.fsum(self.hours(i, e) for i, e in enumerate(epochs))

    def fits(self, epochs: Sequence[int]) -> bool:
        return self.total_hours(epochs) <= self.budget_hours + BUDGET_TOL

    @property
    def min_budget_hours(self) -> float:
        return self.total_hours([self.base_epochs] * len(self.models))

    @property
    def max_budget_hours(self) -> float:
        return self.total_hours([self.max_epochs] * len(self.models))

    def require_feasible(self) -> None:
        if not self.fits([self.base_epochs] * len(self.models)):
            raise InfeasibleProblem(
                f"budget {self.budget_hours:g} h is below the {self.min_budget_hours:g} h "
                f"needed to train every model for {self.base_epochs} epochs",
                min_budget_hours=self.min_budget_hours,
            )

    def with_budget(self, budget_hours: float) -> "AllocationProblem":
        return replace(self, budget_hours=float(budget_hours))

    def with_weights(self, weights: QoeWeights) -> "AllocationProblem":
        return replace(self, models=tuple(replace(m, weights=weights) for m in self.models))

    @property
    def grid(self) -> np.ndarray:
        """Every epoch count from ``base_epochs`` to ``max_epochs``."""
        return np.arange(self.base_epochs, self.max_epochs + 1)

    @cached_property
    def experience_table(self) -> np.ndarray:
        """E_all of model ``i`` trained ``base_epochs + j`` epochs, at ``[i, j]``."""
        table = np.array(
            [
                [
                    model_experience(
                        m.curve, m.meta, int(e), m.weights, m.scales, self.max_epochs
                    )[1]
                    for e in self.grid
                ]
                for m in self.models
            ]
        )
        table.flags.writeable = False
        return table

    @cached_property
    def hours_per_epoch(self) -> np.ndarray:
        return np.array([m.meta.total_train_hours_at_max / self.max_epochs for m in self.models])


@dataclass(frozen=True)
class AllocationPlan:
    method: str
    seed: int | None
    budget_hours: float
    names: tuple[str, ...]
    epochs: tuple[int, ...]
    train_hours: tuple[float, ...]
    factors: tuple[FactorVector, ...]
    e_all: tuple[float, ...]
    total_experience: float
    feasible: bool

    @property
    def total_hours(self) -> float:
        return math.fsum(self.train_hours)

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "seed": self.seed,
            "budget_hours": self.budget_hours,
            "models": [
                {
                    "name": name,
                    "epochs": epochs,
                    "train_hours": hours,
                    "factors": factors.to_json(),
                    "e_all": e_all,
                }
                for name, epochs, hours, factors, e_all in zip(
                    self.names, self.epochs, self.train_hours, self.factors, self.e_all
                )
            ],
            "total_experience": self.total_experience,
            "feasible": self.feasible,
        }


def evaluate_allocation(
    problem: AllocationProblem,
    epochs: Sequence[int],
    method: str = "manual",
    seed: int | None = None,
) -> AllocationPlan:
    """Score a per-model epoch vector.

    Over-budget vectors are returned with ``feasible=False``, never repaired.
    """
    epochs = tuple(int(e) for e in epochs)
    if len(epochs) != len(problem.models):
        raise LengthMismatch(f"got {len(epochs)} epoch counts for {len(problem.models)} models")
    for name, e in zip(problem.names, epochs):
        if not problem.base_epochs <= e <= problem.max_epochs:
            raise EpochOutOfRange(
                f"{name}: {e} epochs outside [{problem.base_epochs}, {problem.max_epochs}]"
            )
    factors, values, hours = [], [], []
    for i, (m, e) in enumerate(zip(problem.models, epochs)):
        fv, e_all = model_experience(m.curve, m.meta, e, m.weights, m.scales, problem.max_epochs)
        factors.append(fv)
        values.append(e_all)
        hours.append(problem.hours(i, e))
    return AllocationPlan(
        method=method,
        seed=seed,
        budget_hours=problem.budget_hours,
        names=problem.names,
        epochs=epochs,
        train_hours=tuple(hours),
        factors=tuple(factors),
        e_all=tuple(values),
        total_experience=math.fsum(values),
        feasible=math.fsum(hours) <= problem.budget_hours + BUDGET_TOL,
    )
