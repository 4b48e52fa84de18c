"""Reference allocators: random top-ups, first-come-first-served, equal time shares.

All three start every model at ``base_epochs`` and only distribute the
remaining budget.
"""

from __future__ import annotations

import math

import numpy as np

from .problem import AllocationPlan, AllocationProblem, evaluate_allocation

_FLOOR_EPS = 1e-9


def _next(problem: AllocationProblem, epochs: int) -> int:
    return min(epochs + problem.epoch_step, problem.max_epochs)


def random_allocate(problem: AllocationProblem, seed: int = 0) -> AllocationPlan:
    """Grant one ``epoch_step`` at a time to a uniformly chosen model that can still take it."""
    problem.require_feasible()
    rng = np.random.default_rng(seed)
    epochs = [problem.base_epochs] * len(problem.models)
    while True:
        candidates = []
        for i, e in enumerate(epochs):
            if e >= problem.max_epochs:
                continue
            trial = list(epochs)
            trial[i] = _next(problem, e)
            if problem.fits(trial):
                candidates.append(i)
        if not candidates:
            break
        pick = candidates[int(rng.integers(len(candidates)))]
        epochs[pick] = _next(problem, epochs[pick])
    return evaluate_allocation(problem, epochs, method="random", seed=seed)


def _largest_fitting(problem: AllocationProblem, epochs: list[int], i: int, cap: int) -> int:
    """Largest epoch count for model ``i`` on its step grid, at most ``cap``, within budget."""
    used = problem.total_hours(epochs) - problem.hours(i, epochs[i])
    spare = problem.budget_hours - used
    per_step = problem.hours_per_epoch[i] * problem.epoch_step
    steps = math.floor((spare - problem.hours(i, epochs[i])) / per_step + _FLOOR_EPS)
    target = min(cap, epochs[i] + max(steps, 0) * problem.epoch_step)
    trial = list(epochs)
    trial[i] = target
    while target > epochs[i] and not problem.fits(trial):
        target = max(epochs[i], target - problem.epoch_step)
        trial[i] = target
    return target


def fcfs_allocate(problem: AllocationProblem) -> AllocationPlan:
    """Fill models to ``max_epochs`` in their declared order until the budget runs out."""
    problem.require_feasible()
    epochs = [problem.base_epochs] * len(problem.models)
    for i in range(len(epochs)):
        epochs[i] = _largest_fitting(problem, epochs, i, problem.max_epochs)
    return evaluate_allocation(problem, epochs, method="fcfs")


def average_allocate(problem: AllocationProblem) -> AllocationPlan:
    """Split the spare budget into equal time shares, one per model.

    Each share is converted to whole ``epoch_step`` blocks at that model's
    per-epoch cost and capped at ``max_epochs``; what a capped model cannot
    use stays unspent.
    """
    problem.require_feasible()
    n = len(problem.models)
    share = (problem.budget_hours - problem.min_budget_hours) / n
    epochs = []
    for i in range(n):
        per_step = problem.hours_per_epoch[i] * problem.epoch_step
        steps = max(math.floor(share / per_step + _FLOOR_EPS), 0)
        epochs.append(min(problem.max_epochs, problem.base_epochs + steps * problem.epoch_step))
    # float slack from the floor tolerance: back off the last model that moved
    i = n - 1
    while not problem.fits(epochs) and i >= 0:
        if epochs[i] > problem.base_epochs:
            epochs[i] = max(problem.base_epochs, epochs[i] - problem.epoch_step)
        else:
            i -= 1
    return evaluate_allocation(problem, epochs, method="average")
