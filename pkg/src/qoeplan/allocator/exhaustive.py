"""Brute-force optimum over a coarse epoch grid; the oracle for the GA."""

from __future__ import annotations

import numpy as np

from ..errors import GridTooLarge
from .problem import BUDGET_TOL, AllocationPlan, AllocationProblem, evaluate_allocation

MAX_GRID_VECTORS = 10**7
_CHUNK = 1 << 20
_TIE_TOL = 1e-12


def grid_points(problem: AllocationProblem, grid_step: int) -> np.ndarray:
    """``base, base + grid_step, ...`` up to ``max_epochs``, which is always included."""
    if grid_step < 1:
        raise ValueError(f"grid_step must be >= 1, got {grid_step}")
    pts = np.arange(problem.base_epochs, problem.max_epochs + 1, grid_step)
    if pts[-1] != problem.max_epochs:
        pts = np.append(pts, problem.max_epochs)
    return pts


def exhaustive_allocate(problem: AllocationProblem, grid_step: int = 50) -> AllocationPlan:
    """Best feasible epoch vector on the grid.

    Equal totals are resolved in favour of the lexicographically largest
    vector, so earlier models receive epochs first.
    """
    problem.require_feasible()
    pts = grid_points(problem, grid_step)
    n = len(problem.models)
    g = len(pts)
    count = g**n
    if count > MAX_GRID_VECTORS:
        raise GridTooLarge(f"{g}^{n} = {count} grid vectors exceeds {MAX_GRID_VECTORS}")

    cols = pts - problem.base_epochs
    values = problem.experience_table[:, cols]
    hours = problem.hours_per_epoch[:, None] * pts[None, :]
    limit = problem.budget_hours + BUDGET_TOL

    best_val = -np.inf
    best_flat = -1
    shape = (g,) * n
    for start in range(0, count, _CHUNK):
        flat = np.arange(start, min(start + _CHUNK, count))
        idx = np.unravel_index(flat, shape)
        total = np.zeros(len(flat))
        used = np.zeros(len(flat))
        for i in range(n):
            total += values[i, idx[i]]
            used += hours[i, idx[i]]
        total[used > limit] = -np.inf
        top = total.max()
        if top == -np.inf or top < best_val - _TIE_TOL:
            continue
        best_val = max(best_val, top)
        # enumeration runs in lexicographic order, so the last tie is the largest
        ties = np.flatnonzero(total >= best_val - _TIE_TOL)
        best_flat = int(flat[ties[-1]])

    epochs = [int(pts[k]) for k in np.unravel_index(best_flat, shape)]
    return evaluate_allocation(problem, epochs, method="exhaustive")
