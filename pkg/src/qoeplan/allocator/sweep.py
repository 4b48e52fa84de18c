"""Budget x method grids of allocation runs, flattened to tidy rows."""

from __future__ import annotations

import csv
import io
import math
from collections import defaultdict
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from ..errors import QoePlanError
from .baselines import average_allocate, fcfs_allocate, random_allocate
from .exhaustive import exhaustive_allocate
from .ga import GaConfig, ga_allocate
from .problem import METHODS, AllocationPlan, AllocationProblem

STOCHASTIC = frozenset({"ga", "random"})


def run_method(
    problem: AllocationProblem,
    method: str,
    seed: int = 0,
    ga_config: GaConfig | None = None,
    grid_step: int = 50,
) -> AllocationPlan:
    if method == "ga":
        return ga_allocate(problem, replace(ga_config or GaConfig(), seed=seed))
    if method == "random":
        return random_allocate(problem, seed)
    if method == "fcfs":
        return fcfs_allocate(problem)
    if method == "average":
        return average_allocate(problem)
    if method == "exhaustive":
        return exhaustive_allocate(problem, grid_step)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


@dataclass(frozen=True)
class SweepRow:
    budget_hours: float
    method: str
    seed: int | None
    status: str = "ok"
    plan: AllocationPlan | None = None
    w_variant: str | None = None
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def total_experience(self) -> float | None:
        return None if self.plan is None else self.plan.total_experience


def sweep(
    template: AllocationProblem,
    budgets: Iterable[float],
    methods: Sequence[str],
    seeds: Sequence[int] = (0,),
    ga_config: GaConfig | None = None,
    grid_step: int = 50,
    w_variant: str | None = None,
) -> list[SweepRow]:
    """Run every (budget, method) cell; stochastic methods once per seed.

    A cell that raises a planner error becomes a row whose ``status`` is the
    error class name; the sweep itself never aborts.
    """
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}; expected one of {METHODS}")
    rows = []
    for budget in budgets:
        problem = template.with_budget(budget)
        for method in methods:
            for seed in seeds if method in STOCHASTIC else (None,):
                try:
                    plan = run_method(problem, method, seed or 0, ga_config, grid_step)
                    rows.append(SweepRow(float(budget), method, seed, "ok", plan, w_variant))
                except QoePlanError as exc:
                    rows.append(
                        SweepRow(float(budget), method, seed, type(exc).__name__, None,
                                 w_variant, str(exc))
                    )
    return rows


def mean_totals(rows: Iterable[SweepRow]) -> dict[tuple, float]:
    """Mean total experience per (w_variant, budget, method) over successful rows."""
    groups = defaultdict(list)
    for r in rows:
        if r.ok:
            groups[(r.w_variant, r.budget_hours, r.method)].append(r.total_experience)
    return {k: math.fsum(v) / len(v) for k, v in groups.items()}


def sweep_csv(rows: Sequence[SweepRow], names: Sequence[str]) -> str:
    with_variant = any(r.w_variant is not None for r in rows)
    header = ["budget_hours", "method", "seed", "total_experience"]
    header += [f"{n}_epochs" for n in names]
    header.append("status")
    if with_variant:
        header.append("w_variant")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for r in rows:
        line = [repr(r.budget_hours), r.method, "" if r.seed is None else r.seed]
        if r.plan is None:
            line += [""] + [""] * len(names)
        else:
            line += [repr(r.plan.total_experience)] + list(r.plan.epochs)
        line.append(r.status)
        if with_variant:
            line.append(r.w_variant or "")
        writer.writerow(line)
    return buf.getvalue()
