"""Genetic search over binary-encoded epoch allocations.

A chromosome concatenates one ``bits_per_gene`` gene per model, most
significant bit first. Gene value ``g`` decodes to
``base_epochs + g * epoch_step``, clamped at ``max_epochs``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .baselines import average_allocate, fcfs_allocate, random_allocate
from .problem import BUDGET_TOL, AllocationPlan, AllocationProblem, evaluate_allocation


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 64
    generations: int = 200
    crossover_rate: float = 0.9
    mutation_rate: float = 0.02
    bits_per_gene: int | None = None  # None: fewest bits covering the epoch range
    elitism_count: int = 2
    tournament_size: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        for name in ("crossover_rate", "mutation_rate"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.bits_per_gene is not None and self.bits_per_gene < 1:
            raise ValueError("bits_per_gene must be positive")
        if not 0 <= self.elitism_count < self.population_size:
            raise ValueError("elitism_count must be in [0, population_size)")
        if self.tournament_size < 1:
            raise ValueError("tournament_size must be >= 1")


def gene_levels(problem: AllocationProblem) -> int:
    """Number of distinct epoch counts a gene must be able to express."""
    return math.ceil((problem.max_epochs - problem.base_epochs) / problem.epoch_step) + 1


def resolve_bits(problem: AllocationProblem, config: GaConfig) -> int:
    levels = gene_levels(problem)
    needed = max(1, math.ceil(math.log2(levels)))
    bits = config.bits_per_gene or needed
    if 2**bits < levels:
        raise ValueError(f"bits_per_gene={bits} cannot encode {levels} epoch levels")
    return bits


class _Codec:
    def __init__(self, problem: AllocationProblem, bits: int):
        self.problem = problem
        self.bits = bits
        self.n = len(problem.models)
        self.weights = 1 << np.arange(bits - 1, -1, -1)

    def decode(self, pop: np.ndarray) -> np.ndarray:
        p = self.problem
        genes = pop.reshape(len(pop), self.n, self.bits).astype(np.int64) @ self.weights
        return np.minimum(p.base_epochs + genes * p.epoch_step, p.max_epochs)

    def encode(self, epochs) -> np.ndarray:
        p = self.problem
        genes = [math.ceil((e - p.base_epochs) / p.epoch_step) for e in epochs]
        bits = [(g >> np.arange(self.bits - 1, -1, -1)) & 1 for g in genes]
        return np.concatenate(bits).astype(bool)


def _fitness(problem: AllocationProblem, epochs: np.ndarray) -> np.ndarray:
    """Total experience when feasible; minus the overrun in hours otherwise.

    Every feasible total is positive, so any infeasible individual ranks
    below every feasible one.
    """
    table = problem.experience_table
    cols = epochs - problem.base_epochs
    total = table[np.arange(len(problem.models))[None, :], cols].sum(axis=1)
    used = (epochs * problem.hours_per_epoch[None, :]).sum(axis=1)
    over = used - problem.budget_hours
    return np.where(over <= BUDGET_TOL, total, -over)


def _seed_population(problem, config, codec, rng) -> np.ndarray:
    seeds = [
        fcfs_allocate(problem).epochs,
        average_allocate(problem).epochs,
        random_allocate(problem, config.seed).epochs,
        (problem.base_epochs,) * len(problem.models),
    ]
    length = codec.n * codec.bits
    pop = rng.random((config.population_size, length)) < 0.5
    for k, epochs in enumerate(seeds[: config.population_size]):
        pop[k] = codec.encode(epochs)
    return pop


def ga_allocate(problem: AllocationProblem, config: GaConfig = GaConfig()) -> AllocationPlan:
    """Search allocations with a generational GA.

    The initial population holds the FCFS, equal-share and random baseline
    plans plus the all-base plan; the rest is uniform random bits. Each
    generation keeps the ``elitism_count`` fittest individuals and fills the
    rest with size-``tournament_size`` tournament winners, recombined by
    single-point crossover and flipped bit by bit. All random draws for a
    generation are taken up front from one stream seeded by ``config.seed``.
    """
    problem.require_feasible()
    bits = resolve_bits(problem, config)
    codec = _Codec(problem, bits)
    rng = np.random.default_rng(config.seed)
    P = config.population_size
    L = codec.n * bits
    n_children = P - config.elitism_count
    n_pairs = (n_children + 1) // 2

    pop = _seed_population(problem, config, codec, rng)
    fit = _fitness(problem, codec.decode(pop))
    best = pop[int(np.argmax(fit))].copy()
    best_fit = float(fit.max())

    for _ in range(config.generations):
        contenders = rng.integers(P, size=(2 * n_pairs, config.tournament_size))
        do_cross = rng.random(n_pairs) < config.crossover_rate
        cut = rng.integers(1, L, size=n_pairs) if L > 1 else np.ones(n_pairs, dtype=int)
        flips = rng.random((2 * n_pairs, L)) < config.mutation_rate

        order = np.argsort(-fit, kind="stable")
        elites = pop[order[: config.elitism_count]]

        winners = contenders[np.arange(len(contenders)), np.argmax(fit[contenders], axis=1)]
        parents = pop[winners].reshape(n_pairs, 2, L)
        children = parents.copy()
        positions = np.arange(L)[None, :]
        tail = do_cross[:, None] & (positions >= cut[:, None])
        children[:, 0][tail] = parents[:, 1][tail]
        children[:, 1][tail] = parents[:, 0][tail]
        children = children.reshape(2 * n_pairs, L) ^ flips

        pop = np.concatenate([elites, children[:n_children]])
        fit = _fitness(problem, codec.decode(pop))
        top = int(np.argmax(fit))
        if fit[top] > best_fit:
            best_fit = float(fit[top])
            best = pop[top].copy()

    epochs = codec.decode(best[None, :])[0]
    return evaluate_allocation(problem, epochs, method="ga", seed=config.seed)
