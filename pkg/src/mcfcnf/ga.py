"""Genetic search over fixed-cost divisor arrays.

Each organism decodes to a flow by solving the scaled relaxation exactly, so
every candidate is a valid flow by construction and no repair step exists.
Fitness is the decoded flow's true cost (lower is fitter). Selection is
binary tournament with the incumbent best always retained; crossover splices
a random interval from one parent into the other; mutation nudges a few
entries by at most one, clamped to the configured floor.
"""
from __future__ import annotations

import math
import os
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Callable

import numpy as np

from . import exact
from .evaluate import FLOW_TOL, ScoredSolution, score
from .flowcore import (D_MIN, UNBOUNDED, FlowSolution, Infeasible, Organism,
                       build_expanded_network, solve_min_cost_flow)
from .instance import validate

if TYPE_CHECKING:
    from .instance import Instance

_Member = tuple[Organism, ScoredSolution]


@dataclass(frozen=True)
class GAConfig:
    """Run parameters. Exactly one stop rule is required: a wall-clock
    time_limit (evolution gets 4/5, polishing 1/5) and/or an iteration_limit
    for bit-reproducible runs. polish_budget overrides the polish stage's
    share when only an iteration_limit is set (default: a quarter of the
    evolution wall time, i.e. one fifth of the whole run)."""

    population_size: int = 10
    crossover_probability: float = 0.5
    mutation_probability: float = 0.5
    time_limit: float | None = None
    iteration_limit: int | None = None
    seed: int = 0
    d_min: float = D_MIN
    polish_budget: float | None = None

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be at least 2")
        for name in ("crossover_probability", "mutation_probability"):
            p = getattr(self, name)
            if not 0 <= p <= 1:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.time_limit is None and self.iteration_limit is None:
            raise ValueError("set time_limit and/or iteration_limit")
        if self.time_limit is not None and not self.time_limit > 0:
            raise ValueError("time_limit must be positive")
        if self.iteration_limit is not None and self.iteration_limit < 0:
            raise ValueError("iteration_limit must be nonnegative")
        if self.d_min < D_MIN:
            raise ValueError(f"d_min must be at least the global floor {D_MIN}")


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    elapsed_s: float
    best_cost: float
    mean_cost: float
    lp_solves: int


@dataclass(frozen=True, eq=False)
class RunResult:
    best: ScoredSolution
    best_organism: Organism
    history: tuple[IterationRecord, ...]
    polished: ScoredSolution


def _mean_fixed_cost(instance: Instance) -> float:
    finite = instance.fixed_cost[instance.available]
    mean = float(finite.mean()) if finite.size else 0.0
    return mean if mean > 0 else 1.0


def fitness(instance: Instance, organism: Organism) -> ScoredSolution:
    """Decode the organism via the exact relaxation solve and score the
    resulting flow at true cost. Lower cost means fitter."""
    flow = solve_min_cost_flow(build_expanded_network(instance, organism))
    return score(instance, flow)


def init_population(instance: Instance, config: GAConfig, rng: random.Random) -> list[Organism]:
    """Seed organism (divisors equal to the class capacities) plus uniformly
    random organisms with entries in [d_min, mean fixed cost]."""
    shape = (instance.n_edges, instance.n_capacities)
    seed_scale = np.broadcast_to(np.maximum(instance.capacities, config.d_min), shape)
    population = [Organism(scale=seed_scale.copy())]
    upper = max(_mean_fixed_cost(instance), config.d_min)
    for _ in range(config.population_size - 1):
        entries = [rng.uniform(config.d_min, upper) for _ in range(shape[0] * shape[1])]
        population.append(Organism(scale=np.array(entries).reshape(shape)))
    return population


def tournament_select(population: list[_Member], target_size: int,
                      rng: random.Random) -> list[_Member]:
    """Shrink the pool by repeated binary tournaments: two distinct members
    are drawn, the less fit is dropped. Ties go to the lower index, so the
    incumbent best can never lose and always survives."""
    if not 1 <= target_size <= len(population):
        raise ValueError(f"target_size {target_size} out of range for "
                         f"population of {len(population)}")
    pool = list(population)
    while len(pool) > target_size:
        i, j = rng.sample(range(len(pool)), 2)
        loser = max(i, j, key=lambda idx: (pool[idx][1].true_cost, idx))
        del pool[loser]
    return pool


def _tournament_pick(population: list[_Member], rng: random.Random) -> Organism:
    i, j = rng.sample(range(len(population)), 2)
    winner = min(i, j, key=lambda idx: (population[idx][1].true_cost, idx))
    return population[winner][0]


def crossover(parent_a: Organism, parent_b: Organism, rng: random.Random) -> Organism:
    """Child takes a random interval [lo, hi) from the first parent and the
    rest from the second (both drawn over the flattened array)."""
    if parent_a.scale.shape != parent_b.scale.shape:
        raise ValueError(f"parent shapes differ: {parent_a.scale.shape} "
                         f"vs {parent_b.scale.shape}")
    length = parent_a.scale.size
    lo, hi = sorted((rng.randint(0, length), rng.randint(0, length)))
    child = parent_b.scale.reshape(-1).copy()
    child[lo:hi] = parent_a.scale.reshape(-1)[lo:hi]
    return Organism(scale=child.reshape(parent_a.scale.shape))


def mutate(instance: Instance, organism: Organism, rng: random.Random,
           config: GAConfig) -> Organism:
    """Nudge a few entries (between 1 and a tenth of the array) up or down
    by a uniform amount below one, clamped to the d_min floor. Unbounded
    entries are reset to the mean fixed cost before the nudge."""
    scale = organism.scale.reshape(-1).copy()
    length = scale.size
    count = rng.randint(1, max(1, length // 10))
    positions = rng.sample(range(length), count)
    reset = max(_mean_fixed_cost(instance), config.d_min)
    for pos in positions:
        value = scale[pos]
        if math.isinf(value):
            value = reset
        step = rng.uniform(0.0, 1.0)
        if rng.random() < 0.5:
            step = -step
        scale[pos] = max(config.d_min, value + step)
    return Organism(scale=scale.reshape(organism.scale.shape))


def theorem_d(instance: Instance, optimal_flow: FlowSolution) -> Organism:
    """Divisors that make the relaxation reproduce a given optimal flow:
    unbounded on carrying pairs (fixed cost vanishes), floor elsewhere
    (fixed cost prohibitive)."""
    shape = (instance.n_edges, instance.n_capacities)
    if optimal_flow.flow.shape != shape:
        raise ValueError(f"flow shape {optimal_flow.flow.shape} does not match "
                         f"instance (edges, capacities) {shape}")
    scale = np.where(optimal_flow.flow > FLOW_TOL, UNBOUNDED, D_MIN)
    return Organism(scale=scale)


def _worker_count() -> int:
    raw = os.environ.get("MCFCNF_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"MCFCNF_THREADS must be an integer, got {raw!r}") from None
    # decoding is pure CPU-bound Python, so auto means single-threaded
    return n if n > 0 else 1


def _evaluate_all(instance: Instance, organisms: list[Organism],
                  listener: Callable[[ScoredSolution], None] | None) -> list[ScoredSolution]:
    workers = _worker_count()
    if workers > 1 and len(organisms) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            scored = list(pool.map(lambda o: fitness(instance, o), organisms))
    else:
        scored = [fitness(instance, o) for o in organisms]
    if listener is not None:
        for s in scored:
            listener(s)
    return scored


def evolve(instance: Instance, config: GAConfig,
           fitness_listener: Callable[[ScoredSolution], None] | None = None) -> RunResult:
    """Run the full search: seeded initialization, tournament-driven
    crossover and mutation under elitist selection, then exact polishing of
    the best flow on the remaining time share.

    Randomness is consumed in a fixed documented order (initial entries,
    then per child: two parent tournaments, the crossover interval, the
    mutation coin and its draws, then the selection tournaments), so runs
    with an iteration_limit replay bit-identically per seed.
    """
    problems = validate(instance)
    if problems:
        raise Infeasible("; ".join(problems))

    rng = random.Random(config.seed)
    start = time.perf_counter()
    evolution_budget = 0.8 * config.time_limit if config.time_limit is not None else math.inf
    iteration_limit = config.iteration_limit if config.iteration_limit is not None else math.inf

    organisms = init_population(instance, config, rng)
    scored = _evaluate_all(instance, organisms, fitness_listener)
    population: list[_Member] = list(zip(organisms, scored))
    lp_solves = len(population)

    def best_member() -> _Member:
        return min(population, key=lambda member: member[1].true_cost)

    def record(iteration: int) -> IterationRecord:
        costs = [member[1].true_cost for member in population]
        return IterationRecord(
            iteration=iteration,
            elapsed_s=time.perf_counter() - start,
            best_cost=min(costs),
            mean_cost=sum(costs) / len(costs),
            lp_solves=lp_solves,
        )

    history = [record(0)]
    n_children = math.ceil(config.crossover_probability * config.population_size)
    iteration = 0
    while iteration < iteration_limit and n_children > 0:
        if time.perf_counter() - start >= evolution_budget:
            break
        iteration += 1
        children = []
        for _ in range(n_children):
            parent_a = _tournament_pick(population, rng)
            parent_b = _tournament_pick(population, rng)
            child = crossover(parent_a, parent_b, rng)
            if rng.random() < config.mutation_probability:
                child = mutate(instance, child, rng, config)
            children.append(child)
        child_scores = _evaluate_all(instance, children, fitness_listener)
        lp_solves += len(children)
        population = population + list(zip(children, child_scores))
        population = tournament_select(population, config.population_size, rng)
        history.append(record(iteration))

    best_organism, best_scored = best_member()
    elapsed = time.perf_counter() - start
    if config.time_limit is not None:
        polish_budget = 0.2 * config.time_limit
    elif config.polish_budget is not None:
        polish_budget = config.polish_budget
    else:
        polish_budget = elapsed / 4.0
    polished = exact.polish(instance, best_scored, polish_budget)
    return RunResult(best=best_scored, best_organism=best_organism,
                     history=tuple(history), polished=polished)


def write_convergence_csv(path, history) -> None:
    lines = ["iteration,elapsed_s,best_cost,mean_cost,lp_solves"]
    for rec in history:
        lines.append(f"{rec.iteration},{rec.elapsed_s:.6f},{rec.best_cost!r},"
                     f"{rec.mean_cost!r},{rec.lp_solves}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
