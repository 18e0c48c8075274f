"""Genetic search for a better positive descriptor of a category.

A candidate vector is scored by its mean similarity to a sample of queries,
minus the category's negative descriptor similarity to the same queries.
Chromosomes are real-valued over the union of the features present in the
category and the sample.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, replace

import numpy as np

from .exceptions import DomainError, EmptyEvaluationSetError
from .profile import Category
from .vector import QueryVector, cosine


@dataclass(frozen=True)
class Individual:
    chromosome: QueryVector
    fitness: float


@dataclass(frozen=True)
class EvaluationSet:
    queries: tuple[QueryVector, ...]

    def __post_init__(self):
        object.__setattr__(self, "queries", tuple(self.queries))

    @property
    def m(self) -> int:
        return len(self.queries)


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 20
    generations: int = 50
    crossover_rate: float = 0.9
    mutation_sigma: float = 0.1
    mutation_rate: float = 0.1
    elitism: int = 1
    tournament_size: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 1:
            raise DomainError("population_size must be >= 1")
        if self.generations < 0:
            raise DomainError("generations must be >= 0")
        if not 1 <= self.elitism <= self.population_size:
            raise DomainError("elitism must lie in [1, population_size]")
        if self.tournament_size < 2:
            raise DomainError("tournament_size must be >= 2")
        for name in ("crossover_rate", "mutation_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1]")
        if self.mutation_sigma < 0:
            raise DomainError("mutation_sigma must be nonnegative")
        if self.seed < 0:
            raise DomainError("seed must be nonnegative")


def phi(c: Category, d: QueryVector) -> float:
    return cosine(c.desc_pos, d) - cosine(c.desc_neg, d)


def fitness(candidate: QueryVector, c: Category, s: EvaluationSet) -> float:
    """Mean over the sample of ``cos(candidate, d) - cos(desc_neg, d)``."""
    if s.m < 1:
        raise EmptyEvaluationSetError("evaluation set is empty")
    terms = [cosine(candidate, d) - cosine(c.desc_neg, d) for d in s.queries]
    return math.fsum(terms) / s.m


def crossover(a: QueryVector, b: QueryVector, mix: float) -> QueryVector:
    if not 0.0 <= mix <= 1.0:
        raise DomainError(f"mix must lie in [0, 1], got {mix}")
    keys = set(a) | set(b)
    return QueryVector({k: mix * a.get(k) + (1.0 - mix) * b.get(k) for k in keys})


def mutate(v: QueryVector, cfg: GaConfig, rng: np.random.Generator,
           support: Iterable[int] | None = None) -> QueryVector:
    """Gaussian perturbation of each component with probability ``mutation_rate``.

    ``support`` widens the set of mutable components beyond the nonzero ones.
    Results are clamped at zero.
    """
    keys = sorted(set(v) | set(support or ()))
    out = {}
    for k in keys:
        value = v.get(k)
        # draws happen for every component so the stream layout is fixed
        flip = rng.random()
        noise = rng.normal(0.0, 1.0)
        if flip < cfg.mutation_rate:
            value += cfg.mutation_sigma * noise
        out[k] = max(value, 0.0)
    return QueryVector(out)


def _stream(seed: int, generation: int, slot: int) -> np.random.Generator:
    return np.random.default_rng([seed, generation, slot])


def _tournament(pop: Sequence[Individual], size: int, rng: np.random.Generator) -> Individual:
    picks = rng.integers(0, len(pop), size=size)
    # population is sorted by fitness, so the lowest slot is the winner
    return pop[int(picks.min())]


def run_ga(c: Category, s: EvaluationSet, cfg: GaConfig) -> tuple[Individual, list[float]]:
    """Evolve and return the best individual ever seen and per-generation best."""
    if s.m < 1:
        raise EmptyEvaluationSetError("evaluation set is empty")
    support = sorted(set(c.desc_pos).union(*(set(d) for d in s.queries)))

    def evaluate(v: QueryVector) -> Individual:
        return Individual(v, fitness(v, c, s))

    population = [evaluate(c.desc_pos)]
    for slot in range(1, cfg.population_size):
        clone = mutate(c.desc_pos, replace(cfg, mutation_rate=1.0), _stream(cfg.seed, 0, slot), support)
        population.append(evaluate(clone))
    population.sort(key=lambda ind: -ind.fitness)
    best = population[0]
    history = [best.fitness]

    for gen in range(1, cfg.generations + 1):
        offspring = list(population[:cfg.elitism])
        for slot in range(cfg.elitism, cfg.population_size):
            rng = _stream(cfg.seed, gen, slot)
            a = _tournament(population, cfg.tournament_size, rng)
            if rng.random() < cfg.crossover_rate:
                b = _tournament(population, cfg.tournament_size, rng)
                child = crossover(a.chromosome, b.chromosome, float(rng.random()))
            else:
                child = a.chromosome
            offspring.append(evaluate(mutate(child, cfg, rng, support)))
        # stable sort keeps elites ahead of equally fit newcomers
        offspring.sort(key=lambda ind: -ind.fitness)
        population = offspring
        if population[0].fitness > best.fitness:
            best = population[0]
        history.append(population[0].fitness)
    return best, history


def evolve(c: Category, s: EvaluationSet, cfg: GaConfig = GaConfig()) -> Individual:
    return run_ga(c, s, cfg)[0]
