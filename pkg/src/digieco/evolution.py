"""Per-request genetic algorithm over variable-length agent sequences.

Fitness of a sequence ``A`` against a request ``R`` is ``1 / (1 + D)`` where
``D`` sums, over every required attribute, the distance to the closest
attribute carried by any agent of ``A``.  Selection is fitness-proportional
and non-elitist, with a parsimony penalty on longer-than-average sequences.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import chain
from typing import Sequence

import numpy as np

from . import kernels
from .model import Agent, AgentSequence, Request, RngStream


@dataclass(frozen=True)
class GaConfig:
    crossover_fraction: float = 0.10
    mutation_fraction: float = 0.10
    parsimony_alpha: float = 0.05
    pop_base: int = 20
    pop_slope: float = 5.0
    pop_cap: int = 200
    max_generations: int = 100
    stagnation_window: int = 15

    def __post_init__(self):
        for name in ("crossover_fraction", "mutation_fraction"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if self.pop_base < 2:
            raise ValueError("pop_base must be at least 2")
        if self.pop_cap < self.pop_base:
            raise ValueError("pop_cap must be >= pop_base")
        if self.max_generations < 1:
            raise ValueError("max_generations must be at least 1")
        if self.stagnation_window < 1:
            raise ValueError("stagnation_window must be at least 1")
        if self.parsimony_alpha < 0 or self.pop_slope < 0:
            raise ValueError("parsimony_alpha and pop_slope must be non-negative")


@dataclass(frozen=True)
class EvolutionResult:
    best_sequence: AgentSequence
    best_raw_fitness: float
    generations_run: int
    evaluations_used: int


def sequence_distance(seq: AgentSequence | Sequence[Agent], request: Request) -> int:
    """Total distance ``D`` between a sequence and the flattened request."""
    agents = list(dict.fromkeys(seq))
    offsets, values = kernels.pack_attributes(agents)
    required = np.array(request.flat, dtype=np.int64)
    table = kernels.agent_distance_table(offsets, values, required)
    return int(table.min(axis=0).sum())


def fitness(seq: AgentSequence | Sequence[Agent], request: Request) -> float:
    return 1.0 / (1.0 + sequence_distance(seq, request))


def adjusted_fitness(raw, length, mean_length, alpha):
    """Parsimony-penalised fitness; works elementwise on arrays.

    Sequences no longer than the mean keep their raw fitness, longer ones are
    divided by ``1 + alpha * (length - mean_length)``.
    """
    excess = np.maximum(np.asarray(length, dtype=float) - mean_length, 0.0)
    out = np.asarray(raw, dtype=float) / (1.0 + alpha * excess)
    return float(out) if out.ndim == 0 else out


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def population_size(mean_seed_length: float, cfg: GaConfig) -> int:
    return min(cfg.pop_cap, cfg.pop_base + _round_half_up(cfg.pop_slope * mean_seed_length))


def _select_indices(weights: np.ndarray, target_size: int, rng: RngStream) -> np.ndarray:
    cum = np.cumsum(weights)
    total = cum[-1]
    assert total > 0, "fitness-proportional selection needs positive total fitness"
    picks = np.searchsorted(cum, rng.random(target_size) * total, side="right")
    return np.minimum(picks, len(weights) - 1)


def select_next_generation(scored, target_size: int, rng: RngStream) -> list:
    """Roulette-wheel draw of ``target_size`` individuals, with replacement."""
    individuals = [ind for ind, _ in scored]
    weights = np.array([f for _, f in scored], dtype=float)
    return [individuals[i] for i in _select_indices(weights, target_size, rng)]


def _swap_tails(p1: tuple, p2: tuple, c1: int, c2: int) -> tuple[tuple, tuple]:
    return p1[:c1] + p2[c2:], p2[:c2] + p1[c1:]


def _crossover(p1: tuple, p2: tuple, rng: RngStream) -> tuple[tuple, tuple]:
    if len(p1) < 2 or len(p2) < 2:
        return p1, p2
    c1 = int(rng.integers(1, len(p1)))
    c2 = int(rng.integers(1, len(p2)))
    return _swap_tails(p1, p2, c1, c2)


def crossover_one_point(p1: AgentSequence, p2: AgentSequence, rng: RngStream):
    """One-point crossover with an independent cut in each parent."""
    a, b = _crossover(p1.agents, p2.agents, rng)
    return AgentSequence(a), AgentSequence(b)


INSERT, REPLACE, DELETE = 0, 1, 2


def _mutate(seq: tuple, pool: Sequence, rng: RngStream) -> tuple:
    kind = int(rng.integers(3))
    n = len(seq)
    if kind == DELETE and n == 1:
        kind = REPLACE
    if kind == INSERT:
        pos = int(rng.integers(n + 1))
        return seq[:pos] + (pool[int(rng.integers(len(pool)))],) + seq[pos:]
    pos = int(rng.integers(n))
    if kind == REPLACE:
        return seq[:pos] + (pool[int(rng.integers(len(pool)))],) + seq[pos + 1:]
    return seq[:pos] + seq[pos + 1:]


def mutate(seq: AgentSequence, local_pool: Sequence[Agent], rng: RngStream) -> AgentSequence:
    """Apply one point mutation: insertion, replacement or deletion."""
    pool = list(local_pool)
    if not pool:
        raise ValueError("cannot mutate without a local agent pool")
    return AgentSequence(_mutate(seq.agents, pool, rng))


def _evaluate(pop: list[tuple], table: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lens = np.fromiter((len(s) for s in pop), dtype=np.int64, count=len(pop))
    offsets = np.zeros(len(pop) + 1, dtype=np.int64)
    np.cumsum(lens, out=offsets[1:])
    genes = np.fromiter(chain.from_iterable(pop), dtype=np.int64, count=int(offsets[-1]))
    return kernels.sequence_distances(genes, offsets, table), lens


def evolve_request(request: Request, seed_pool: Sequence[Agent],
                   seed_sequences: Sequence[AgentSequence], cfg: GaConfig,
                   rng: RngStream) -> EvolutionResult:
    """Evolve the best agent sequence for ``request`` from a habitat's pool.

    The initial population holds each stored sequence once (at most half the
    population) and fills the rest with single pool agents.  The loop stops
    after ``max_generations`` or ``stagnation_window`` generations without a
    new best.  The best individual ever seen is returned, ranked by raw
    fitness then shorter length then earlier discovery.
    """
    pool = list(dict.fromkeys(seed_pool))
    if not pool:
        raise ValueError("cannot instantiate a population from an empty pool")
    n_pool = len(pool)
    index = {a: i for i, a in enumerate(pool)}
    local = list(pool)
    seeds = []
    for s in seed_sequences:
        genes = []
        for a in s.agents:
            if a not in index:
                index[a] = len(local)
                local.append(a)
            genes.append(index[a])
        seeds.append(tuple(genes))

    offsets, values = kernels.pack_attributes(local)
    required = np.array(request.flat, dtype=np.int64)
    table = kernels.agent_distance_table(offsets, values, required)

    mean_seed = float(np.mean([len(s) for s in seeds])) if seeds else 0.0
    size = population_size(mean_seed, cfg)
    if len(seeds) > size // 2:
        keep = np.sort(rng.choice(len(seeds), size // 2, replace=False))
        seeds = [seeds[i] for i in keep]
    pop = list(seeds)
    fill = rng.integers(n_pool, size=size - len(pop))
    pop.extend((int(g),) for g in fill)

    pool_genes = tuple(range(n_pool))
    best = None
    best_d = best_len = None
    evaluations = 0
    stale = 0
    gen = 0
    while gen < cfg.max_generations:
        gen += 1
        dist, lens = _evaluate(pop, table)
        evaluations += len(pop)
        i = int(np.lexsort((lens, dist))[0])
        d_i, len_i = int(dist[i]), int(lens[i])
        if best is None or d_i < best_d or (d_i == best_d and len_i < best_len):
            best, best_d, best_len = pop[i], d_i, len_i
            stale = 0
        else:
            stale += 1
            if stale >= cfg.stagnation_window:
                break
        if gen == cfg.max_generations:
            break

        mean_len = float(lens.mean())
        adj = adjusted_fitness(1.0 / (1.0 + dist), lens, mean_len, cfg.parsimony_alpha)
        target = population_size(mean_len, cfg)
        pop = [pop[j] for j in _select_indices(adj, target, rng)]

        n = len(pop)
        n_cx = _round_half_up(cfg.crossover_fraction * n)
        if n_cx >= 2:
            chosen = rng.choice(n, n_cx, replace=False)
            for a, b in zip(chosen[0::2], chosen[1::2]):
                pop[a], pop[b] = _crossover(pop[a], pop[b], rng)
        n_mut = _round_half_up(cfg.mutation_fraction * n)
        if n_mut:
            for j in rng.choice(n, n_mut, replace=False):
                pop[j] = _mutate(pop[j], pool_genes, rng)

    seq = AgentSequence(tuple(local[g] for g in best))
    return EvolutionResult(seq, 1.0 / (1.0 + best_d), gen, evaluations)
