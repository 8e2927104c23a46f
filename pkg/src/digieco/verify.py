"""Built-in oracle suites run by ``digieco verify``.

Each suite checks an implementation against an independent brute-force or
statistical oracle at reduced size and returns a list of failure messages.
Functions under test are looked up on their modules at call time.
"""
from __future__ import annotations

import math
from collections import Counter

import numpy as np

from . import evolution, habitat, kernels, soa
from .model import Agent, AgentSequence, Request, attr_distance, derive_stream

FITNESS_CASES = 1000


def _random_agents(rng, n, start_id=0, max_attrs=3, arity=2):
    return [Agent(start_id + i,
                  [tuple(int(c) for c in rng.integers(0, 101, arity))
                   for _ in range(int(rng.integers(1, max_attrs + 1)))])
            for i in range(n)]


def _random_request(rng, max_segments=3, max_per_segment=4, arity=2):
    segs = [[tuple(int(c) for c in rng.integers(0, 101, arity))
             for _ in range(int(rng.integers(1, max_per_segment + 1)))]
            for _ in range(int(rng.integers(1, max_segments + 1)))]
    return Request(segs)


def brute_force_distance(agents, request) -> int:
    total = 0
    for r in request.flat:
        best = None
        for agent in agents:
            for a in agent.attributes:
                d = sum(abs(x - y) for x, y in zip(a, r))
                if best is None or d < best:
                    best = d
        total += best
    return total


def suite_fitness_oracle(cases: int = FITNESS_CASES) -> list[str]:
    rng = derive_stream(0, "verify/fitness")
    errors = []
    for case in range(cases):
        pool = _random_agents(rng, int(rng.integers(1, 6)))
        seq = AgentSequence([pool[int(i)] for i in rng.integers(len(pool), size=int(rng.integers(1, 8)))])
        req = _random_request(rng)
        d = brute_force_distance(seq.agents, req)
        got_d = evolution.sequence_distance(seq, req)
        got_f = evolution.fitness(seq, req)
        if got_d != d or abs(got_f - 1.0 / (1.0 + d)) > 1e-12:
            errors.append(f"case {case}: D={got_d} f={got_f!r}, oracle D={d}")
    return errors


def suite_kernel_parity(cases: int = 200) -> list[str]:
    if not kernels.HAS_NUMBA:
        return []
    rng = derive_stream(0, "verify/kernels")
    errors = []
    for case in range(cases):
        agents = _random_agents(rng, int(rng.integers(1, 30)))
        offsets, values = kernels.pack_attributes(agents)
        req = np.array(_random_request(rng).flat, dtype=np.int64)
        t_nb = kernels.agent_distance_table_nb(offsets, values, req)
        t_np = kernels.agent_distance_table_np(offsets, values, req)
        lens = rng.integers(1, 8, size=int(rng.integers(1, 20)))
        seq_off = np.concatenate([[0], np.cumsum(lens)]).astype(np.int64)
        genes = rng.integers(len(agents), size=int(seq_off[-1])).astype(np.int64)
        s_nb = kernels.sequence_distances_nb(genes, seq_off, t_nb)
        s_np = kernels.sequence_distances_np(genes, seq_off, t_np)
        if not (np.array_equal(t_nb, t_np) and np.array_equal(s_nb, s_np)):
            errors.append(f"case {case}: numba and numpy kernels disagree")
    return errors


def suite_selection_statistics(draws: int = 100_000) -> list[str]:
    rng = derive_stream(0, "verify/selection")
    picked = evolution.select_next_generation([("a", 0.9), ("b", 0.1)], draws, rng)
    hits = sum(1 for p in picked if p == "a")
    mean = 0.9 * draws
    sd = math.sqrt(draws * 0.9 * 0.1)
    if abs(hits - mean) > 3 * sd:
        return [f"first individual chosen {hits} times, expected {mean:.0f} +/- {3 * sd:.0f}"]
    return []


def suite_crossover_conservation(pairs: int = 2000) -> list[str]:
    rng = derive_stream(0, "verify/crossover")
    pool = _random_agents(rng, 10)
    errors = []
    for case in range(pairs):
        p1 = AgentSequence([pool[int(i)] for i in rng.integers(10, size=int(rng.integers(1, 10)))])
        p2 = AgentSequence([pool[int(i)] for i in rng.integers(10, size=int(rng.integers(1, 10)))])
        c1, c2 = evolution.crossover_one_point(p1, p2, rng)
        if Counter(p1.key + p2.key) != Counter(c1.key + c2.key):
            errors.append(f"case {case}: crossover changed the agent multiset")
    return errors


def suite_mutation_length(cases: int = 2000) -> list[str]:
    rng = derive_stream(0, "verify/mutation")
    pool = _random_agents(rng, 10)
    errors = []
    for case in range(cases):
        seq = AgentSequence([pool[int(i)] for i in rng.integers(10, size=int(rng.integers(1, 6)))])
        out = evolution.mutate(seq, pool, rng)
        if len(out) < 1 or abs(len(out) - len(seq)) > 1:
            errors.append(f"case {case}: length {len(seq)} -> {len(out)}")
    return errors


def suite_parsimony(cases: int = 2000) -> list[str]:
    rng = derive_stream(0, "verify/parsimony")
    errors = []
    for case in range(cases):
        raw = float(rng.uniform(1e-6, 1.0))
        mean = float(rng.uniform(1.0, 20.0))
        alpha = float(rng.uniform(0.01, 0.5))
        l1 = int(math.floor(mean)) + 1 + int(rng.integers(0, 10))
        l2 = l1 + 1 + int(rng.integers(0, 10))
        a1 = evolution.adjusted_fitness(raw, l1, mean, alpha)
        a2 = evolution.adjusted_fitness(raw, l2, mean, alpha)
        short = evolution.adjusted_fitness(raw, max(1, int(mean)), mean, alpha)
        if not (a1 > a2 and a1 < raw and short == raw):
            errors.append(f"case {case}: raw={raw} mean={mean} L=({l1},{l2}) adjusted=({a1},{a2})")
    return errors


def suite_hebbian_bounds(sequences: int = 2000, length: int = 50) -> list[str]:
    rng = derive_stream(0, "verify/hebbian")
    errors = []
    for case in range(sequences):
        p = float(rng.uniform(0.01, 0.99))
        for coin in rng.random(length):
            outcome = habitat.MigrationOutcome.SUCCESS if coin < 0.5 else habitat.MigrationOutcome.FAILURE
            p = habitat.hebbian_update(p, outcome, 0.1)
            if not 0.01 <= p <= 0.99:
                errors.append(f"sequence {case}: p={p} left [0.01, 0.99]")
                break
    p = 0.5
    for _ in range(50):
        p = habitat.hebbian_update(p, habitat.MigrationOutcome.SUCCESS, 0.1)
    if 0.99 - p > 0.1 * (1 - p) + 1e-12:
        errors.append(f"50 successes from 0.5 ended at {p}")
    return errors


def exhaustive_segment_scores(request, services) -> list[int | None]:
    out = []
    for seg in request.segments:
        best = None
        for svc in services:
            s = sum(min(attr_distance(a, r) for a in svc.attributes) for r in seg)
            if best is None or s < best:
                best = s
        out.append(best)
    return out


def random_registry(rng, n_nodes: int, n_services: int) -> soa.Registry:
    reg = soa.Registry()
    for i in range(n_nodes):
        reg.add_node(i)
    for i in range(1, n_nodes):
        reg.link(i, int(rng.integers(i)))
    for _ in range(int(rng.integers(0, n_nodes + 1))):
        a, b = (int(x) for x in rng.integers(n_nodes, size=2))
        if a != b:
            reg.link(a, b)
    for agent in _random_agents(rng, n_services):
        reg.place_description(agent, int(rng.integers(n_nodes)))
    return reg


def suite_soa_oracle(cases: int = 200) -> list[str]:
    rng = derive_stream(0, "verify/soa")
    errors = []
    for case in range(cases):
        n_nodes = int(rng.integers(1, 8))
        reg = random_registry(rng, n_nodes, int(rng.integers(1, 25)))
        req = _random_request(rng)
        entry = int(rng.integers(n_nodes))
        services = [a for node in reg.nodes.values() for a in node.local_descriptions]
        resp = soa.soa_respond(req, reg, entry, 10 ** 9)
        expected = exhaustive_segment_scores(req, services)
        if resp.segment_scores != expected:
            errors.append(f"case {case}: scores {resp.segment_scores} != oracle {expected}")
    return errors


SUITES = {
    "fitness_oracle": suite_fitness_oracle,
    "kernel_parity": suite_kernel_parity,
    "selection_statistics": suite_selection_statistics,
    "crossover_conservation": suite_crossover_conservation,
    "mutation_length": suite_mutation_length,
    "parsimony": suite_parsimony,
    "hebbian_bounds": suite_hebbian_bounds,
    "soa_oracle": suite_soa_oracle,
}


def run_all(out=print) -> list[str]:
    """Run every suite, printing one line each; returns failing suite names."""
    failed = []
    for name, suite in SUITES.items():
        try:
            errors = suite()
        except Exception as exc:  # a crash is a failure of that suite
            errors = [f"raised {type(exc).__name__}: {exc}"]
        out(f"{name}: {'pass' if not errors else 'FAIL'}")
        for msg in errors[:3]:
            out(f"    {msg}")
        if errors:
            failed.append(name)
    return failed
