"""Exit criteria for the build, each at its stated tolerance.

Run alone with ``pytest tests/test_acceptance.py``; one PASS/FAIL line per
criterion is printed in the terminal summary.
"""
import math
import os
import subprocess
import sys
import time
from collections import Counter
from fractions import Fraction

import pytest

from digieco import evolution
from digieco.cli import format_steps
from digieco.config import ScenarioConfig
from digieco.habitat import MigrationOutcome, hebbian_update
from digieco.harness import aggregate, detect_crossover, run_replications
from digieco.model import Agent, AgentSequence, Request, derive_stream
from digieco.soa import soa_respond
from digieco.verify import exhaustive_segment_scores, random_registry

DEFAULT = ScenarioConfig()


@pytest.fixture(scope="module")
def default_runs():
    start = time.perf_counter()
    runs = run_replications(DEFAULT, workers=os.cpu_count() or 1)
    return runs, time.perf_counter() - start


def test_1_crossover_reproduction(default_runs, acceptance):
    runs, elapsed = default_runs
    assert len(runs) >= 10
    windows = aggregate([r for run in runs for r in run.records], 25)
    first = windows[0]
    fired = [detect_crossover(aggregate(run.records, 25)) for run in runs]
    n_fired = sum(c is not None and c < 600 for c in fired)
    ok = first.soa_mean >= first.eco_mean and n_fired >= 7 and elapsed < 300
    acceptance("1. crossover reproduction", ok,
               f"first window soa={first.soa_mean:.2f} eco={first.eco_mean:.2f}; "
               f"crossover in {n_fired}/{len(runs)} seeds {fired}; {elapsed:.0f}s")
    assert ok


def _random_instance(rng):
    pool = [Agent(i, [tuple(int(c) for c in rng.integers(0, 101, 2))
                      for _ in range(int(rng.integers(1, 4)))]) for i in range(int(rng.integers(1, 8)))]
    seq = AgentSequence([pool[int(i)] for i in rng.integers(len(pool), size=int(rng.integers(1, 10)))])
    req = Request([[tuple(int(c) for c in rng.integers(0, 101, 2)) for _ in range(int(rng.integers(1, 5)))]
                   for _ in range(int(rng.integers(1, 4)))])
    return seq, req


def test_2_fitness_oracle(acceptance):
    rng = derive_stream(2024, "acceptance/fitness")
    bad = 0
    worst = 0.0
    for _ in range(1000):
        seq, req = _random_instance(rng)
        d = 0
        for r in req.flat:
            d += min(sum(abs(x - y) for x, y in zip(a, r)) for ag in seq.agents for a in ag.attributes)
        f = evolution.fitness(seq, req)
        err = abs(Fraction(f) - Fraction(1, 1 + d))
        worst = max(worst, float(err))
        if evolution.sequence_distance(seq, req) != d or err > Fraction(1, 10 ** 12):
            bad += 1
    ok = bad == 0
    acceptance("2. fitness oracle", ok, f"1000 cases, {bad} mismatches, max |f-1/(1+D)|={worst:.1e}")
    assert ok


def test_3_selection_statistics(acceptance):
    picks = evolution.select_next_generation([("first", 0.9), ("second", 0.1)], 100_000,
                                             derive_stream(2024, "acceptance/selection"))
    hits = picks.count("first")
    ok = abs(hits - 90_000) <= 285
    acceptance("3. selection statistics", ok, f"first chosen {hits} times (90000 +/- 285)")
    assert ok


def test_4_crossover_conservation(acceptance):
    rng = derive_stream(2024, "acceptance/crossover")
    pool = [Agent(i, [(i, i)]) for i in range(20)]
    violations = 0
    for _ in range(10_000):
        p1 = AgentSequence([pool[int(i)] for i in rng.integers(20, size=int(rng.integers(1, 12)))])
        p2 = AgentSequence([pool[int(i)] for i in rng.integers(20, size=int(rng.integers(1, 12)))])
        c1, c2 = evolution.crossover_one_point(p1, p2, rng)
        violations += Counter(p1.key + p2.key) != Counter(c1.key + c2.key)
    ok = violations == 0
    acceptance("4. crossover conservation", ok, f"10000 pairs, {violations} violations")
    assert ok


def test_5_parsimony(acceptance):
    rng = derive_stream(2024, "acceptance/parsimony")
    violations = 0
    for _ in range(10_000):
        raw = float(rng.uniform(1e-9, 1.0))
        mean = float(rng.uniform(1.0, 50.0))
        l1 = math.floor(mean) + 1 + int(rng.integers(0, 30))
        l2 = l1 + 1 + int(rng.integers(0, 30))
        a1 = evolution.adjusted_fitness(raw, l1, mean, 0.05)
        a2 = evolution.adjusted_fitness(raw, l2, mean, 0.05)
        violations += not a1 > a2
    ok = violations == 0
    acceptance("5. parsimony", ok, f"10000 cases, {violations} violations")
    assert ok


def test_6_hebbian_bounds(acceptance):
    rng = derive_stream(2024, "acceptance/hebbian")
    out_of_bounds = 0
    starts = rng.uniform(0.01, 0.99, 100_000)
    coins = rng.random((100_000, 20))
    for p, seq in zip(starts, coins):
        p = float(p)
        for c in seq:
            p = hebbian_update(p, MigrationOutcome.SUCCESS if c < 0.5 else MigrationOutcome.FAILURE, 0.1)
            out_of_bounds += not 0.01 <= p <= 0.99
    p = 0.5
    for _ in range(50):
        p = hebbian_update(p, MigrationOutcome.SUCCESS, 0.1)
    near_cap = 0.99 - p <= 0.1 * (1.0 - p)
    ok = out_of_bounds == 0 and near_cap
    acceptance("6. hebbian bounds", ok,
               f"100000 sequences, {out_of_bounds} out of bounds; 50 successes from 0.5 -> {p:.4f}")
    assert ok


def test_7_budget_parity(default_runs, acceptance):
    runs, _ = default_runs
    steps = [r for run in runs for r in run.records]
    violations = sum(r.comparisons_used > r.evaluations_used for r in steps)
    ok = violations == 0
    acceptance("7. budget parity", ok, f"{len(steps)} steps, {violations} violations")
    assert ok


def test_8_soa_oracle(acceptance):
    rng = derive_stream(2024, "acceptance/soa")
    mismatches = 0
    for _ in range(200):
        n_nodes = int(rng.integers(1, 10))
        reg = random_registry(rng, n_nodes, int(rng.integers(1, 40)))
        req = Request([[tuple(int(c) for c in rng.integers(0, 101, 2)) for _ in range(4)]
                       for _ in range(3)])
        services = [a for node in reg.nodes.values() for a in node.local_descriptions]
        resp = soa_respond(req, reg, int(rng.integers(n_nodes)), 10 ** 12)
        mismatches += resp.segment_scores != exhaustive_segment_scores(req, services)
    ok = mismatches == 0
    acceptance("8. soa oracle", ok, f"200 registries, {mismatches} mismatches")
    assert ok


_DUMP = """
import sys
from digieco.config import ScenarioConfig
from digieco.harness import run_scenario
from digieco.cli import format_steps
sys.stdout.write(format_steps(run_scenario(ScenarioConfig(), int(sys.argv[1]))))
"""


def test_9_determinism(default_runs, acceptance):
    runs, _ = default_runs
    first = {run.seed: format_steps(run.records).encode() for run in runs[:2]}
    again = {run.seed: format_steps(run.records).encode()
             for run in run_replications(DEFAULT, seeds=list(first), workers=1)}
    same_process = first == again
    # the pure-numpy kernel path stands in for a second platform
    env = dict(os.environ, DIGIECO_DISABLE_NUMBA="1")
    seed = runs[0].seed
    other = subprocess.run([sys.executable, "-c", _DUMP, str(seed)], env=env,
                           capture_output=True, check=True).stdout
    cross_backend = other == first[seed]
    ok = same_process and cross_backend
    acceptance("9. determinism", ok,
               f"repeat run identical={same_process}; numba vs numpy backend identical={cross_backend}")
    assert ok
