"""Compare the numba and pure-numpy kernel paths.

    python benchmarks/bench_kernels.py            # kernel micro-benchmarks
    python benchmarks/bench_kernels.py --scenario # plus one full replication per backend

The scenario timing runs in subprocesses so DIGIECO_DISABLE_NUMBA is read at
import time, as it would be in a real run.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from digieco import kernels

SCENARIO = """
import time
from digieco.config import ScenarioConfig
from digieco.harness import run_scenario
run_scenario(ScenarioConfig(total_requests=5), 1)  # warm-up / jit
t = time.perf_counter()
run_scenario(ScenarioConfig(), 1)
print(f"{time.perf_counter() - t:.2f}")
"""


def make_inputs(n_agents, attrs_per_agent, n_required, pop, mean_len, rng):
    offsets = np.arange(0, n_agents * attrs_per_agent + 1, attrs_per_agent, dtype=np.int64)
    values = rng.integers(0, 101, size=(n_agents * attrs_per_agent, 2)).astype(np.int64)
    required = rng.integers(0, 101, size=(n_required, 2)).astype(np.int64)
    lens = rng.integers(1, 2 * mean_len, size=pop)
    seq_offsets = np.concatenate([[0], np.cumsum(lens)]).astype(np.int64)
    genes = rng.integers(0, n_agents, size=int(seq_offsets[-1])).astype(np.int64)
    return offsets, values, required, genes, seq_offsets


def bench(fn, *args, number=200):
    fn(*args)
    return min(timeit.repeat(lambda: fn(*args), number=number, repeat=5)) / number


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--scenario", action="store_true", help="also time a full replication")
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    cases = [(40, 2, 12, 35, 3), (150, 2, 12, 60, 6), (700, 2, 12, 200, 12)]
    print(f"{'case':<28}{'kernel':<22}{'numpy us':>10}{'numba us':>10}{'speedup':>9}")
    for n_agents, per, m, pop, mean_len in cases:
        offsets, values, required, genes, seq_offsets = make_inputs(n_agents, per, m, pop, mean_len, rng)
        label = f"agents={n_agents} pop={pop}"
        table = kernels.agent_distance_table_np(offsets, values, required)
        pairs = [("distance_table", kernels.agent_distance_table_np,
                  getattr(kernels, "agent_distance_table_nb", None), (offsets, values, required)),
                 ("sequence_distances", kernels.sequence_distances_np,
                  getattr(kernels, "sequence_distances_nb", None), (genes, seq_offsets, table))]
        for name, np_fn, nb_fn, fn_args in pairs:
            t_np = bench(np_fn, *fn_args) * 1e6
            if nb_fn is None:
                print(f"{label:<28}{name:<22}{t_np:>10.1f}{'n/a':>10}{'':>9}")
                continue
            t_nb = bench(nb_fn, *fn_args) * 1e6
            print(f"{label:<28}{name:<22}{t_np:>10.1f}{t_nb:>10.1f}{t_np / t_nb:>8.1f}x")

    if args.scenario:
        for flag in ("0", "1"):
            env = dict(os.environ, DIGIECO_DISABLE_NUMBA=flag)
            out = subprocess.run([sys.executable, "-c", SCENARIO], env=env, check=True,
                                 capture_output=True, text=True).stdout.strip()
            backend = "numpy" if flag == "1" else "numba"
            print(f"full replication (600 requests, {backend}): {out}s")


if __name__ == "__main__":
    main()
