"""Hot numeric kernels.

Two kernels dominate a run: the agent-by-requirement distance table built
once per request, and the per-individual distance sum evaluated every
generation.  Each has a numba ``@njit`` version and a pure-numpy version.
Set ``DIGIECO_DISABLE_NUMBA=1`` (or run without numba installed) to use the
numpy path; both paths return identical integers.
"""
from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("DIGIECO_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError
    from numba import njit
    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False


def agent_distance_table_np(attr_offsets, attr_values, required):
    """``table[i, j]`` = min over agent ``i``'s attributes of L1 distance to ``required[j]``."""
    diff = np.abs(attr_values[:, None, :] - required[None, :, :]).sum(axis=2)
    return np.minimum.reduceat(diff, attr_offsets[:-1], axis=0)


def sequence_distances_np(genes, seq_offsets, table):
    """Sum over requirements of the closest gene, per individual."""
    return np.minimum.reduceat(table[genes], seq_offsets[:-1], axis=0).sum(axis=1)


if HAS_NUMBA:

    @njit(cache=True, nogil=True)
    def agent_distance_table_nb(attr_offsets, attr_values, required):
        n_agents = attr_offsets.shape[0] - 1
        m, d = required.shape
        out = np.empty((n_agents, m), dtype=np.int64)
        for i in range(n_agents):
            lo = attr_offsets[i]
            hi = attr_offsets[i + 1]
            for j in range(m):
                best = np.int64(1) << 62
                for k in range(lo, hi):
                    s = np.int64(0)
                    for c in range(d):
                        s += abs(attr_values[k, c] - required[j, c])
                    if s < best:
                        best = s
                out[i, j] = best
        return out

    @njit(cache=True, nogil=True)
    def sequence_distances_nb(genes, seq_offsets, table):
        n = seq_offsets.shape[0] - 1
        m = table.shape[1]
        out = np.empty(n, dtype=np.int64)
        for s in range(n):
            lo = seq_offsets[s]
            hi = seq_offsets[s + 1]
            total = np.int64(0)
            for j in range(m):
                best = table[genes[lo], j]
                for g in range(lo + 1, hi):
                    v = table[genes[g], j]
                    if v < best:
                        best = v
                total += best
            out[s] = total
        return out

    agent_distance_table = agent_distance_table_nb
    sequence_distances = sequence_distances_nb
else:
    agent_distance_table = agent_distance_table_np
    sequence_distances = sequence_distances_np


def backend() -> str:
    return "numba" if HAS_NUMBA else "numpy"


def pack_attributes(agents) -> tuple[np.ndarray, np.ndarray]:
    """CSR layout of the agents' attributes: ``(offsets, values)``."""
    counts = [len(a.attributes) for a in agents]
    offsets = np.zeros(len(counts) + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    values = np.array([attr for a in agents for attr in a.attributes], dtype=np.int64)
    return offsets, values.reshape(int(offsets[-1]), -1)
