"""The habitat network: one habitat per user, probabilistic directed links,
Hebbian reinforcement from migration outcomes, and the request lifecycle.

A request evolves a best sequence at the user's habitat, which stores it
and offers a copy to each neighbour that passes a Bernoulli draw on the
outgoing link.  A migrant counts as a success once it (or one of its agents)
shows up in a best sequence at the destination within ``migration_window``
destination requests; otherwise it fails.  Either outcome updates both
directed links between the two habitats.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import networkx as nx
import numpy as np

from .config import ScenarioConfig
from .evolution import evolve_request
from .model import (ATTR_MAX, ATTR_MIN, Agent, AgentSequence, Attribute, Request,
                    RngStream, derive_stream)
from .soa import Registry


class MigrationOutcome(enum.Enum):
    SUCCESS = "success"
    FAILURE = "failure"


def hebbian_update(p: float, outcome: MigrationOutcome, eta: float = 0.1,
                   p_min: float = 0.01, p_max: float = 0.99) -> float:
    if outcome is MigrationOutcome.SUCCESS:
        p = p + eta * (1.0 - p)
    else:
        p = p * (1.0 - eta)
    return min(p_max, max(p_min, p))


@dataclass
class PendingMigration:
    migration_id: int
    migrant: AgentSequence
    source: int
    requests_remaining: int


@dataclass
class Habitat:
    id: int
    agents: dict[int, Agent] = field(default_factory=dict)
    sequences: dict[tuple[int, ...], AgentSequence] = field(default_factory=dict)
    outgoing: dict[int, float] = field(default_factory=dict)
    pending_migrations: list[PendingMigration] = field(default_factory=list)

    def add_agent(self, agent: Agent) -> None:
        self.agents.setdefault(agent.id, agent)

    def add_sequence(self, seq: AgentSequence) -> None:
        self.sequences.setdefault(seq.key, seq)
        for agent in seq.agents:
            self.add_agent(agent)


@dataclass
class User:
    id: int
    habitat: int
    profile: tuple[Attribute, ...]
    community: int = 0
    requests_submitted: int = 0

    def __post_init__(self):
        if not self.profile:
            raise ValueError("user profiles must be non-empty")


@dataclass(frozen=True)
class ResponseRecord:
    best_sequence: AgentSequence
    raw_fitness: float
    evaluations_used: int
    generations_run: int
    migration_targets: tuple[int, ...] = ()


def select_migration_targets(h: Habitat, rng: RngStream) -> list[int]:
    """One Bernoulli draw per outgoing link, in ascending target-id order."""
    targets = sorted(h.outgoing)
    if not targets:
        return []
    draws = rng.random(len(targets))
    return [t for t, u in zip(targets, draws) if u < h.outgoing[t]]


def _noisy(base: np.ndarray, sigma: float, rng: RngStream) -> np.ndarray:
    noise = rng.normal(0.0, sigma, size=base.shape) if sigma > 0 else np.zeros(base.shape)
    return np.clip(np.rint(base + noise), ATTR_MIN, ATTR_MAX).astype(np.int64)


def generate_request(profile: Sequence[Attribute], sigma: float, segments: int,
                     rng: RngStream, per_segment: int = 4, requester: int = -1) -> Request:
    """Required attributes cycle through the profile from a random offset,
    each perturbed by rounded Gaussian noise and clamped to the domain."""
    base = np.asarray(profile, dtype=np.int64)
    start = int(rng.integers(len(base)))
    idx = (start + np.arange(segments * per_segment)) % len(base)
    attrs = _noisy(base[idx], sigma, rng)
    segs = [[tuple(int(c) for c in row) for row in attrs[s * per_segment:(s + 1) * per_segment]]
            for s in range(segments)]
    return Request(segs, requester)


class Ecosystem:
    """Mutable simulation state for one replication.

    Users own exactly one habitat (sharing its id) and one paired registry
    node.  All randomness comes from streams derived from ``seed``.
    """

    def __init__(self, cfg: ScenarioConfig, seed: int):
        self.cfg = cfg
        self.seed = seed
        self.ga = cfg.ga
        self.users: dict[int, User] = {}
        self.habitats: dict[int, Habitat] = {}
        self.registry = Registry()
        self.agents_created = 0
        self._next_user = 0
        self._next_migration = 0
        self.churn_events = 0
        self.hebbian_updates = {MigrationOutcome.SUCCESS: 0, MigrationOutcome.FAILURE: 0}
        self._rng_topology = derive_stream(seed, "topology")
        self._rng_profiles = derive_stream(seed, "profiles")
        self._rng_deploy = derive_stream(seed, "deploy")
        self._rng_migration = derive_stream(seed, "migration")
        self._rng_churn = derive_stream(seed, "churn")
        self.community_profiles = [self._draw_profile() for _ in range(cfg.communities)]
        self._build()

    # construction -----------------------------------------------------

    def _draw_profile(self) -> tuple[Attribute, ...]:
        # bounded random walk: neighbouring capabilities are close in attribute space
        rng, cfg = self._rng_profiles, self.cfg
        steps = rng.integers(-cfg.profile_step, cfg.profile_step + 1,
                             size=(cfg.profile_size, cfg.arity))
        steps[0] = rng.integers(ATTR_MIN, ATTR_MAX + 1, size=cfg.arity)
        walk = np.empty_like(steps)
        pos = steps[0]
        for i in range(cfg.profile_size):
            pos = np.clip(pos + (steps[i] if i else 0), ATTR_MIN, ATTR_MAX)
            walk[i] = pos
        return tuple(tuple(int(c) for c in row) for row in walk)

    def _new_user(self, community: int) -> User:
        uid = self._next_user
        self._next_user += 1
        user = User(uid, uid, self.community_profiles[community], community)
        self.users[uid] = user
        self.habitats[uid] = Habitat(uid)
        self.registry.add_node(uid)
        return user

    def _build(self) -> None:
        cfg = self.cfg
        communities = [u % cfg.communities for u in range(cfg.users)]
        for c in communities:
            self._new_user(c)
        ids = sorted(self.habitats)
        if cfg.topology == "small_world":
            self._wire_small_world(ids)
        else:
            for i, hid in enumerate(ids):
                self._wire_random(hid, ids[:i])
        for uid in ids:
            for _ in range(cfg.initial_agents_per_user):
                self.deploy_agent(self.users[uid])

    def _connect(self, a: int, b: int, p: float | None = None) -> None:
        p = self.cfg.p_init if p is None else p
        self.habitats[a].outgoing[b] = p
        self.habitats[b].outgoing[a] = p
        self.registry.link(a, b)

    def _disconnect(self, a: int, b: int) -> None:
        self.habitats[a].outgoing.pop(b, None)
        self.habitats[b].outgoing.pop(a, None)
        self.registry.unlink(a, b)

    def _wire_random(self, hid: int, candidates: list[int]) -> None:
        k = min(self.cfg.initial_degree, len(candidates))
        if k == 0:
            return
        for j in self._rng_topology.choice(len(candidates), k, replace=False):
            self._connect(hid, candidates[int(j)])

    def _wire_small_world(self, ids: list[int]) -> None:
        # ring lattice, then rewire each clockwise edge with rewire_prob
        n = len(ids)
        half = max(1, self.cfg.initial_degree // 2)
        rng = self._rng_topology
        edges = set()
        for i in range(n):
            for j in range(1, half + 1):
                if n > 1 and (i + j) % n != i:
                    edges.add((i, (i + j) % n))
        for i, j in sorted(edges):
            if rng.random() < self.cfg.rewire_prob:
                taken = {b for a, b in edges if a == i} | {a for a, b in edges if b == i} | {i}
                free = [x for x in range(n) if x not in taken]
                if free:
                    edges.discard((i, j))
                    edges.add((i, free[int(rng.integers(len(free)))]))
        for i, j in sorted(edges):
            if ids[j] not in self.habitats[ids[i]].outgoing:
                self._connect(ids[i], ids[j])

    def _wire_fresh(self, hid: int) -> None:
        others = sorted(h for h in self.habitats if h != hid)
        if self.cfg.topology != "small_world" or not others:
            self._wire_random(hid, others)
            return
        # attach to an anchor and its neighbours to keep clustering high
        anchor = others[int(self._rng_topology.integers(len(others)))]
        self._connect(hid, anchor)
        nbrs = sorted(h for h in self.habitats[anchor].outgoing if h != hid)
        k = min(self.cfg.initial_degree - 1, len(nbrs))
        if k > 0:
            for j in self._rng_topology.choice(len(nbrs), k, replace=False):
                self._connect(hid, nbrs[int(j)])

    # user actions ------------------------------------------------------

    def deploy_agent(self, user: User) -> Agent:
        """New agent drawn like a short request: consecutive profile entries
        from a random offset, each with rounded Gaussian noise."""
        rng = self._rng_deploy
        n = len(user.profile)
        start = int(rng.integers(n))
        idx = (start + np.arange(min(self.cfg.agent_attributes, n))) % n
        base = np.asarray(user.profile, dtype=np.int64)[idx]
        attrs = [tuple(int(c) for c in row) for row in _noisy(base, self.cfg.sigma, rng)]
        agent = Agent(self.agents_created, attrs, user.id)
        self.agents_created += 1
        self.habitats[user.habitat].add_agent(agent)
        self.registry.place_description(agent, user.habitat)
        return agent

    def generate_request(self, user: User, rng: RngStream) -> Request:
        return generate_request(user.profile, self.cfg.sigma, self.cfg.segments, rng,
                                self.cfg.attributes_per_segment, user.id)

    def record_request(self, user: User) -> Agent | None:
        """Count a submitted request; deploy a new agent every N requests."""
        user.requests_submitted += 1
        if user.requests_submitted % self.cfg.requests_between_deployments == 0:
            return self.deploy_agent(user)
        return None

    def handle_request(self, user: User, request: Request, rng: RngStream) -> ResponseRecord:
        h = self.habitats[user.habitat]
        if not h.agents:
            raise ValueError(f"habitat {h.id} has an empty pool")
        result = evolve_request(request, list(h.agents.values()), list(h.sequences.values()),
                                self.ga, rng)
        best = result.best_sequence
        h.add_sequence(best)

        targets = select_migration_targets(h, self._rng_migration)
        for t in targets:
            dest = self.habitats[t]
            dest.add_sequence(best)
            dest.pending_migrations.append(
                PendingMigration(self._next_migration, best, h.id, self.cfg.migration_window))
            self._next_migration += 1

        used_ids = {a.id for a in best.agents}
        still_pending = []
        for pm in h.pending_migrations:
            if pm.migrant.key == best.key or used_ids.intersection(a.id for a in pm.migrant.agents):
                self._reinforce(pm.source, h.id, MigrationOutcome.SUCCESS)
                continue
            pm.requests_remaining -= 1
            if pm.requests_remaining <= 0:
                self._reinforce(pm.source, h.id, MigrationOutcome.FAILURE)
            else:
                still_pending.append(pm)
        h.pending_migrations = still_pending
        return ResponseRecord(best, result.best_raw_fitness, result.evaluations_used,
                              result.generations_run, tuple(targets))

    def _reinforce(self, a: int, b: int, outcome: MigrationOutcome) -> None:
        if a not in self.habitats or b not in self.habitats:
            return
        ha, hb = self.habitats[a], self.habitats[b]
        if b not in ha.outgoing and a not in hb.outgoing:
            return
        cfg = self.cfg
        self.hebbian_updates[outcome] += 1
        for src, dst in ((ha, b), (hb, a)):
            if dst in src.outgoing:
                src.outgoing[dst] = hebbian_update(src.outgoing[dst], outcome, cfg.eta,
                                                   cfg.p_min, cfg.p_max)
        if (cfg.prune_edges and outcome is MigrationOutcome.FAILURE
                and ha.outgoing.get(b, cfg.p_min) <= cfg.p_min
                and hb.outgoing.get(a, cfg.p_min) <= cfg.p_min):
            self._disconnect(a, b)
            for hid, partner in ((a, b), (b, a)):
                free = sorted(x for x in self.habitats
                              if x not in (hid, partner) and x not in self.habitats[hid].outgoing)
                if free:
                    self._connect(hid, free[int(self._rng_topology.integers(len(free)))])

    def churn_step(self) -> bool:
        """Maybe replace one random user by a fresh one; returns True on churn."""
        if self.cfg.churn_rate <= 0 or self._rng_churn.random() >= self.cfg.churn_rate:
            return False
        ids = sorted(self.users)
        leaving = ids[int(self._rng_churn.integers(len(ids)))]
        self.remove_user(leaving)
        community = int(self._rng_churn.integers(self.cfg.communities))
        user = self._new_user(community)
        self._wire_fresh(user.habitat)
        for _ in range(self.cfg.initial_agents_per_user):
            self.deploy_agent(user)
        self.churn_events += 1
        return True

    def remove_user(self, uid: int) -> None:
        user = self.users.pop(uid)
        h = self.habitats.pop(user.habitat)
        for other in h.outgoing:
            if other in self.habitats:
                self.habitats[other].outgoing.pop(h.id, None)
        for other in self.habitats.values():
            other.outgoing.pop(h.id, None)
        self.registry.remove_node(user.habitat)

    # reporting ---------------------------------------------------------

    @property
    def services_available(self) -> int:
        return self.registry.description_count()

    def edge_probabilities(self) -> list[float]:
        return [p for h in self.habitats.values() for p in h.outgoing.values()]

    def clustering_coefficient(self, threshold: float | None = None) -> float:
        """Average clustering of the undirected graph of strong links."""
        threshold = self.cfg.clustering_threshold if threshold is None else threshold
        g = nx.Graph()
        g.add_nodes_from(self.habitats)
        for h in self.habitats.values():
            for t, p in h.outgoing.items():
                back = self.habitats[t].outgoing.get(h.id, 0.0)
                if (p + back) / 2.0 >= threshold:
                    g.add_edge(h.id, t)
        return nx.average_clustering(g) if g.number_of_nodes() else 0.0

    def snapshot(self) -> dict:
        return {
            "users": sorted(self.users),
            "edges": {h.id: dict(sorted(h.outgoing.items())) for h in self.habitats.values()},
            "pools": {h.id: sorted(h.agents) for h in self.habitats.values()},
            "sequences": {h.id: sorted(h.sequences) for h in self.habitats.values()},
        }
