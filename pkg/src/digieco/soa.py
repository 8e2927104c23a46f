"""Reference system: a distributed service registry with redirects, no caching.

Each registry node stores the descriptions of the services deployed at its
paired habitat and redirects to the nodes its habitat is connected to.  A
request is answered one segment at a time by a breadth-first walk over the
redirects, scoring every description met against the segment, until the
comparison budget runs out.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .model import Agent, Request


class PlacementError(ValueError):
    pass


@dataclass
class RegistryNode:
    id: int
    local_descriptions: list[Agent] = field(default_factory=list)
    redirects: list[int] = field(default_factory=list)


class Registry:
    def __init__(self):
        self.nodes: dict[int, RegistryNode] = {}
        self._placed: dict[int, int] = {}

    def add_node(self, node_id: int) -> RegistryNode:
        if node_id in self.nodes:
            raise ValueError(f"registry node {node_id} already exists")
        node = self.nodes[node_id] = RegistryNode(node_id)
        return node

    def remove_node(self, node_id: int) -> None:
        node = self.nodes.pop(node_id)
        for agent in node.local_descriptions:
            del self._placed[agent.id]
        for other in node.redirects:
            if other in self.nodes:
                self.nodes[other].redirects.remove(node_id)

    def link(self, a: int, b: int) -> None:
        if a == b:
            raise ValueError("a node cannot redirect to itself")
        for src, dst in ((a, b), (b, a)):
            if dst not in self.nodes[src].redirects:
                self.nodes[src].redirects.append(dst)

    def unlink(self, a: int, b: int) -> None:
        for src, dst in ((a, b), (b, a)):
            if src in self.nodes and dst in self.nodes[src].redirects:
                self.nodes[src].redirects.remove(dst)

    def place_description(self, agent: Agent, node_id: int) -> None:
        if agent.id in self._placed:
            raise PlacementError(f"agent {agent.id} is already placed at node {self._placed[agent.id]}")
        self.nodes[node_id].local_descriptions.append(agent)
        self._placed[agent.id] = node_id

    def location(self, agent_id: int) -> int | None:
        return self._placed.get(agent_id)

    def description_count(self) -> int:
        return len(self._placed)

    def bfs_order(self, entry: int) -> list[int]:
        seen = {entry}
        order = []
        queue = deque([entry])
        while queue:
            nid = queue.popleft()
            order.append(nid)
            for nxt in self.nodes[nid].redirects:
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        return order


@dataclass(frozen=True)
class SoaResponse:
    chosen: list[tuple[int, Agent | None]]
    comparisons_used: int
    segment_scores: list[int | None]

    @property
    def composition(self) -> list[Agent]:
        return [a for _, a in self.chosen if a is not None]


def soa_respond(request: Request, registry: Registry, entry_node: int, budget: int) -> SoaResponse:
    """Best single service per request segment within ``budget`` comparisons.

    One comparison scores one stored description against one segment: the sum
    over the segment's attributes of the distance to the description's closest
    attribute.  Segments are handled in order, each by a fresh breadth-first
    walk from ``entry_node``; ties keep the first description met.
    """
    if budget < 0:
        raise ValueError("budget must be non-negative")
    if entry_node not in registry.nodes:
        raise KeyError(f"unknown entry node {entry_node}")
    services = [a for nid in registry.bfs_order(entry_node)
                for a in registry.nodes[nid].local_descriptions]
    n = len(services)
    n_seg = len(request.segments)
    chosen: list[tuple[int, Agent | None]] = [(s, None) for s in range(n_seg)]
    scores: list[int | None] = [None] * n_seg
    if n == 0 or budget == 0:
        return SoaResponse(chosen, 0, scores)

    offsets, values = kernels.pack_attributes(services)
    required = np.array(request.flat, dtype=np.int64)
    table = kernels.agent_distance_table(offsets, values, required)

    used = 0
    col = 0
    for s, seg in enumerate(request.segments):
        seg_scores = table[:, col:col + len(seg)].sum(axis=1)
        col += len(seg)
        k = min(n, budget - used)
        if k <= 0:
            continue
        used += k
        best = int(np.argmin(seg_scores[:k]))
        chosen[s] = (s, services[best])
        scores[s] = int(seg_scores[best])
    return SoaResponse(chosen, used, scores)
