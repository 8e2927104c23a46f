"""Domain values shared across the simulator.

Attributes are fixed-arity tuples of integers in ``[0, 100]``.  Agents carry a
small set of attributes as their description, requests carry a list of
attribute segments, and candidate applications are ordered agent sequences.
Every value here is immutable once built.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

ATTR_MIN = 0
ATTR_MAX = 100
DEFAULT_ARITY = 2

Attribute = tuple[int, ...]
RngStream = np.random.Generator


class ArityError(ValueError):
    """Two attributes of different arity were compared."""


def make_attribute(components: Iterable[int], arity: int | None = None) -> Attribute:
    attr = tuple(int(c) for c in components)
    if arity is not None and len(attr) != arity:
        raise ArityError(f"attribute {attr} has arity {len(attr)}, expected {arity}")
    for c in attr:
        if not ATTR_MIN <= c <= ATTR_MAX:
            raise ValueError(f"attribute component {c} outside [{ATTR_MIN}, {ATTR_MAX}]")
    return attr


def _unique(attrs: Iterable[Attribute]) -> tuple[Attribute, ...]:
    return tuple(dict.fromkeys(tuple(a) for a in attrs))


class Agent:
    """A deployable service: an id plus its attribute description.

    Agents compare and hash by id only, so copies held by several habitats
    are the same agent.
    """

    __slots__ = ("id", "attributes", "origin_user")

    def __init__(self, id: int, attributes: Iterable[Attribute], origin_user: int = -1):
        attrs = _unique(attributes)
        if not attrs:
            raise ValueError(f"agent {id} has no attributes")
        object.__setattr__(self, "id", int(id))
        object.__setattr__(self, "attributes", attrs)
        object.__setattr__(self, "origin_user", int(origin_user))

    def __setattr__(self, name, value):
        raise AttributeError("Agent is immutable")

    def __eq__(self, other):
        return isinstance(other, Agent) and other.id == self.id

    def __hash__(self):
        return hash(("agent", self.id))

    def __repr__(self):
        return f"Agent({self.id}, {list(self.attributes)})"


@dataclass(frozen=True)
class AgentSequence:
    """An individual of the evolving population; duplicates are allowed."""

    agents: tuple[Agent, ...]

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        if not self.agents:
            raise ValueError("agent sequences must contain at least one agent")

    def __len__(self):
        return len(self.agents)

    def __iter__(self):
        return iter(self.agents)

    @property
    def key(self) -> tuple[int, ...]:
        return tuple(a.id for a in self.agents)

    def attributes(self) -> list[Attribute]:
        return [attr for agent in self.agents for attr in agent.attributes]


@dataclass(frozen=True)
class Request:
    """A user's desired application as a list of attribute segments."""

    segments: tuple[tuple[Attribute, ...], ...]
    requester: int = -1
    _flat: tuple[Attribute, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        segs = tuple(_unique(seg) for seg in self.segments)
        if not segs or any(not seg for seg in segs):
            raise ValueError("requests need at least one non-empty segment")
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "_flat", tuple(a for seg in segs for a in seg))

    @property
    def flat(self) -> tuple[Attribute, ...]:
        """All required attributes across segments, in segment order."""
        return self._flat

    def __len__(self):
        return len(self._flat)


def attr_distance(a: Sequence[int], r: Sequence[int]) -> int:
    """L1 distance between two attributes of equal arity."""
    if len(a) != len(r):
        raise ArityError(f"cannot compare arity {len(a)} with arity {len(r)}")
    return sum(abs(ri - ai) for ai, ri in zip(a, r))


def min_dist(seq: AgentSequence | Sequence[Agent], r: Attribute) -> int:
    """Smallest distance from ``r`` to any attribute of any agent in ``seq``."""
    return min(attr_distance(a, r) for agent in seq for a in agent.attributes)


def _label_words(label: str) -> list[int]:
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return [int.from_bytes(digest[i:i + 4], "little") for i in range(0, 32, 4)]


def derive_stream(master_seed: int, stream_label: str) -> RngStream:
    """Independent, reproducible generator for one named concern of a run.

    The generator is PCG64 fed by ``SeedSequence([master_seed, w0, ..., w7])``
    where ``w0..w7`` are the little-endian uint32 words of
    ``sha256(stream_label.encode("utf-8"))``.
    """
    if master_seed < 0:
        raise ValueError("master seed must be non-negative")
    ss = np.random.SeedSequence([int(master_seed), *_label_words(stream_label)])
    return np.random.Generator(np.random.PCG64(ss))
