"""Neighbor graph, per-node queue mode, and routing probabilities."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Tuple

from .errors import ConfigurationError


class QueueMode(Enum):
    SATURATED = "saturated"   # infinite backlog, always a head-of-line packet
    SINK = "sink"             # never originates traffic
    FINITE = "finite"         # bounded queue, grows by relaying


@dataclass(frozen=True)
class QueueSpec:
    mode: QueueMode
    limit: int = 0  # maximum queue length, FINITE mode only

    def __post_init__(self):
        if self.mode is QueueMode.FINITE and self.limit < 1:
            raise ConfigurationError("finite queue needs limit >= 1")


@dataclass(frozen=True)
class Topology:
    """Undirected sensing graph with queue modes and routing weights.

    routing[(x, y)] is the probability that x's next packet is addressed
    to neighbor y; weights of a non-sink node must sum to 1 over its
    neighbors.
    """

    nodes: Tuple[str, ...]
    neighbors: Dict[str, FrozenSet[str]] = field(compare=False)
    queues: Dict[str, QueueSpec] = field(compare=False)
    routing: Dict[Tuple[str, str], float] = field(compare=False)

    def __post_init__(self):
        known = set(self.nodes)
        if len(self.nodes) != len(known):
            raise ConfigurationError("duplicate node identifiers")
        for x in self.nodes:
            if x not in self.neighbors or x not in self.queues:
                raise ConfigurationError(f"node {x!r} missing neighbors or queue mode")
            for z in self.neighbors[x]:
                if z == x:
                    raise ConfigurationError(f"node {x!r} listed as its own neighbor")
                if z not in known:
                    raise ConfigurationError(f"unknown neighbor {z!r} of {x!r}")
                if x not in self.neighbors[z]:
                    raise ConfigurationError(f"asymmetric adjacency {x!r}-{z!r}")
        for (x, y), p in self.routing.items():
            if y not in self.neighbors[x]:
                raise ConfigurationError(f"routing {x!r}->{y!r} is not an edge")
            if p < 0:
                raise ConfigurationError("routing probabilities must be >= 0")
        for x in self.nodes:
            if self.queues[x].mode is QueueMode.SINK:
                continue
            total = sum(self.routing.get((x, y), 0.0) for y in self.neighbors[x])
            if not math.isclose(total, 1.0, abs_tol=1e-9):
                raise ConfigurationError(
                    f"routing weights of {x!r} sum to {total}, expected 1")

    def hidden_from(self, x: str, other: str) -> FrozenSet[str]:
        """Neighbors of x that cannot be sensed by `other` (nor are `other`)."""
        return frozenset(z for z in self.neighbors[x]
                         if z != other and z not in self.neighbors[other])

    def receivers(self, x: str):
        """Neighbors y of x with positive routing weight, in node order."""
        return tuple(y for y in self.nodes
                     if y in self.neighbors[x] and self.routing.get((x, y), 0.0) > 0)

    def originates(self, x: str) -> bool:
        return self.queues[x].mode is not QueueMode.SINK and bool(self.receivers(x))


def from_positions(points: Dict[str, Tuple[float, float]],
                   sensing_range: float,
                   queues: Dict[str, QueueSpec],
                   routing: Dict[Tuple[str, str], float]) -> Topology:
    """Threshold pairwise distances into a sensing graph."""
    names = tuple(sorted(points))
    nbrs = {}
    for x in names:
        px = points[x]
        nbrs[x] = frozenset(
            z for z in names
            if z != x and math.dist(px, points[z]) <= sensing_range)
    return Topology(nodes=names, neighbors=nbrs, queues=dict(queues),
                    routing=dict(routing))
