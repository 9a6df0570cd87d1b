"""Reachable per-node state spaces.

The space of one node is assembled structurally: a carrier-sense block for
every (stage, counter) pair and layer, a contention block for every stage,
with chains included only when some neighbor can actually drive them.  The
test suite cross-checks the result against a breadth-first closure of the
transition relation.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Tuple

from .errors import ConfigurationError
from .params import ProtocolParams
from .states import SATURATED, Act, NodeState, backoff, idle
from .topology import QueueMode, Topology


def can_begin_rts_to(topo: Topology, z: str, x: str) -> bool:
    """z can launch an RTS addressed to x."""
    return topo.routing.get((z, x), 0.0) > 0

def can_begin_rts_other(topo: Topology, z: str, x: str) -> bool:
    """z can launch an RTS addressed to someone other than x."""
    return any(topo.routing.get((z, w), 0.0) > 0
               for w in topo.neighbors[z] if w != x)

def can_send_cts_third(topo: Topology, z: str, x: str) -> bool:
    """z can reply CTS to a node that x cannot sense."""
    return any(topo.routing.get((w, z), 0.0) > 0
               for w in topo.neighbors[z]
               if w != x and w not in topo.neighbors[x])

def begin_capable(topo: Topology, z: str, x: str) -> bool:
    """z has a state, compatible with x listening on a quiet channel,
    from which it starts a transmission on the next slot."""
    return (can_begin_rts_to(topo, z, x) or can_begin_rts_other(topo, z, x)
            or can_send_cts_third(topo, z, x))


def _csb_states(topo, params, x, stage, counter, recv, qlen) -> List[NodeState]:
    """Listener-side chain states hanging off one backoff/idle anchor."""
    out = []

    def add(action, tmax, peer):
        for j in range(tmax + 1):
            out.append(NodeState(stage, counter, action, j, recv, qlen, peer))

    nav_top: Dict[str, int] = {}
    for z in sorted(topo.neighbors[x]):
        if can_begin_rts_to(topo, z, x):
            add(Act.RECV_RTS, params.t_rts, z)
            add(Act.SEND_CTS, params.t_cts, z)
            add(Act.RECV_DATA, params.t_data, z)
        if can_begin_rts_other(topo, z, x):
            add(Act.OVERHEAR_RTS, params.t_rts, z)
            nav_top[z] = params.t_navr
        if can_send_cts_third(topo, z, x):
            add(Act.OVERHEAR_CTS, params.t_cts, z)
            nav_top[z] = max(nav_top.get(z, 0), params.t_navc)
    for z, top in nav_top.items():
        add(Act.NAV, top, z)

    busy_sources = sum(begin_capable(topo, z, x) for z in topo.neighbors[x])
    corruptible = any(
        begin_capable(topo, a, x)
        for z in topo.neighbors[x] if begin_capable(topo, z, x)
        for a in topo.hidden_from(x, z))
    if busy_sources >= 2 or corruptible:
        out.append(NodeState(stage, counter, Act.BUSY, 0, recv, qlen))
    return out


def _rcb_states(params, x, stage, recv, qlen) -> List[NodeState]:
    """Sender-side chain states for one stage and receiver."""
    out = []
    for j in range(params.t_rts + 1):
        out.append(NodeState(stage, 0, Act.SEND_RTS, j, recv, qlen, recv))
    for j in range(params.t_cts + 1):
        out.append(NodeState(stage, 0, Act.RECV_CTS, j, recv, qlen, recv))
    for j in range(params.t_out + 1):
        out.append(NodeState(stage, 0, Act.TIMEOUT, j, recv, qlen))
    return out


def enumerate_states(topo: Topology, params: ProtocolParams,
                     x: str) -> frozenset:
    """All states of node x reachable under the transition diagrams."""
    if x not in topo.neighbors:
        raise ConfigurationError(f"unknown node {x!r}")
    spec = topo.queues[x]
    states: List[NodeState] = []

    if spec.mode is QueueMode.SATURATED:
        layers: Tuple[int, ...] = (SATURATED,)
    elif spec.mode is QueueMode.SINK:
        layers = ()
    else:
        layers = tuple(range(1, spec.limit + 1))

    if spec.mode is not QueueMode.SATURATED:
        # base layer: idle plus its carrier-sense block
        states.append(idle())
        states.extend(_csb_states(topo, params, x, 0, 0, None, 0))

    for qlen in layers:
        for recv in topo.receivers(x):
            for stage in range(params.m + 1):
                for counter in range(params.window(stage) + 1):
                    states.append(backoff(stage, counter, recv, qlen))
                    if counter >= 1:
                        states.extend(_csb_states(topo, params, x,
                                                  stage, counter, recv, qlen))
                states.extend(_rcb_states(params, x, stage, recv, qlen))
            for j in range(params.t_data + 1):
                states.append(NodeState(0, 0, Act.SEND_DATA, j, recv, qlen, recv))
    return frozenset(states)


@dataclass
class StateSpace:
    """Ordered, indexed state set of one node."""

    node: str
    states: Tuple[NodeState, ...]
    index: Dict[NodeState, int]

    @classmethod
    def build(cls, topo: Topology, params: ProtocolParams, node: str) -> "StateSpace":
        ordered = tuple(sorted(enumerate_states(topo, params, node),
                               key=lambda s: s.sort_key()))
        return cls(node=node, states=ordered,
                   index={s: i for i, s in enumerate(ordered)})

    def __len__(self):
        return len(self.states)


def build_spaces(topo: Topology, params: ProtocolParams) -> Dict[str, StateSpace]:
    return {x: StateSpace.build(topo, params, x) for x in topo.nodes}
