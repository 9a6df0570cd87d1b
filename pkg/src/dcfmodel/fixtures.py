"""Built-in example networks and their symmetry structure."""
from __future__ import annotations

from typing import Dict, List, Optional, Tuple

from .errors import ConfigurationError
from .params import ProtocolParams, default_params
from .topology import QueueMode, QueueSpec, Topology

FIXTURE_NAMES = ("two-node", "triangle", "hidden-terminal")


def two_node() -> Topology:
    """Two saturated nodes transmitting to each other."""
    sat = QueueSpec(QueueMode.SATURATED)
    return Topology(
        nodes=("x1", "x2"),
        neighbors={"x1": frozenset({"x2"}), "x2": frozenset({"x1"})},
        queues={"x1": sat, "x2": sat},
        routing={("x1", "x2"): 1.0, ("x2", "x1"): 1.0},
    )


def triangle() -> Topology:
    """Three mutually adjacent saturated nodes, receivers chosen at random."""
    sat = QueueSpec(QueueMode.SATURATED)
    nodes = ("x1", "x2", "x3")
    nbrs = {x: frozenset(n for n in nodes if n != x) for x in nodes}
    routing = {(x, y): 0.5 for x in nodes for y in nodes if x != y}
    return Topology(nodes=nodes, neighbors=nbrs,
                    queues={x: sat for x in nodes}, routing=routing)


def hidden_terminal() -> Topology:
    """Two saturated senders, hidden from each other, sharing a sink."""
    sat = QueueSpec(QueueMode.SATURATED)
    return Topology(
        nodes=("x1", "x2", "x3"),
        neighbors={"x1": frozenset({"x2"}),
                   "x2": frozenset({"x1", "x3"}),
                   "x3": frozenset({"x2"})},
        queues={"x1": sat, "x2": QueueSpec(QueueMode.SINK), "x3": sat},
        routing={("x1", "x2"): 1.0, ("x3", "x2"): 1.0},
    )


_BUILDERS = {"two-node": two_node, "triangle": triangle,
             "hidden-terminal": hidden_terminal}


def fixture(name: str) -> Topology:
    try:
        return _BUILDERS[name]()
    except KeyError:
        raise ConfigurationError(
            f"unknown fixture {name!r}; expected one of {FIXTURE_NAMES}") from None


def fixture_symmetry(name: str) -> Optional[List[List[Tuple[str, Dict[str, str]]]]]:
    """Symmetry classes: groups of (node, relabeling-from-representative).

    The first entry of each group is the representative with the identity
    relabeling.
    """
    if name == "two-node":
        return [[("x1", {"x1": "x1", "x2": "x2"}),
                 ("x2", {"x1": "x2", "x2": "x1"})]]
    if name == "triangle":
        ident = {"x1": "x1", "x2": "x2", "x3": "x3"}
        return [[("x1", ident),
                 ("x2", {"x1": "x2", "x2": "x3", "x3": "x1"}),
                 ("x3", {"x1": "x3", "x2": "x1", "x3": "x2"})]]
    if name == "hidden-terminal":
        ident = {"x1": "x1", "x2": "x2", "x3": "x3"}
        return [[("x1", ident), ("x3", {"x1": "x3", "x2": "x2", "x3": "x1"})],
                [("x2", ident)]]
    return None


def fixture_params(name: str, m: int = 0) -> ProtocolParams:
    return default_params(m=m)
