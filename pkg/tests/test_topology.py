import pytest

from dcfmodel.errors import ConfigurationError
from dcfmodel.fixtures import hidden_terminal, triangle, two_node
from dcfmodel.topology import (QueueMode, QueueSpec, Topology, from_positions)


def test_fixture_shapes():
    t2 = two_node()
    assert t2.neighbors["x1"] == frozenset({"x2"})
    assert t2.routing[("x1", "x2")] == 1.0

    t3 = triangle()
    assert all(len(t3.neighbors[x]) == 2 for x in t3.nodes)
    assert t3.routing[("x1", "x2")] == 0.5

    th = hidden_terminal()
    assert th.queues["x2"].mode is QueueMode.SINK
    assert "x3" not in th.neighbors["x1"]


def test_hidden_pair_accessor():
    th = hidden_terminal()
    # definition: neighbors of x hidden from the other node
    assert th.hidden_from("x2", "x1") == frozenset({"x3"})
    assert th.hidden_from("x2", "x3") == frozenset({"x1"})
    assert th.hidden_from("x1", "x2") == frozenset()
    t3 = triangle()
    for x in t3.nodes:
        for z in t3.neighbors[x]:
            assert t3.hidden_from(x, z) == frozenset()


def test_asymmetric_adjacency_rejected():
    with pytest.raises(ConfigurationError):
        Topology(nodes=("a", "b"),
                 neighbors={"a": frozenset({"b"}), "b": frozenset()},
                 queues={"a": QueueSpec(QueueMode.SATURATED),
                         "b": QueueSpec(QueueMode.SINK)},
                 routing={("a", "b"): 1.0})


def test_self_loop_rejected():
    with pytest.raises(ConfigurationError):
        Topology(nodes=("a",), neighbors={"a": frozenset({"a"})},
                 queues={"a": QueueSpec(QueueMode.SINK)}, routing={})


def test_routing_must_sum_to_one():
    with pytest.raises(ConfigurationError):
        Topology(nodes=("a", "b"),
                 neighbors={"a": frozenset({"b"}), "b": frozenset({"a"})},
                 queues={"a": QueueSpec(QueueMode.SATURATED),
                         "b": QueueSpec(QueueMode.SINK)},
                 routing={("a", "b"): 0.25})


def test_routing_only_to_neighbors():
    with pytest.raises(ConfigurationError):
        Topology(nodes=("a", "b", "c"),
                 neighbors={"a": frozenset({"b"}), "b": frozenset({"a"}),
                            "c": frozenset()},
                 queues={"a": QueueSpec(QueueMode.SATURATED),
                         "b": QueueSpec(QueueMode.SINK),
                         "c": QueueSpec(QueueMode.SINK)},
                 routing={("a", "c"): 1.0})


def test_from_positions_thresholds_distances():
    pts = {"a": (0.0, 0.0), "b": (100.0, 0.0), "c": (220.0, 0.0)}
    queues = {"a": QueueSpec(QueueMode.SATURATED),
              "b": QueueSpec(QueueMode.SINK),
              "c": QueueSpec(QueueMode.SATURATED)}
    routing = {("a", "b"): 1.0, ("c", "b"): 1.0}
    topo = from_positions(pts, 150.0, queues, routing)
    assert topo.neighbors["b"] == frozenset({"a", "c"})
    assert topo.neighbors["a"] == frozenset({"b"})  # a-c out of range
