"""State-space enumeration checked against forward reachability."""
import pytest

from dcfmodel.equilibrium import _NodeSystem, initial_distribution
from dcfmodel.errors import ConfigurationError
from dcfmodel.fixtures import hidden_terminal, triangle, two_node
from dcfmodel.params import default_params
from dcfmodel.states import Act, idle
from dcfmodel.statespace import StateSpace, enumerate_states
from dcfmodel.topology import QueueMode, QueueSpec, Topology


def bfs_reachable(topo, params, x):
    """Closure of the labeled transition relation from the initial states."""
    space = StateSpace.build(topo, params, x)
    ns = _NodeSystem(topo, params, x, space)
    out_edges = {}
    for src, dst, _, _ in ns.edges:
        out_edges.setdefault(src, set()).add(dst)
    seeds = {space.index[s] for s in initial_distribution(topo, params)[x].probs}
    seen = set(seeds)
    stack = list(seeds)
    while stack:
        i = stack.pop()
        for j in out_edges.get(i, ()):
            if j not in seen:
                seen.add(j)
                stack.append(j)
    return {space.states[i] for i in seen}


@pytest.mark.parametrize("name,build", [("two-node", two_node),
                                        ("triangle", triangle),
                                        ("hidden", hidden_terminal)])
@pytest.mark.parametrize("m", [0, 2])
def test_enumeration_matches_forward_reachability(name, build, m):
    topo = build()
    params = default_params(m)
    for x in topo.nodes:
        assert enumerate_states(topo, params, x) == bfs_reachable(topo, params, x)


def test_two_node_state_count():
    # hand count, m=0 w=3: backoff 4; per counter 1..3 a receive chain of
    # 2+2+6 states; send side 2+2+3; data send 6  ->  4 + 30 + 7 + 6 = 47
    topo = two_node()
    assert len(enumerate_states(topo, default_params(0), "x1")) == 47


def test_isolated_sink_collapses_to_idle():
    topo = Topology(nodes=("a",), neighbors={"a": frozenset()},
                    queues={"a": QueueSpec(QueueMode.SINK)}, routing={})
    assert enumerate_states(topo, default_params(0), "a") == frozenset({idle()})


def test_stage_bound_respected():
    for m in (0, 1, 2):
        params = default_params(m)
        for topo in (two_node(), hidden_terminal()):
            for x in topo.nodes:
                assert all(s.stage <= m
                           for s in enumerate_states(topo, params, x))


def test_every_state_admissible():
    params = default_params(2)
    for topo in (two_node(), triangle(), hidden_terminal()):
        for x in topo.nodes:
            for s in enumerate_states(topo, params, x):
                s.check_admissible(params)


def test_unknown_node_rejected():
    with pytest.raises(ConfigurationError):
        enumerate_states(two_node(), default_params(0), "nope")


def test_sink_gets_base_layer_only():
    topo = hidden_terminal()
    states = enumerate_states(topo, default_params(2), "x2")
    assert all(s.qlen == 0 and s.stage == 0 and s.counter == 0
               for s in states)
    assert all(s.action is not Act.BACKOFF for s in states)


def test_finite_queue_layers():
    topo = Topology(
        nodes=("a", "b"),
        neighbors={"a": frozenset({"b"}), "b": frozenset({"a"})},
        queues={"a": QueueSpec(QueueMode.FINITE, limit=2),
                "b": QueueSpec(QueueMode.SATURATED)},
        routing={("a", "b"): 1.0, ("b", "a"): 1.0})
    params = default_params(0)
    states = enumerate_states(topo, params, "a")
    layers = {s.qlen for s in states}
    assert layers == {0, 1, 2}
    # closure still holds with layer coupling
    assert states == bfs_reachable(topo, params, "a")
