"""Equilibrium solver: balance structure, convergence, chain equalities."""
import pytest

from dcfmodel.equilibrium import (build_system, initial_distribution,
                                  residual, solve)
from dcfmodel.errors import ConfigurationError
from dcfmodel.fixtures import (fixture_symmetry, hidden_terminal, triangle,
                               two_node)
from dcfmodel.params import default_params
from dcfmodel.states import SATURATED, Act, NodeState, idle
from dcfmodel.topology import QueueMode, QueueSpec, Topology


def test_initial_distribution_examples():
    params = default_params(0)
    d = initial_distribution(two_node(), params)["x1"]
    assert len(d.probs) == 3
    for k in (1, 2, 3):
        s = NodeState(0, k, Act.BACKOFF, 0, "x2", SATURATED)
        assert d.probs[s] == pytest.approx(1 / 3)

    d = initial_distribution(triangle(), params)["x1"]
    assert len(d.probs) == 6
    for y in ("x2", "x3"):
        for k in (1, 2, 3):
            s = NodeState(0, k, Act.BACKOFF, 0, y, SATURATED)
            assert d.probs[s] == pytest.approx(1 / 6)

    d = initial_distribution(hidden_terminal(), params)["x2"]
    assert d.probs == {idle(): 1.0}


def test_isolated_sink_converges_immediately():
    topo = Topology(nodes=("a",), neighbors={"a": frozenset()},
                    queues={"a": QueueSpec(QueueMode.SINK)}, routing={})
    rep = solve(build_system(topo, default_params(0)))
    assert rep.converged and rep.iterations == 1
    assert rep.pi["a"].probs == {idle(): 1.0}


def test_backlogged_node_without_neighbors_rejected():
    topo = Topology(nodes=("a", "b"),
                    neighbors={"a": frozenset({"b"}), "b": frozenset({"a"})},
                    queues={"a": QueueSpec(QueueMode.SATURATED),
                            "b": QueueSpec(QueueMode.SINK)},
                    routing={("a", "b"): 1.0})
    build_system(topo, default_params(0))  # fine
    with pytest.raises(ConfigurationError):
        build_system(topo, default_params(0), wait_convention="bogus")


@pytest.mark.parametrize("m", [0, 2])
def test_two_node_converges_with_symmetry(m):
    topo = two_node()
    params = default_params(m)
    system = build_system(topo, params, symmetry=fixture_symmetry("two-node"))
    rep = solve(system, tolerance=1e-10)
    assert rep.converged
    assert rep.residual <= 1e-8
    assert rep.normalization_error <= 1e-10
    # tied nodes identical after partner relabeling
    from dcfmodel.equilibrium import relabel_state
    swap = {"x1": "x2", "x2": "x1"}
    mapped = {relabel_state(s, swap): p for s, p in rep.pi["x1"].probs.items()}
    assert mapped == rep.pi["x2"].probs


def test_symmetry_off_still_matches_tied_solution():
    topo = two_node()
    params = default_params(0)
    tied = solve(build_system(topo, params,
                              symmetry=fixture_symmetry("two-node")))
    free = solve(build_system(topo, params))
    assert free.converged
    assert tied.pi["x1"].l1(free.pi["x1"]) < 1e-6


def test_chain_equalities_hold_exactly():
    # timer chains are reconstructed multiplicatively from the anchors
    topo = two_node()
    params = default_params(0)
    system = build_system(topo, params, symmetry=fixture_symmetry("two-node"))
    rep = solve(system)
    probs = rep.pi["x1"].probs
    p5a = rep.label_values["x1"][("5a", "x2", None)]

    def p(action, k, j):
        return probs.get(NodeState(0, k, action, j, "x2", SATURATED,
                                   "x2" if action is not Act.TIMEOUT else None),
                         0.0)

    for k in (1, 2, 3):
        # no hidden nodes: 2a and 6a are exactly 1, so each sub-chain is
        # flat and the DATA chain carries the CTS-answer factor
        base = p(Act.RECV_RTS, k, 1)
        assert base > 0
        for action, tmax in ((Act.RECV_RTS, params.t_rts),
                             (Act.SEND_CTS, params.t_cts)):
            for j in range(tmax + 1):
                assert p(action, k, j) == pytest.approx(base, rel=1e-12)
        for j in range(params.t_data + 1):
            assert p(Act.RECV_DATA, k, j) == pytest.approx(p5a * base,
                                                           rel=1e-12)
    # send chain: every RTS slot carries the launch mass
    launch = probs[NodeState(0, 0, Act.BACKOFF, 0, "x2", SATURATED)]
    for j in range(params.t_rts + 1):
        assert probs[NodeState(0, 0, Act.SEND_RTS, j, "x2", SATURATED,
                               "x2")] == pytest.approx(launch, rel=1e-12)


def test_residual_certificate():
    topo = triangle()
    params = default_params(1)
    system = build_system(topo, params, symmetry=fixture_symmetry("triangle"))
    rep = solve(system)
    assert rep.converged
    pi = {x: system.kernel.to_vector(rep.pi[x]) for x in topo.nodes}
    worst, norm = residual(system, pi)
    assert worst <= 1e-8
    assert norm <= 1e-10


def test_success_probability_caches():
    topo = two_node()
    params = default_params(0)
    system = build_system(topo, params, symmetry=fixture_symmetry("two-node"))
    rep = solve(system)
    pi = {x: system.kernel.to_vector(rep.pi[x]) for x in topo.nodes}
    ps = system.success_send_prob(pi, "x1", "x2")
    pr = system.success_receive_prob(pi, "x1", "x2")
    # no hidden nodes: both reduce to the handshake-answer probabilities,
    # and the CTS answer is certain in the limit at the symmetric point
    assert 0 < ps < 1
    assert pr == pytest.approx(1.0, abs=1e-6)


def test_unknown_count_reflects_symmetry():
    topo = two_node()
    params = default_params(0)
    free = build_system(topo, params)
    tied = build_system(topo, params, symmetry=fixture_symmetry("two-node"))
    assert free.unknown_count == 2 * tied.unknown_count


def test_hidden_terminal_sink_balance():
    # the sink's idle state balances against its busy and receive returns
    topo = hidden_terminal()
    params = default_params(0)
    system = build_system(topo, params,
                          symmetry=fixture_symmetry("hidden-terminal"))
    rep = solve(system)
    assert rep.converged
    probs = rep.pi["x2"].probs
    assert probs[idle()] > 0.1
    total_busy = sum(p for s, p in probs.items() if s.action is Act.BUSY)
    assert total_busy > 0
