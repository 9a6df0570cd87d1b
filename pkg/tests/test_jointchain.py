"""Exact joint chain: stochasticity, stationarity, marginal structure."""
import numpy as np
import pytest
import scipy.sparse as sp

from dcfmodel.errors import NumericalError, StateSpaceTooLarge
from dcfmodel.fixtures import hidden_terminal, triangle, two_node
from dcfmodel.jointchain import (JointChain, build_joint_chain, export_edges,
                                 stationary)
from dcfmodel.params import default_params
from dcfmodel.protocol import begins, local_next
from dcfmodel.states import Act, NodeState, idle
from dcfmodel.topology import QueueMode, QueueSpec, Topology


@pytest.fixture(scope="module")
def chains():
    params = default_params(0)
    out = {}
    for name, build in (("two-node", two_node), ("triangle", triangle),
                        ("hidden", hidden_terminal)):
        chain = build_joint_chain(build(), params)
        out[name] = (chain, stationary(chain))
    return out


def test_rows_sum_to_one(chains):
    for chain, _ in chains.values():
        rows = np.asarray(chain.matrix.sum(axis=1)).ravel()
        assert np.max(np.abs(rows - 1.0)) <= 1e-12


def test_stationary_residual(chains):
    for chain, _ in chains.values():
        v = chain.stationary_vector
        assert v is not None
        assert np.all(v >= 0)
        assert abs(v.sum() - 1.0) <= 1e-12
        res = np.max(np.abs(chain.matrix.T @ v - v))
        assert res <= 1e-12


def test_marginals_normalized(chains):
    for _, marg in chains.values():
        for x, d in marg.items():
            assert abs(d.total() - 1.0) <= 1e-12


def test_symmetric_marginals_identical(chains):
    from dcfmodel.equilibrium import relabel_state
    chain, marg = chains["two-node"]
    swap = {"x1": "x2", "x2": "x1"}
    mapped = {relabel_state(s, swap): p for s, p in marg["x1"].probs.items()}
    keys = set(mapped) | set(marg["x2"].probs)
    for s in keys:
        assert mapped.get(s, 0.0) == pytest.approx(
            marg["x2"].probs.get(s, 0.0), abs=1e-12)


def test_sender_receiver_mass_balance(chains):
    chain, marg = chains["two-node"]
    for j in range(chain.params.t_data + 1):
        tx = sum(p for s, p in marg["x1"].probs.items()
                 if s.action is Act.SEND_DATA and s.timer == j)
        rx = sum(p for s, p in marg["x2"].probs.items()
                 if s.action is Act.RECV_DATA and s.timer == j)
        assert tx == pytest.approx(rx, abs=1e-14)


def test_marginal_consistency(chains):
    chain, marg = chains["triangle"]
    v = chain.stationary_vector
    for i, x in enumerate(chain.topo.nodes):
        agg = {}
        for idx, js in enumerate(chain.states):
            if v[idx] > 0:
                agg[js[i]] = agg.get(js[i], 0.0) + v[idx]
        assert sum(agg.values()) == pytest.approx(1.0, abs=1e-12)
        for s, p in agg.items():
            assert marg[x].probs[s] == pytest.approx(p, abs=1e-15)


def test_simultaneous_rts_starts_jam_the_receiver(chains):
    # whenever two nodes commit an RTS at once, every common listener
    # moves to the unidentified-busy state next slot
    chain, _ = chains["triangle"]
    topo, params = chain.topo, chain.params
    hits = 0
    for js in chain.states:
        world = dict(zip(topo.nodes, js))
        starters = {x for x, s in world.items()
                    if begins(s) is not None or False}
        starters = {x for x in starters}
        committed = {x for x, s in world.items()
                     if s.action is Act.BACKOFF and s.counter == 0}
        if len(committed) < 2:
            continue
        hits += 1
        for x, s in world.items():
            if s.action in (Act.BACKOFF, Act.IDLE) and x not in committed:
                nbr = {z: world[z] for z in topo.neighbors[x]}
                branches = local_next(topo, params, x, s, nbr)
                assert len(branches) == 1
                assert branches[0][1].action is Act.BUSY
    assert hits > 0


def test_single_sink_absorbs(chains=None):
    topo = Topology(nodes=("a",), neighbors={"a": frozenset()},
                    queues={"a": QueueSpec(QueueMode.SINK)}, routing={})
    chain = build_joint_chain(topo, default_params(0))
    marg = stationary(chain)
    assert len(chain) == 1
    assert marg["a"].probs == {idle(): 1.0}


def test_cap_enforced():
    with pytest.raises(StateSpaceTooLarge):
        build_joint_chain(triangle(), default_params(0), cap=100)


def test_multiple_recurrent_classes_detected():
    params = default_params(0)
    topo = two_node()
    # hand-built two-state chain with two absorbing states
    s = (idle(), idle())
    fake = JointChain(topo, params, [s, s], {}, sp.csr_matrix(np.eye(2)),
                      np.array([0.5, 0.5]))
    with pytest.raises(NumericalError):
        stationary(fake)


def test_doubly_stochastic_toy_is_uniform():
    params = default_params(0)
    topo = two_node()
    P = np.array([[0.5, 0.25, 0.25], [0.25, 0.5, 0.25], [0.25, 0.25, 0.5]])
    states = [(NodeState(0, k, Act.BACKOFF, 0, "x2", -1), idle())
              for k in (1, 2, 3)]
    fake = JointChain(topo, params, states, {}, sp.csr_matrix(P),
                      np.array([1.0, 0.0, 0.0]))
    keep_stationary = stationary(fake)
    assert np.allclose(fake.stationary_vector, 1 / 3)


def test_export_edges_roundtrippable(tmp_path, chains):
    chain, _ = chains["two-node"]
    path = tmp_path / "edges.txt"
    export_edges(chain, path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("#")
    total = {}
    for line in lines[1:]:
        src, dst, p, tags = line.split(" ", 3)
        total[int(src)] = total.get(int(src), 0.0) + float(p)
        assert "=" in tags
    for s, tot in total.items():
        assert tot == pytest.approx(1.0, abs=1e-9)


def test_runtime_budget(chains):
    import time
    params = default_params(0)
    for build in (two_node, triangle):
        t0 = time.time()
        chain = build_joint_chain(build(), params)
        stationary(chain)
        assert time.time() - t0 <= 10.0
