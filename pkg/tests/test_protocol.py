"""Slot semantics traces: collisions, hidden interference, lock-step."""
import pytest

from dcfmodel.fixtures import hidden_terminal, two_node
from dcfmodel.params import default_params
from dcfmodel.protocol import begins, check_world, classify_pair, local_next
from dcfmodel.states import SATURATED, Act, NodeState, backoff, idle


def step_world(topo, params, world, choose=None):
    """Advance a fully deterministic world one slot (asserts no branching
    unless a chooser is supplied)."""
    nxt = {}
    for x in topo.nodes:
        nbr = {z: world[z] for z in topo.neighbors[x]}
        branches = local_next(topo, params, x, world[x], nbr)
        if len(branches) == 1:
            nxt[x] = branches[0][1]
        else:
            assert choose is not None, f"unexpected branching at {x}"
            nxt[x] = choose(x, branches)
    return nxt


def test_simultaneous_rts_collide_and_both_wait():
    topo = two_node()
    params = default_params(1)
    w = {"x1": backoff(0, 0, "x2", SATURATED),
         "x2": backoff(0, 0, "x1", SATURATED)}
    w = step_world(topo, params, w)
    assert w["x1"].action is Act.SEND_RTS and w["x2"].action is Act.SEND_RTS
    for _ in range(params.t_rts):
        w = step_world(topo, params, w)
    assert w["x1"].timer == 0
    w = step_world(topo, params, w)
    # neither decoded: both in CTS timeout
    assert w["x1"].action is Act.TIMEOUT and w["x1"].timer == params.t_out
    assert w["x2"].action is Act.TIMEOUT
    for _ in range(params.t_out):
        w = step_world(topo, params, w)
    assert w["x1"].timer == 0
    # channel quiet: both redraw at the next stage
    picks = {}

    def choose(x, branches):
        # retry at stage 1 with some counter
        states = [s for _, s in branches]
        assert all(s.stage == 1 and s.action is Act.BACKOFF for s in states)
        picks[x] = states[0]
        return states[0]

    w = step_world(topo, params, w, choose)
    assert w["x1"].stage == 1 and w["x2"].stage == 1


def test_clean_handshake_locks_step():
    topo = two_node()
    params = default_params(0)
    w = {"x1": backoff(0, 0, "x2", SATURATED),
         "x2": backoff(0, 2, "x1", SATURATED)}
    seen = []
    for _ in range(2 + 2 + 6):
        w = step_world(topo, params, w)
        check_world(topo, params, w)
        seen.append((w["x1"].action, w["x2"].action))
    assert (Act.SEND_RTS, Act.RECV_RTS) in seen
    assert (Act.RECV_CTS, Act.SEND_CTS) in seen
    assert (Act.SEND_DATA, Act.RECV_DATA) in seen
    # completion: the sender redraws, the receiver's counter survived
    w = step_world(topo, params, w, lambda x, br: br[0][1])
    assert w["x2"] == backoff(0, 2, "x1", SATURATED)
    assert w["x1"].action is Act.BACKOFF and w["x1"].stage == 0


def test_hidden_interferer_corrupts_reception():
    topo = hidden_terminal()
    params = default_params(0)
    # x2 mid-reception of x1's RTS while x3 commits its own RTS
    w = {"x1": NodeState(0, 0, Act.SEND_RTS, 1, "x2", SATURATED, "x2"),
         "x2": NodeState(0, 0, Act.RECV_RTS, 1, None, 0, "x1"),
         "x3": backoff(0, 0, "x2", SATURATED)}
    w = step_world(topo, params, w)
    assert w["x2"].action is Act.BUSY
    assert w["x3"].action is Act.SEND_RTS


def test_cts_reception_at_leaf_always_succeeds():
    topo = hidden_terminal()
    params = default_params(0)
    # x1 has no neighbor besides x2, so its CTS arrives untouched even
    # while the other sender is active
    w = {"x1": NodeState(0, 0, Act.SEND_RTS, 0, "x2", SATURATED, "x2"),
         "x2": NodeState(0, 0, Act.RECV_RTS, 0, None, 0, "x1"),
         "x3": backoff(0, 0, "x2", SATURATED)}
    w = step_world(topo, params, w)
    assert w["x1"].action is Act.RECV_CTS
    assert w["x2"].action is Act.SEND_CTS
    w = step_world(topo, params, w)
    assert w["x1"].action is Act.RECV_CTS and w["x1"].timer == 0
    w = step_world(topo, params, w)
    # stage resets when the data phase begins
    assert w["x1"].action is Act.SEND_DATA and w["x1"].stage == 0


def test_nav_freeze_covers_overheard_exchange():
    topo = hidden_terminal()
    params = default_params(0)
    # x1 overhears the CTS x2 sends to x3 and freezes for the data phase
    w = {"x1": NodeState(0, 2, Act.BACKOFF, 0, "x2", SATURATED),
         "x2": NodeState(0, 0, Act.RECV_RTS, 0, None, 0, "x3"),
         "x3": NodeState(0, 0, Act.SEND_RTS, 0, "x2", SATURATED, "x2")}
    w = step_world(topo, params, w)
    assert w["x1"].action is Act.OVERHEAR_CTS
    for _ in range(params.t_cts):
        w = step_world(topo, params, w)
    w = step_world(topo, params, w)
    assert w["x1"].action is Act.NAV and w["x1"].timer == params.t_navc
    # NAV expires exactly when the data phase ends; one quiet recheck
    for _ in range(params.t_navc):
        w = step_world(topo, params, w)
    assert w["x1"].timer == 0 and w["x3"].action is Act.SEND_DATA \
        and w["x3"].timer == 0
    w = step_world(topo, params, w, lambda x, br: br[0][1])
    assert w["x1"].action is Act.BACKOFF and w["x1"].counter == 2


def test_begins_detection():
    assert begins(backoff(0, 0, "b", 1)) == ("rts", "b")
    assert begins(NodeState(0, 0, Act.RECV_RTS, 0, None, 0, "z")) == \
        ("cts", "z")
    assert begins(NodeState(0, 0, Act.RECV_CTS, 0, "z", 1, "z")) == \
        ("data", "z")
    assert begins(backoff(0, 1, "b", 1)) is None


def test_check_world_catches_lockstep_violation():
    topo = two_node()
    params = default_params(0)
    w = {"x1": NodeState(0, 1, Act.RECV_RTS, 1, "x2", SATURATED, "x2"),
         "x2": backoff(0, 1, "x1", SATURATED)}
    with pytest.raises(AssertionError):
        check_world(topo, params, w)


def test_classify_rejects_garbage():
    with pytest.raises(AssertionError):
        classify_pair(idle(), NodeState(0, 0, Act.SEND_DATA, 5, "b", 1, "b"))
