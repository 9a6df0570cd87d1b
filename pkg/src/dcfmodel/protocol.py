"""Slot-level protocol semantics.

`local_next` maps one node's state, given the current states of its
neighbors, to the distribution of its next state.  All randomness is
explicit in the returned branches: uniform backoff draws and the routing
choice of a fresh head-of-line receiver.  The simulator samples from the
branches, the joint-chain oracle enumerates them, so both engines share
one definition of the protocol.

Slot convention: states describe activity during the current slot, and a
node that will start transmitting next slot is recognizable now (backoff
counter 0, or final timer step of a reception it must answer).
"""
from __future__ import annotations

from typing import Dict, List, Optional, Tuple

from .params import ProtocolParams
from .states import SATURATED, Act, NodeState, idle
from .topology import QueueMode, Topology

Branch = Tuple[float, NodeState]

# what a neighbor state implies for next slot: None, or (packet, target)
def begins(s: NodeState) -> Optional[Tuple[str, Optional[str]]]:
    if s.action is Act.BACKOFF and s.counter == 0:
        return ("rts", s.recv)
    if s.action is Act.RECV_RTS and s.timer == 0:
        return ("cts", s.peer)
    if s.action is Act.RECV_CTS and s.timer == 0:
        return ("data", s.peer)
    return None


def _new_packet_branches(topo: Topology, params: ProtocolParams, x: str,
                         qlen_after: int) -> List[Branch]:
    """Fresh head-of-line packet: draw receiver and stage-0 counter."""
    if qlen_after == 0:
        return [(1.0, idle())]
    out = []
    for y in topo.receivers(x):
        p = topo.routing[(x, y)] / params.w
        for k in range(1, params.w + 1):
            out.append((p, NodeState(0, k, Act.BACKOFF, 0, y, qlen_after)))
    return out


def _retry_branches(params: ProtocolParams, stage: int, recv: str,
                    qlen: int) -> List[Branch]:
    wnd = params.window(stage)
    return [(1.0 / wnd, NodeState(stage, k, Act.BACKOFF, 0, recv, qlen))
            for k in range(1, wnd + 1)]


def _pop_queue(topo: Topology, params: ProtocolParams, x: str,
               qlen: int) -> List[Branch]:
    """Head-of-line packet leaves the queue (success or drop)."""
    if qlen == SATURATED:
        return _new_packet_branches(topo, params, x, SATURATED)
    return _new_packet_branches(topo, params, x, qlen - 1)


def _resume(state: NodeState) -> NodeState:
    """Back to counting (or idle) after a wait, counter untouched."""
    if not state.queue_occupied:
        return idle()
    return NodeState(state.stage, state.counter, Act.BACKOFF, 0,
                     state.recv, state.qlen)


def local_next(topo: Topology, params: ProtocolParams, x: str,
               state: NodeState,
               nbr: Dict[str, NodeState]) -> List[Branch]:
    """Branch distribution of x's next state given neighbor states."""
    a = state.action
    nbrs = topo.neighbors[x]

    if a in (Act.IDLE, Act.BACKOFF) and (a is Act.IDLE or state.counter >= 1):
        if any(nbr[z].is_transmitting for z in nbrs):
            # mid-flight signal: x re-entered listening on a busy channel
            return [(1.0, NodeState(state.stage, state.counter, Act.BUSY, 0,
                                    state.recv, state.qlen))]
        starts = [(z, begins(nbr[z])) for z in sorted(nbrs)]
        starts = [(z, b) for z, b in starts if b is not None]
        if not starts:
            if a is Act.IDLE:
                return [(1.0, state)]
            return [(1.0, NodeState(state.stage, state.counter - 1, Act.BACKOFF,
                                    0, state.recv, state.qlen))]
        if len(starts) == 1:
            z, (packet, target) = starts[0]
            base = (state.stage, state.counter, state.recv, state.qlen)
            if packet == "rts" and target == x:
                return [(1.0, NodeState(base[0], base[1], Act.RECV_RTS,
                                        params.t_rts, base[2], base[3], z))]
            if packet == "rts":
                return [(1.0, NodeState(base[0], base[1], Act.OVERHEAR_RTS,
                                        params.t_rts, base[2], base[3], z))]
            if packet == "cts" and target != x and target not in nbrs:
                return [(1.0, NodeState(base[0], base[1], Act.OVERHEAR_CTS,
                                        params.t_cts, base[2], base[3], z))]
        # simultaneous starts, a DATA frame, or a CTS whose exchange x missed
        return [(1.0, NodeState(state.stage, state.counter, Act.BUSY, 0,
                                state.recv, state.qlen))]

    if a is Act.BACKOFF:  # counter == 0: committed transmission
        return [(1.0, NodeState(state.stage, 0, Act.SEND_RTS, params.t_rts,
                                state.recv, state.qlen, state.recv))]

    if a in (Act.RECV_RTS, Act.OVERHEAR_RTS, Act.OVERHEAR_CTS, Act.RECV_DATA):
        sender = state.peer
        if state.timer >= 1:
            jam = any(
                nbr[z].is_transmitting or begins(nbr[z]) is not None
                for z in topo.hidden_from(x, sender))
            if jam:
                return [(1.0, NodeState(state.stage, state.counter, Act.BUSY,
                                        0, state.recv, state.qlen))]
            return [(1.0, NodeState(state.stage, state.counter, a,
                                    state.timer - 1, state.recv, state.qlen,
                                    sender))]
        if a is Act.RECV_RTS:
            return [(1.0, NodeState(state.stage, state.counter, Act.SEND_CTS,
                                    params.t_cts, state.recv, state.qlen,
                                    sender))]
        if a is Act.OVERHEAR_RTS:
            return [(1.0, NodeState(state.stage, state.counter, Act.NAV,
                                    params.t_navr, state.recv, state.qlen,
                                    sender))]
        if a is Act.OVERHEAR_CTS:
            return [(1.0, NodeState(state.stage, state.counter, Act.NAV,
                                    params.t_navc, state.recv, state.qlen,
                                    sender))]
        # RECV_DATA complete: handshake done, packet joins the queue
        if state.qlen == SATURATED:
            return [(1.0, _resume(state))]
        if topo.queues[x].mode is QueueMode.SINK:
            return [(1.0, idle())]  # sinks consume what they receive
        if state.qlen == 0:
            return _new_packet_branches(topo, params, x, 1)
        limit = topo.queues[x].limit
        grown = min(state.qlen + 1, limit)  # full queue drops the payload
        return [(1.0, NodeState(state.stage, state.counter, Act.BACKOFF, 0,
                                state.recv, grown))]

    if a is Act.SEND_RTS:
        if state.timer >= 1:
            return [(1.0, NodeState(state.stage, 0, a, state.timer - 1,
                                    state.recv, state.qlen, state.peer))]
        y = state.peer
        ys = nbr[y]
        if ys.action is Act.RECV_RTS and ys.peer == x and ys.timer == 0:
            return [(1.0, NodeState(state.stage, 0, Act.RECV_CTS, params.t_cts,
                                    state.recv, state.qlen, y))]
        return [(1.0, NodeState(state.stage, 0, Act.TIMEOUT, params.t_out,
                                state.recv, state.qlen))]

    if a is Act.RECV_CTS:
        y = state.peer
        if state.timer >= 1:
            jam = any(
                nbr[z].is_transmitting or begins(nbr[z]) is not None
                for z in topo.hidden_from(x, y))
            if jam:
                return [(1.0, NodeState(state.stage, 0, Act.TIMEOUT,
                                        params.t_out - state.timer,
                                        state.recv, state.qlen))]
            return [(1.0, NodeState(state.stage, 0, a, state.timer - 1,
                                    state.recv, state.qlen, y))]
        # CTS complete; contention window resets at the DATA handshake
        return [(1.0, NodeState(0, 0, Act.SEND_DATA, params.t_data,
                                state.recv, state.qlen, y))]

    if a is Act.SEND_CTS:
        if state.timer >= 1:
            return [(1.0, NodeState(state.stage, state.counter, a,
                                    state.timer - 1, state.recv, state.qlen,
                                    state.peer))]
        z = state.peer
        zs = nbr[z]
        if zs.action is Act.RECV_CTS and zs.peer == x and zs.timer == 0:
            return [(1.0, NodeState(state.stage, state.counter, Act.RECV_DATA,
                                    params.t_data, state.recv, state.qlen, z))]
        return [(1.0, _resume(state))]

    if a is Act.SEND_DATA:
        if state.timer >= 1:
            return [(1.0, NodeState(0, 0, a, state.timer - 1, state.recv,
                                    state.qlen, state.peer))]
        return _pop_queue(topo, params, x, state.qlen)

    if a is Act.NAV:
        if state.timer >= 1:
            return [(1.0, NodeState(state.stage, state.counter, a,
                                    state.timer - 1, state.recv, state.qlen,
                                    state.peer))]
        clear = not any(nbr[z].is_transmitting or begins(nbr[z]) is not None
                        for z in nbrs)
        if clear:
            return [(1.0, _resume(state))]
        return [(1.0, state)]

    if a is Act.BUSY:
        ending = any(nbr[z].is_transmitting and nbr[z].timer == 0 for z in nbrs)
        mid = any(nbr[z].is_transmitting and nbr[z].timer >= 1 for z in nbrs)
        starting = any(begins(nbr[z]) is not None for z in nbrs)
        if ending and not mid and not starting:
            return [(1.0, _resume(state))]
        return [(1.0, state)]

    if a is Act.TIMEOUT:
        if state.timer >= 1:
            return [(1.0, NodeState(state.stage, 0, a, state.timer - 1,
                                    state.recv, state.qlen))]
        blocked = any(
            nbr[z].is_transmitting
            or (nbr[z].action is Act.BACKOFF and nbr[z].counter == 0)
            for z in nbrs)
        if blocked:
            return [(1.0, state)]
        if state.stage < params.m:
            return _retry_branches(params, state.stage + 1, state.recv,
                                   state.qlen)
        return _pop_queue(topo, params, x, state.qlen)  # retry limit: drop

    raise AssertionError(f"unhandled action {a}")


def classify_pair(before: NodeState, after: NodeState) -> str:
    """Name the diagram edge taken between two consecutive states.

    Deterministic chain steps are reported as "t", transmission launches
    and handshake completions as "tx"/"done".
    """
    a, b = before.action, after.action
    if a in (Act.IDLE, Act.BACKOFF) and (a is Act.IDLE or before.counter >= 1):
        tag = {
            Act.IDLE: "1a", Act.BACKOFF: "1a", Act.RECV_RTS: "1b",
            Act.OVERHEAR_RTS: "1c", Act.OVERHEAR_CTS: "1d", Act.BUSY: "1e",
        }.get(b)
        assert tag is not None, f"unclassifiable edge {before} -> {after}"
        return tag
    if a is Act.BACKOFF:
        return "tx"
    if a is Act.RECV_RTS:
        return "2a" if b is a else ("2b" if b is Act.BUSY else "tx")
    if a is Act.OVERHEAR_RTS:
        return "3a" if b is a else ("3b" if b is Act.BUSY else "t")
    if a is Act.OVERHEAR_CTS:
        return "4a" if b is a else ("4b" if b is Act.BUSY else "t")
    if a is Act.SEND_CTS:
        if before.timer >= 1:
            return "t"
        return "5a" if b is Act.RECV_DATA else "5b"
    if a is Act.RECV_DATA:
        return "6a" if b is a else ("6b" if b is Act.BUSY else "done")
    if a is Act.NAV:
        if before.timer >= 1:
            return "t"
        return "7b" if b is Act.NAV else "7a"
    if a is Act.BUSY:
        return "8b" if b is Act.BUSY else "8a"
    if a is Act.SEND_RTS:
        if before.timer >= 1:
            return "t"
        return "9a" if b is Act.RECV_CTS else "9b"
    if a is Act.RECV_CTS:
        if before.timer >= 1:
            return "10a" if b is a else "10b"
        return "tx"
    if a is Act.TIMEOUT:
        if before.timer >= 1:
            return "t"
        return "11b" if b is Act.TIMEOUT else "11a"
    if a is Act.SEND_DATA:
        return "t" if before.timer >= 1 else "done"
    raise AssertionError(f"unclassifiable edge {before} -> {after}")


def check_world(topo: Topology, params: ProtocolParams,
                world: Dict[str, NodeState]) -> None:
    """Pairwise consistency of a joint state; raises AssertionError."""
    for x, s in world.items():
        s.check_admissible(params)
        if s.action in (Act.RECV_RTS, Act.RECV_CTS, Act.RECV_DATA,
                        Act.OVERHEAR_RTS, Act.OVERHEAR_CTS):
            z = s.peer
            want = {Act.RECV_RTS: Act.SEND_RTS, Act.RECV_CTS: Act.SEND_CTS,
                    Act.RECV_DATA: Act.SEND_DATA,
                    Act.OVERHEAR_RTS: Act.SEND_RTS,
                    Act.OVERHEAR_CTS: Act.SEND_CTS}[s.action]
            zs = world[z]
            assert zs.action is want and zs.timer == s.timer, \
                f"{x} in {s.action} out of lockstep with {z}: {zs}"
            if s.action in (Act.RECV_RTS, Act.RECV_CTS, Act.RECV_DATA):
                target = zs.recv if want is Act.SEND_RTS else zs.peer
                assert target == x, f"{x} receiving a packet addressed to {target}"
