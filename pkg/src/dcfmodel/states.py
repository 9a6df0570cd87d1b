"""Per-node state tuple and probability distributions over it."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional

from .errors import ConfigurationError, ContractViolation
from .params import ProtocolParams

SATURATED = -1  # queue-length marker for infinite backlog


class Act(Enum):
    """What a node is doing during a slot."""

    IDLE = "idle"
    BACKOFF = "backoff"
    BUSY = "busy"              # unidentified signals sensed, waiting them out
    SEND_RTS = "rts_tx"
    RECV_RTS = "rts_rx"
    OVERHEAR_RTS = "rts_ovh"
    SEND_CTS = "cts_tx"
    RECV_CTS = "cts_rx"
    OVERHEAR_CTS = "cts_ovh"
    SEND_DATA = "data_tx"
    RECV_DATA = "data_rx"
    NAV = "nav"                # deferring for a fixed NAV period
    TIMEOUT = "timeout"        # waiting out the CTS timeout


TRANSMITTING = frozenset({Act.SEND_RTS, Act.SEND_CTS, Act.SEND_DATA})

# Actions that carry a running timer; everything else keeps timer 0.
TIMED = frozenset({
    Act.SEND_RTS, Act.RECV_RTS, Act.OVERHEAR_RTS,
    Act.SEND_CTS, Act.RECV_CTS, Act.OVERHEAR_CTS,
    Act.SEND_DATA, Act.RECV_DATA, Act.NAV, Act.TIMEOUT,
})

# Actions whose state names a partner node.
PARTNERED = frozenset({
    Act.SEND_RTS, Act.RECV_RTS, Act.OVERHEAR_RTS,
    Act.SEND_CTS, Act.RECV_CTS, Act.OVERHEAR_CTS,
    Act.SEND_DATA, Act.RECV_DATA, Act.NAV,
})

ACT_ORDER = {a: i for i, a in enumerate(Act)}


@dataclass(frozen=True)
class NodeState:
    """(backoff stage, backoff counter, action, timer, queue).

    queue is (recv, qlen): the head-of-line receiver and queue length,
    with qlen == SATURATED for infinite backlog and (None, 0) when empty.
    """

    stage: int
    counter: int
    action: Act
    timer: int
    recv: Optional[str]
    qlen: int
    peer: Optional[str] = None

    @property
    def queue_occupied(self) -> bool:
        return self.qlen != 0

    @property
    def is_transmitting(self) -> bool:
        return self.action in TRANSMITTING

    def sort_key(self):
        return (self.stage, self.counter, ACT_ORDER[self.action], self.timer,
                self.peer or "", self.recv or "", self.qlen)

    def check_admissible(self, params: ProtocolParams) -> None:
        """Action/queue/timer consistency rules for a single state."""
        a = self.action
        if not 0 <= self.stage <= params.m:
            raise ContractViolation(f"stage out of range in {self}")
        if not 0 <= self.counter <= params.window(self.stage):
            raise ContractViolation(f"counter out of range in {self}")
        if a not in TIMED and self.timer != 0:
            raise ContractViolation(f"untimed action carries a timer: {self}")
        bound = {
            Act.SEND_RTS: params.t_rts, Act.RECV_RTS: params.t_rts,
            Act.OVERHEAR_RTS: params.t_rts,
            Act.SEND_CTS: params.t_cts, Act.RECV_CTS: params.t_cts,
            Act.OVERHEAR_CTS: params.t_cts,
            Act.SEND_DATA: params.t_data, Act.RECV_DATA: params.t_data,
            Act.TIMEOUT: params.t_out, Act.NAV: params.t_navr,
        }
        if a in bound and not 0 <= self.timer <= bound[a]:
            raise ContractViolation(f"timer out of range in {self}")
        if (self.peer is not None) != (a in PARTNERED):
            raise ContractViolation(f"partner field inconsistent in {self}")
        if a is Act.IDLE and self.queue_occupied:
            raise ContractViolation(f"idle with occupied queue: {self}")
        needs_queue = {Act.BACKOFF, Act.TIMEOUT, Act.SEND_RTS, Act.SEND_DATA}
        if a in needs_queue and not self.queue_occupied:
            raise ContractViolation(f"{a} requires an occupied queue: {self}")
        if (self.recv is None) != (self.qlen == 0):
            raise ContractViolation(f"queue receiver/length mismatch: {self}")


def idle() -> NodeState:
    return NodeState(0, 0, Act.IDLE, 0, None, 0)


def backoff(stage: int, counter: int, recv: str, qlen: int) -> NodeState:
    return NodeState(stage, counter, Act.BACKOFF, 0, recv, qlen)


@dataclass
class Distribution:
    """Probability mass function over one node's states."""

    owner: str
    probs: Dict[NodeState, float]

    def mass(self, predicate) -> float:
        return sum(p for s, p in self.probs.items() if predicate(s))

    def total(self) -> float:
        return sum(self.probs.values())

    def validate(self, support=None, tol: float = 1e-12) -> None:
        for s, p in self.probs.items():
            if not -tol <= p <= 1 + tol:
                raise ConfigurationError(f"probability out of range for {s}: {p}")
            if support is not None and p > 0 and s not in support:
                raise ConfigurationError(f"state outside support: {s}")
        if abs(self.total() - 1.0) > tol:
            raise ConfigurationError(f"distribution of {self.owner} sums to {self.total()}")

    def l1(self, other: "Distribution") -> float:
        keys = set(self.probs) | set(other.probs)
        return sum(abs(self.probs.get(s, 0.0) - other.probs.get(s, 0.0))
                   for s in keys)

    def items_sorted(self):
        return sorted(self.probs.items(), key=lambda kv: kv[0].sort_key())
