"""Aggregation of state distributions into reporting bins.

Backoff states keep (stage, counter) resolution; the transmit-entry state
(counter 0) is folded into the sending chain, matching how the comparison
figures group it.  The bins partition the state space.
"""
from __future__ import annotations

from typing import Dict

from .states import Act, Distribution, NodeState

SEND_BIN = ("Snt", frozenset({Act.SEND_RTS, Act.RECV_CTS, Act.SEND_DATA}))
RECV_BIN = ("Rcv", frozenset({Act.RECV_RTS, Act.SEND_CTS, Act.RECV_DATA}))
OVERHEAR_BIN = ("Ovh", frozenset({Act.OVERHEAR_RTS, Act.OVERHEAR_CTS}))

BIN_NAMES_FIXED = ("Snt", "Rcv", "Ovh", "Wait", "NAV", "U", "Idle")


def bin_of(s: NodeState) -> str:
    a = s.action
    if a is Act.BACKOFF:
        return "Snt" if s.counter == 0 else f"({s.stage},{s.counter})"
    if a in SEND_BIN[1]:
        return "Snt"
    if a in RECV_BIN[1]:
        return "Rcv"
    if a in OVERHEAR_BIN[1]:
        return "Ovh"
    if a is Act.TIMEOUT:
        return "Wait"
    if a is Act.NAV:
        return "NAV"
    if a is Act.BUSY:
        return "U"
    return "Idle"


def binned(dist: Distribution) -> Dict[str, float]:
    out: Dict[str, float] = {}
    for s, p in dist.probs.items():
        b = bin_of(s)
        out[b] = out.get(b, 0.0) + p
    return out


def bin_l1(a: Dict[str, float], b: Dict[str, float]) -> float:
    keys = set(a) | set(b)
    return sum(abs(a.get(k, 0.0) - b.get(k, 0.0)) for k in keys)


def bin_sort_key(name: str):
    if name.startswith("("):
        i, k = name.strip("()").split(",")
        return (0, int(i), int(k))
    return (1, BIN_NAMES_FIXED.index(name), 0)
