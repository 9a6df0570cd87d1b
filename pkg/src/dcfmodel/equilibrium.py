"""Stationary distributions of the per-node model.

The per-node balance equations are assembled mechanically from the labeled
transition catalog.  Timer-chain states are eliminated: every chain state
is expressed as a label-weighted multiple of the backoff/idle anchors it
hangs from, the anchors are solved as a small linear system, and the full
distribution is reconstructed, so the chain equalities hold exactly.

The outer loop is a damped fixed point: freeze the transition
probabilities, solve the now-linear system, recompute the probabilities.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import ConfigurationError, NumericalError
from .kernel import Kernel
from .params import ProtocolParams
from .states import SATURATED, Act, Distribution, NodeState, idle
from .statespace import (StateSpace, build_spaces, can_begin_rts_other,
                         can_begin_rts_to, can_send_cts_third)
from .topology import QueueMode, Topology

# an edge: (source index, target index, label key or None, constant factor)
Edge = Tuple[int, int, Optional[tuple], float]


def initial_distribution(topo: Topology,
                         params: ProtocolParams) -> Dict[str, Distribution]:
    """Start-of-time condition: stage-0 counting for backlogged nodes,
    idle for everyone else."""
    out = {}
    for x in topo.nodes:
        mode = topo.queues[x].mode
        if mode is QueueMode.SATURATED:
            probs = {}
            for y in topo.receivers(x):
                for k in range(1, params.w + 1):
                    s = NodeState(0, k, Act.BACKOFF, 0, y, SATURATED)
                    probs[s] = topo.routing[(x, y)] / params.w
            out[x] = Distribution(x, probs)
        else:
            out[x] = Distribution(x, {idle(): 1.0})
    return out


def relabel_state(s: NodeState, mapping: Dict[str, str]) -> NodeState:
    return NodeState(s.stage, s.counter, s.action, s.timer,
                     mapping.get(s.recv, s.recv) if s.recv else None,
                     s.qlen,
                     mapping.get(s.peer, s.peer) if s.peer else None)


class _NodeSystem:
    """Edge catalog, anchors, and chain-elimination order for one node."""

    def __init__(self, topo: Topology, params: ProtocolParams, x: str,
                 space: StateSpace):
        self.x = x
        self.space = space
        self.anchors = [i for i, s in enumerate(space.states)
                        if s.action in (Act.IDLE, Act.BACKOFF)]
        self.anchor_col = {i: c for c, i in enumerate(self.anchors)}
        self.edges: List[Edge] = []
        self._build(topo, params)
        self.order = self._chain_order()
        self.label_keys = sorted({e[2] for e in self.edges if e[2] is not None})

    # -- construction ------------------------------------------------------

    def _add(self, src: NodeState, dst: NodeState, key, mult=1.0):
        self.edges.append((self.space.index[src], self.space.index[dst],
                           key, mult))

    def _new_packet(self, topo, params, x, src, key, qlen_after, mult=1.0):
        if qlen_after == 0:
            self._add(src, idle(), key, mult)
            return
        for y in topo.receivers(x):
            w = topo.routing[(x, y)] / params.w
            for k in range(1, params.w + 1):
                self._add(src, NodeState(0, k, Act.BACKOFF, 0, y, qlen_after),
                          key, mult * w)

    def _build(self, topo: Topology, params: ProtocolParams):
        x = self.x
        space = self.space
        nbrs = sorted(topo.neighbors[x])
        has_busy = any(s.action is Act.BUSY for s in space.states)

        for s in space.states:
            a = s.action
            here = dict(stage=s.stage, counter=s.counter, recv=s.recv,
                        qlen=s.qlen)
            back = (NodeState(s.stage, s.counter, Act.BACKOFF, 0, s.recv,
                              s.qlen) if s.qlen != 0 else idle())
            busy = NodeState(s.stage, s.counter, Act.BUSY, 0, s.recv, s.qlen)

            if a is Act.IDLE or (a is Act.BACKOFF and s.counter >= 1):
                quiet_to = (idle() if a is Act.IDLE else
                            NodeState(s.stage, s.counter - 1, Act.BACKOFF, 0,
                                      s.recv, s.qlen))
                self._add(s, quiet_to, ("1a", None, None))
                for z in nbrs:
                    if can_begin_rts_to(topo, z, x):
                        self._add(s, NodeState(s.stage, s.counter, Act.RECV_RTS,
                                               params.t_rts, s.recv, s.qlen, z),
                                  ("1b", z, None))
                    if can_begin_rts_other(topo, z, x):
                        self._add(s, NodeState(s.stage, s.counter,
                                               Act.OVERHEAR_RTS, params.t_rts,
                                               s.recv, s.qlen, z),
                                  ("1c", z, None))
                    if can_send_cts_third(topo, z, x):
                        self._add(s, NodeState(s.stage, s.counter,
                                               Act.OVERHEAR_CTS, params.t_cts,
                                               s.recv, s.qlen, z),
                                  ("1d", z, None))
                if has_busy:
                    self._add(s, busy, ("1e", None, None))

            elif a is Act.BACKOFF:  # counter 0
                self._add(s, NodeState(s.stage, 0, Act.SEND_RTS, params.t_rts,
                                       s.recv, s.qlen, s.recv), None)

            elif a is Act.RECV_RTS:
                if s.timer >= 1:
                    self._add(s, NodeState(s.stage, s.counter, a, s.timer - 1,
                                           s.recv, s.qlen, s.peer),
                              ("2a", s.peer, None))
                    if has_busy:
                        self._add(s, busy, ("2b", s.peer, None))
                else:
                    self._add(s, NodeState(s.stage, s.counter, Act.SEND_CTS,
                                           params.t_cts, s.recv, s.qlen,
                                           s.peer), None)

            elif a is Act.OVERHEAR_RTS:
                if s.timer >= 1:
                    self._add(s, NodeState(s.stage, s.counter, a, s.timer - 1,
                                           s.recv, s.qlen, s.peer),
                              ("3a", s.peer, None))
                    if has_busy:
                        self._add(s, busy, ("3b", s.peer, None))
                else:
                    self._add(s, NodeState(s.stage, s.counter, Act.NAV,
                                           params.t_navr, s.recv, s.qlen,
                                           s.peer), None)

            elif a is Act.OVERHEAR_CTS:
                if s.timer >= 1:
                    self._add(s, NodeState(s.stage, s.counter, a, s.timer - 1,
                                           s.recv, s.qlen, s.peer),
                              ("4a", s.peer, None))
                    if has_busy:
                        self._add(s, busy, ("4b", s.peer, None))
                else:
                    self._add(s, NodeState(s.stage, s.counter, Act.NAV,
                                           params.t_navc, s.recv, s.qlen,
                                           s.peer), None)

            elif a is Act.SEND_CTS:
                if s.timer >= 1:
                    self._add(s, NodeState(s.stage, s.counter, a, s.timer - 1,
                                           s.recv, s.qlen, s.peer), None)
                else:
                    self._add(s, NodeState(s.stage, s.counter, Act.RECV_DATA,
                                           params.t_data, s.recv, s.qlen,
                                           s.peer), ("5a", s.peer, None))
                    self._add(s, back, ("5b", s.peer, None))

            elif a is Act.RECV_DATA:
                if s.timer >= 1:
                    self._add(s, NodeState(s.stage, s.counter, a, s.timer - 1,
                                           s.recv, s.qlen, s.peer),
                              ("6a", s.peer, s.timer))
                    if has_busy:
                        self._add(s, busy, ("6b", s.peer, s.timer))
                elif s.qlen == SATURATED:
                    self._add(s, back, None)
                elif topo.queues[x].mode is QueueMode.SINK:
                    self._add(s, idle(), None)
                elif s.qlen == 0:
                    self._new_packet(topo, params, x, s, None, 1)
                else:
                    grown = min(s.qlen + 1, topo.queues[x].limit)
                    self._add(s, NodeState(s.stage, s.counter, Act.BACKOFF, 0,
                                           s.recv, grown), None)

            elif a is Act.NAV:
                if s.timer >= 1:
                    self._add(s, NodeState(s.stage, s.counter, a, s.timer - 1,
                                           s.recv, s.qlen, s.peer), None)
                else:
                    self._add(s, back, ("7a", s.peer, None))
                    self._add(s, s, ("7b", s.peer, None))

            elif a is Act.BUSY:
                self._add(s, back, ("8a", None, None))
                self._add(s, s, ("8b", None, None))

            elif a is Act.SEND_RTS:
                if s.timer >= 1:
                    self._add(s, NodeState(s.stage, 0, a, s.timer - 1, s.recv,
                                           s.qlen, s.peer), None)
                else:
                    self._add(s, NodeState(s.stage, 0, Act.RECV_CTS,
                                           params.t_cts, s.recv, s.qlen,
                                           s.peer), ("9a", s.peer, None))
                    self._add(s, NodeState(s.stage, 0, Act.TIMEOUT,
                                           params.t_out, s.recv, s.qlen),
                              ("9b", s.peer, None))

            elif a is Act.RECV_CTS:
                if s.timer >= 1:
                    self._add(s, NodeState(s.stage, 0, a, s.timer - 1, s.recv,
                                           s.qlen, s.peer),
                              ("10a", s.peer, s.timer))
                    self._add(s, NodeState(s.stage, 0, Act.TIMEOUT,
                                           params.t_out - s.timer, s.recv,
                                           s.qlen), ("10b", s.peer, s.timer))
                else:
                    self._add(s, NodeState(0, 0, Act.SEND_DATA, params.t_data,
                                           s.recv, s.qlen, s.recv), None)

            elif a is Act.SEND_DATA:
                if s.timer >= 1:
                    self._add(s, NodeState(0, 0, a, s.timer - 1, s.recv,
                                           s.qlen, s.peer), None)
                else:
                    after = SATURATED if s.qlen == SATURATED else s.qlen - 1
                    self._new_packet(topo, params, x, s, None, after)

            elif a is Act.TIMEOUT:
                if s.timer >= 1:
                    self._add(s, NodeState(s.stage, 0, a, s.timer - 1, s.recv,
                                           s.qlen), None)
                else:
                    key = ("11a", s.recv, None)
                    if s.stage < params.m:
                        wnd = params.window(s.stage + 1)
                        for k in range(1, wnd + 1):
                            self._add(s, NodeState(s.stage + 1, k, Act.BACKOFF,
                                                   0, s.recv, s.qlen),
                                      key, 1.0 / wnd)
                    else:
                        after = (SATURATED if s.qlen == SATURATED
                                 else s.qlen - 1)
                        self._new_packet(topo, params, x, s, key, after)
                    self._add(s, s, ("11b", s.recv, None))

            else:
                raise AssertionError(f"unhandled action {a}")

    def _chain_order(self) -> List[int]:
        """Kahn order of the chain states (self-loops excluded)."""
        n = len(self.space)
        anchors = set(self.anchors)
        indeg = [0] * n
        outs: List[List[int]] = [[] for _ in range(n)]
        for src, dst, _, _ in self.edges:
            if src in anchors or src == dst or dst in anchors:
                continue
            outs[src].append(dst)
            indeg[dst] += 1
        ready = sorted(i for i in range(n)
                       if i not in anchors and indeg[i] == 0)
        order = []
        while ready:
            i = ready.pop(0)
            order.append(i)
            for j in sorted(set(outs[i])):
                indeg[j] -= len([k for k in outs[i] if k == j])
                if indeg[j] == 0:
                    ready.append(j)
            ready.sort()
        if len(order) != n - len(anchors):
            raise NumericalError(f"chain states of {self.x} are cyclic")
        return order


@dataclass
class EquilibriumSystem:
    topo: Topology
    params: ProtocolParams
    spaces: Dict[str, StateSpace]
    kernel: Kernel
    nodes: Dict[str, _NodeSystem]
    symmetry: Optional[List[List[Tuple[str, Dict[str, str]]]]] = None
    perms: Dict[str, Tuple[str, np.ndarray]] = field(default_factory=dict)
    # How the end of a NAV or CTS-timeout wait is resolved:
    #   "partner-exempt"  the node that caused the wait is phase-locked to
    #                     this one and cannot block the resume; only the
    #                     remaining neighbors keep their compatibility ratio
    #   "clear"           waits always find a free channel (the worked
    #                     examples equate every timer state of the wait)
    #   "full"            literal product ratio over all neighbors
    wait_convention: str = "partner-exempt"

    @property
    def unknown_count(self) -> int:
        solved = {g[0][0] for g in self.symmetry} if self.symmetry \
            else set(self.topo.nodes)
        return sum(len(self.spaces[x]) for x in solved)

    def success_send_prob(self, pi: Dict[str, np.ndarray], x: str,
                          z: str) -> float:
        """Chance a head-of-line packet's full handshake toward z succeeds."""
        vals = _label_values_for(self, pi, x)
        p = vals.get(("9a", z, None), 0.0)
        for j in range(1, self.params.t_cts + 1):
            p *= vals.get(("10a", z, j), 1.0)
        return p

    def success_receive_prob(self, pi: Dict[str, np.ndarray], x: str,
                             z: str) -> float:
        """Chance an RTS reception from z completes through DATA."""
        vals = _label_values_for(self, pi, x)
        p = vals.get(("5a", z, None), 0.0)
        p *= vals.get(("2a", z, None), 1.0) ** self.params.t_rts
        for j in range(1, self.params.t_data + 1):
            p *= vals.get(("6a", z, j), 1.0)
        return p


@dataclass
class SolveReport:
    converged: bool
    iterations: int
    residual: float
    normalization_error: float
    pi: Dict[str, Distribution]
    # transition probabilities frozen for the final linear solve; the
    # chain states of pi are exact multiples of the anchors under these
    label_values: Dict[str, Dict[tuple, float]] = field(default_factory=dict)
    diagnostics: List[str] = field(default_factory=list)


def build_system(topo: Topology, params: ProtocolParams, symmetry=None,
                 wait_convention: str = "partner-exempt") -> EquilibriumSystem:
    if wait_convention not in ("partner-exempt", "clear", "full"):
        raise ConfigurationError(f"unknown wait convention {wait_convention!r}")
    for x in topo.nodes:
        if topo.queues[x].mode is not QueueMode.SINK \
                and not topo.neighbors[x] and topo.originates(x):
            raise ConfigurationError(f"{x!r} has traffic but no neighbors")
    spaces = build_spaces(topo, params)
    kern = Kernel(topo, params, spaces)
    nodes = {x: _NodeSystem(topo, params, x, spaces[x]) for x in topo.nodes}
    system = EquilibriumSystem(topo, params, spaces, kern, nodes, symmetry,
                               wait_convention=wait_convention)
    if symmetry:
        seen = set()
        for group in symmetry:
            rep, rep_map = group[0]
            if rep_map != {n: n for n in rep_map}:
                raise ConfigurationError("representative must map identically")
            for member, mapping in group:
                if member in seen:
                    raise ConfigurationError(f"{member!r} in two symmetry groups")
                seen.add(member)
                perm = np.empty(len(spaces[member]), dtype=int)
                for i, s in enumerate(spaces[rep].states):
                    t = relabel_state(s, mapping)
                    if t not in spaces[member].index:
                        raise ConfigurationError(
                            f"symmetry map {rep}->{member} is not an isomorphism")
                    perm[spaces[member].index[t]] = i
                system.perms[member] = (rep, perm)
    return system


def _seed_values(system: EquilibriumSystem) -> Dict[str, Dict[tuple, float]]:
    """Paper-style start: success/quiet transitions certain, others never."""
    out = {}
    for x, ns in system.nodes.items():
        out[x] = {key: (1.0 if key[0].endswith("a") else 0.0)
                  for key in ns.label_keys}
    return out


def _label_values_for(system: EquilibriumSystem, pi: Dict[str, np.ndarray],
                      x: str) -> Dict[tuple, float]:
    k = system.kernel
    ns = system.nodes[x]
    vals: Dict[tuple, float] = {}
    fam1 = None
    for key in ns.label_keys:
        name, partner, step = key
        if name in ("1a", "1b", "1c", "1d", "1e"):
            if fam1 is None:
                fam1 = k.family1(x, pi)
            vals[key] = (fam1[name] if partner is None
                         else fam1[name][partner])
        elif name in ("2a", "2b"):
            ok = k.reception_ok(x, partner, Act.RECV_RTS, 1, pi)
            vals[key] = ok if name == "2a" else 1.0 - ok
        elif name in ("3a", "3b"):
            ok = k.reception_ok(x, partner, Act.OVERHEAR_RTS, 1, pi)
            vals[key] = ok if name == "3a" else 1.0 - ok
        elif name in ("4a", "4b"):
            ok = k.reception_ok(x, partner, Act.OVERHEAR_CTS, 1, pi)
            vals[key] = ok if name == "4a" else 1.0 - ok
        elif name in ("6a", "6b"):
            ok = k.reception_ok(x, partner, Act.RECV_DATA, step, pi)
            vals[key] = ok if name == "6a" else 1.0 - ok
        elif name in ("10a", "10b"):
            ok = k.reception_ok(x, partner, Act.RECV_CTS, step, pi)
            vals[key] = ok if name == "10a" else 1.0 - ok
        elif name in ("5a", "5b"):
            ok = k.handshake_answered(x, partner, pi, data_phase=True)
            vals[key] = ok if name == "5a" else 1.0 - ok
        elif name in ("9a", "9b"):
            ok = k.handshake_answered(x, partner, pi, data_phase=False)
            vals[key] = ok if name == "9a" else 1.0 - ok
        elif name in ("7a", "7b"):
            if system.wait_convention == "clear":
                ok = 1.0
            else:
                ok = k.nav_clears(
                    x, partner, pi,
                    skip_partner=system.wait_convention == "partner-exempt")
            vals[key] = ok if name == "7a" else 1.0 - ok
        elif name in ("8a", "8b"):
            ok = k.busy_clears(x, pi)
            vals[key] = ok if name == "8a" else 1.0 - ok
        elif name in ("11a", "11b"):
            if system.wait_convention == "clear":
                ok = 1.0
            else:
                ok = k.timeout_clears(
                    x, partner, pi,
                    skip_partner=system.wait_convention == "partner-exempt")
            vals[key] = ok if name == "11a" else 1.0 - ok
        else:
            raise AssertionError(f"unknown label key {key}")
    return vals


def _edge_prob(vals, key, mult):
    return mult if key is None else vals[key] * mult


def _anchored_solve(system: EquilibriumSystem, x: str,
                    vals: Dict[tuple, float]) -> np.ndarray:
    ns = system.nodes[x]
    n = len(ns.space)
    na = len(ns.anchors)
    anchors = set(ns.anchors)

    inflow: List[List[Tuple[int, float]]] = [[] for _ in range(n)]
    selfp = np.zeros(n)
    for src, dst, key, mult in ns.edges:
        p = _edge_prob(vals, key, mult)
        if src == dst and src not in anchors:
            selfp[src] = p
        else:
            inflow[dst].append((src, p))

    # chain states as linear expressions over the anchors, in topo order;
    # the three self-looping waits divide by their escape probability
    coeff = np.zeros((n, na))
    for c, i in enumerate(ns.anchors):
        coeff[i, c] = 1.0
    for i in ns.order:
        acc = np.zeros(na)
        for src, p in inflow[i]:
            acc += p * coeff[src]
        if selfp[i] > 0:
            keep = 1.0 - selfp[i]
            if keep <= 0:
                if acc.any():
                    raise NumericalError(
                        f"absorbing chain state {ns.space.states[i]} of {x}")
                acc[:] = 0.0
            else:
                acc /= keep
        coeff[i] = acc

    # anchor balance: pi_a = sum over all edges landing on anchors
    A = np.zeros((na, na))
    for src, dst, key, mult in ns.edges:
        if dst in anchors:
            p = _edge_prob(vals, key, mult)
            A[ns.anchor_col[dst]] += p * coeff[src]

    weights = coeff.sum(axis=0)
    K = np.vstack([np.eye(na) - A, weights])
    rhs = np.zeros(na + 1)
    rhs[-1] = 1.0
    v, *_ = np.linalg.lstsq(K, rhs, rcond=None)
    if not np.all(np.isfinite(v)):
        raise NumericalError(f"anchor solve for {x} produced non-finite values")
    v = np.clip(v, 0.0, None)
    full = coeff @ v
    total = full.sum()
    if total <= 0:
        raise NumericalError(f"anchor solve for {x} lost all mass")
    return full / total


def residual(system: EquilibriumSystem,
             pi: Dict[str, np.ndarray]) -> Tuple[float, float]:
    """(max balance violation, max normalization error) at pi."""
    worst = 0.0
    norm = 0.0
    for x, ns in system.nodes.items():
        vals = _label_values_for(system, pi, x)
        inflow = np.zeros(len(ns.space))
        for src, dst, key, mult in ns.edges:
            inflow[dst] += _edge_prob(vals, key, mult) * pi[x][src]
        worst = max(worst, float(np.max(np.abs(pi[x] - inflow))))
        norm = max(norm, abs(float(pi[x].sum()) - 1.0))
    return worst, norm


def _broadcast(system: EquilibriumSystem,
               pi: Dict[str, np.ndarray]) -> Dict[str, np.ndarray]:
    if not system.perms:
        return pi
    out = dict(pi)
    for member, (rep, perm) in system.perms.items():
        out[member] = pi[rep][perm]
    return out


def solve(system: EquilibriumSystem, tolerance: float = 1e-10,
          max_iterations: int = 100_000, damping: float = 0.5) -> SolveReport:
    """Damped fixed-point iteration on the closed nonlinear system."""
    topo = system.topo
    if system.symmetry:
        covered = {member for g in system.symmetry for member, _ in g}
        reps = [g[0][0] for g in system.symmetry] + \
            [x for x in topo.nodes if x not in covered]
    else:
        reps = list(topo.nodes)

    pi = {x: system.kernel.to_vector(d)
          for x, d in initial_distribution(topo, system.params).items()}
    pi = _broadcast(system, pi)
    vals = _seed_values(system)

    report_pi: Dict[str, np.ndarray] = pi
    solved_vals = vals
    it = 0
    res, norm = np.inf, np.inf
    for it in range(1, max_iterations + 1):
        cand = {}
        for x in reps:
            cand[x] = _anchored_solve(system, x, vals[x])
        for x in topo.nodes:
            if x not in cand:
                cand[x] = pi[x]
        cand = _broadcast(system, cand)
        res, norm = residual(system, cand)
        if not np.isfinite(res):
            raise NumericalError("balance residual became non-finite")
        report_pi = cand
        solved_vals = vals
        if res <= tolerance:
            break
        pi = {x: damping * cand[x] + (1.0 - damping) * pi[x]
              for x in topo.nodes}
        pi = {x: v / v.sum() for x, v in pi.items()}
        vals = {x: _label_values_for(system, pi, x) for x in topo.nodes}
    else:
        it = max_iterations

    dists = {}
    for x in topo.nodes:
        sp = system.spaces[x]
        dists[x] = Distribution(x, {s: float(report_pi[x][i])
                                    for i, s in enumerate(sp.states)
                                    if report_pi[x][i] > 0.0})
    return SolveReport(converged=bool(res <= tolerance), iterations=it,
                       residual=float(res), normalization_error=float(norm),
                       pi=dists, label_values=solved_vals,
                       diagnostics=list(system.kernel.diagnostics))
