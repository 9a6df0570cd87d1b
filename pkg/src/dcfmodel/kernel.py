"""Transition-probability kernel under the product closure.

Every labeled transition (1a..11b) is a ratio of neighbor-state masses:
the numerator set restricts the compatibility set of the conditioning
state, and joint masses factor into products of per-neighbor marginal
masses.  Compatibility sets are evaluated by enumeration, not symbolic
algebra; state spaces at the scales handled here are small.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

import numpy as np

from .errors import ContractViolation
from .params import ProtocolParams
from .states import Act, Distribution, NodeState
from .statespace import StateSpace, build_spaces, enumerate_states
from .topology import Topology

LABELS = ("1a", "1b", "1c", "1d", "1e", "2a", "2b", "3a", "3b", "4a", "4b",
          "5a", "5b", "6a", "6b", "7a", "7b", "8a", "8b", "9a", "9b",
          "10a", "10b", "11a", "11b")

# labels that name a specific partner node
PAIRWISE = frozenset({"1b", "1c", "1d", "2a", "2b", "3a", "3b", "4a", "4b",
                      "5a", "5b", "6a", "6b", "7a", "7b", "9a", "9b",
                      "10a", "10b", "11a", "11b"})

FAMILIES = (("1a", "1b", "1c", "1d", "1e"), ("2a", "2b"), ("3a", "3b"),
            ("4a", "4b"), ("5a", "5b"), ("6a", "6b"), ("7a", "7b"),
            ("8a", "8b"), ("9a", "9b"), ("10a", "10b"), ("11a", "11b"))


@dataclass(frozen=True)
class TransitionLabel:
    name: str
    partner: Optional[str] = None

    def __post_init__(self):
        if self.name not in LABELS:
            raise ContractViolation(f"unknown transition label {self.name!r}")


@dataclass(frozen=True)
class OmegaPredicate:
    """Named predicate over a neighbor's state."""

    name: str
    fn: Callable[[NodeState], bool]

    def __call__(self, s: NodeState) -> bool:
        return self.fn(s)


def omega_filter(predicate, dist: Distribution) -> float:
    """Marginal mass of the states satisfying the predicate."""
    return sum(p for s, p in dist.probs.items() if predicate(s))


# ---------------------------------------------------------------------------
# predicate constructors

RECEIVING = frozenset({Act.RECV_RTS, Act.OVERHEAR_RTS, Act.RECV_CTS,
                       Act.OVERHEAR_CTS, Act.RECV_DATA})


def _is_begin_rts(s: NodeState) -> bool:
    return s.action is Act.BACKOFF and s.counter == 0

def _is_begin_cts(s: NodeState) -> bool:
    return s.action is Act.RECV_RTS and s.timer == 0

def _is_begin_data(s: NodeState) -> bool:
    return s.action is Act.RECV_CTS and s.timer == 0

def _is_begin_any(s: NodeState) -> bool:
    return _is_begin_rts(s) or _is_begin_cts(s) or _is_begin_data(s)

def _is_mid_sending(s: NodeState) -> bool:
    return s.is_transmitting and s.timer >= 1


def listener_base(topo: Topology, x: str) -> OmegaPredicate:
    """Neighbor states compatible with x hearing a quiet channel.

    Excludes transmitters, nodes whose own CTS/DATA reception implies x
    was informed by an earlier packet, and interactions whose far end is
    audible to x.
    """
    audible = topo.neighbors[x] | {x}

    def fn(s: NodeState) -> bool:
        if s.is_transmitting:
            return False
        if s.action in (Act.RECV_CTS, Act.RECV_DATA):
            return False
        if s.action in (Act.RECV_RTS, Act.OVERHEAR_RTS, Act.OVERHEAR_CTS,
                        Act.NAV):
            return s.peer not in audible
        return True  # idle / backoff / busy / timeout

    return OmegaPredicate(f"quiet-compatible[{x}]", fn)


def quiet_next(topo: Topology, x: str) -> OmegaPredicate:
    """listener_base minus states that start a transmission next slot."""
    base = listener_base(topo, x)
    return OmegaPredicate(
        f"quiet-next[{x}]", lambda s: base(s) and not _is_begin_any(s))


def begins_rts_to(x: str) -> OmegaPredicate:
    return OmegaPredicate(
        f"begins-rts-to[{x}]",
        lambda s: _is_begin_rts(s) and s.recv == x)

def begins_rts_elsewhere(x: str) -> OmegaPredicate:
    return OmegaPredicate(
        f"begins-rts-elsewhere[{x}]",
        lambda s: _is_begin_rts(s) and s.recv != x)

def begins_cts_third_party(topo: Topology, x: str) -> OmegaPredicate:
    audible = topo.neighbors[x] | {x}
    return OmegaPredicate(
        f"begins-cts-third-party[{x}]",
        lambda s: _is_begin_cts(s) and s.peer not in audible)


def _nav_step(x: str, step: int) -> Callable[[NodeState], bool]:
    return lambda s: s.action is Act.NAV and s.peer == x and s.timer == step


def hidden_base(topo: Topology, params: ProtocolParams, x: str,
                cond_action: Act, step: int) -> OmegaPredicate:
    """States of a neighbor hidden from the far end of x's reception.

    While x receives its own CTS or DATA, a hidden neighbor may instead
    sit at the lock-step NAV position created by x's earlier RTS/CTS.
    """
    base = listener_base(topo, x)
    if cond_action is Act.RECV_CTS:
        nav = _nav_step(x, params.t_navc + 1 + step)
    elif cond_action is Act.RECV_DATA:
        nav = _nav_step(x, step)
    else:
        return base
    return OmegaPredicate(f"{base.name}+nav", lambda s: base(s) or nav(s))


def reception_clear(topo: Topology, params: ProtocolParams, x: str,
                    cond_action: Act, step: int) -> OmegaPredicate:
    """Numerator predicate: hidden neighbor does not disturb the slot."""
    base = hidden_base(topo, params, x, cond_action, step)
    if cond_action is Act.RECV_CTS:
        block = _is_begin_rts
    elif cond_action is Act.RECV_DATA:
        block = lambda s: _is_begin_rts(s) or _is_begin_cts(s)
    else:
        block = _is_begin_any
    return OmegaPredicate(f"{base.name}-clear",
                          lambda s: base(s) and not block(s))


def u_active(x: str) -> OmegaPredicate:
    """Transmitting, except a CTS addressed to x."""
    def fn(s):
        if not s.is_transmitting:
            return False
        return not (s.action is Act.SEND_CTS and s.peer == x)
    return OmegaPredicate(f"u-active[{x}]", fn)


def u_passive(x: str) -> OmegaPredicate:
    """Not receiving from x and not answering x."""
    def fn(s):
        if s.action in RECEIVING and s.peer == x:
            return False
        return not (s.action is Act.SEND_CTS and s.peer == x)
    return OmegaPredicate(f"u-passive[{x}]", fn)


def u_active_ending(x: str) -> OmegaPredicate:
    act = u_active(x)
    return OmegaPredicate(f"{act.name}-ending",
                          lambda s: act(s) and s.timer == 0)


def u_passive_settled(x: str) -> OmegaPredicate:
    pas = u_passive(x)
    return OmegaPredicate(
        f"{pas.name}-settled",
        lambda s: pas(s) and not _is_mid_sending(s) and not _is_begin_any(s))


def _interacting_with(x: str) -> Callable[[NodeState], bool]:
    acts = frozenset({Act.RECV_RTS, Act.OVERHEAR_RTS, Act.SEND_CTS,
                      Act.RECV_CTS, Act.OVERHEAR_CTS, Act.SEND_DATA,
                      Act.RECV_DATA, Act.NAV})
    return lambda s: s.action in acts and s.peer == x


def nav_base(x: str, is_partner: bool) -> OmegaPredicate:
    """Concurrent states at the end of x's NAV wait."""
    interacting = _interacting_with(x)

    def fn(s):
        if interacting(s):
            return False
        if is_partner and s.action in (Act.SEND_DATA, Act.RECV_DATA) \
                and s.timer >= 1:
            return False
        return True

    return OmegaPredicate(f"nav-base[{x},{'partner' if is_partner else 'other'}]", fn)


def nav_clear(x: str, is_partner: bool) -> OmegaPredicate:
    base = nav_base(x, is_partner)
    return OmegaPredicate(
        f"{base.name}-clear",
        lambda s: base(s) and not s.is_transmitting and not _is_begin_any(s))


def timeout_base(params: ProtocolParams, x: str, is_partner: bool,
                 third_party_traffic: bool = False) -> OmegaPredicate:
    """Concurrent states at the end of x's CTS timeout.

    The failed partner cannot be mid-handshake with x, which bounds its
    support sharply.  A third party may additionally be transmitting to
    someone else entirely; with `third_party_traffic` those states join
    the support (and block the resume, since the channel is occupied).
    """
    def fn(s):
        if s.action in (Act.IDLE, Act.BACKOFF, Act.BUSY, Act.SEND_RTS):
            return True
        if s.action in (Act.RECV_RTS, Act.OVERHEAR_RTS) and s.peer != x:
            return True
        if not is_partner:
            if third_party_traffic and s.action in (Act.SEND_CTS,
                                                    Act.SEND_DATA):
                return s.peer != x
            # the failed RTS may have been overheard
            return s.action is Act.NAV and s.peer == x \
                and s.timer == params.t_navc
        return False
    return OmegaPredicate(f"timeout-base[{x}]", fn)


def timeout_clear(params: ProtocolParams, x: str, is_partner: bool,
                  third_party_traffic: bool = False) -> OmegaPredicate:
    base = timeout_base(params, x, is_partner, third_party_traffic)
    return OmegaPredicate(
        f"{base.name}-clear",
        lambda s: base(s) and not s.is_transmitting
        and not _is_begin_rts(s))


def nav_shields(topo: Topology, x: str) -> bool:
    """Every neighbor of x senses only x, so x's NAV reserves the channel
    completely and its CTS/DATA receptions cannot be disturbed."""
    return bool(topo.neighbors[x]) and all(
        topo.neighbors[z] == frozenset({x}) for z in topo.neighbors[x])


# ---------------------------------------------------------------------------
# vectorized evaluation

def _vec(pred, space: StateSpace) -> np.ndarray:
    return np.fromiter((pred(s) for s in space.states), dtype=float,
                       count=len(space))


class Kernel:
    """Precomputed predicate masks for every label over a fixed topology."""

    def __init__(self, topo: Topology, params: ProtocolParams,
                 spaces: Optional[Dict[str, StateSpace]] = None):
        self.topo = topo
        self.params = params
        self.spaces = spaces or build_spaces(topo, params)
        self.diagnostics: List[str] = []
        self._masks: Dict[tuple, np.ndarray] = {}
        for x in topo.nodes:
            for z in sorted(topo.neighbors[x]):
                sp = self.spaces[z]
                self._put(("base", x, z), listener_base(topo, x), sp)
                self._put(("quiet", x, z), quiet_next(topo, x), sp)
                self._put(("brts", x, z), begins_rts_to(x), sp)
                self._put(("brts_other", x, z), begins_rts_elsewhere(x), sp)
                self._put(("bcts3", x, z), begins_cts_third_party(topo, x), sp)
                self._put(("u_act", x, z), u_active(x), sp)
                self._put(("u_pass", x, z), u_passive(x), sp)
                self._put(("u_end", x, z), u_active_ending(x), sp)
                self._put(("u_ok", x, z), u_passive_settled(x), sp)
                for flag in (True, False):
                    self._put(("d_base", x, z, flag), nav_base(x, flag), sp)
                    self._put(("d_ok", x, z, flag), nav_clear(x, flag), sp)
                    self._put(("w_base", x, z, flag),
                              timeout_base(params, x, flag), sp)
                    self._put(("w_ok", x, z, flag),
                              timeout_clear(params, x, flag), sp)
                self._put(("w_base3", x, z),
                          timeout_base(params, x, False, True), sp)
                self._put(("w_ok3", x, z),
                          timeout_clear(params, x, False, True), sp)
                for act, steps in ((Act.RECV_CTS, range(1, params.t_cts + 1)),
                                   (Act.RECV_DATA, range(1, params.t_data + 1))):
                    for j in steps:
                        self._put(("hb", x, z, act, j),
                                  hidden_base(topo, params, x, act, j), sp)
                        self._put(("hok", x, z, act, j),
                                  reception_clear(topo, params, x, act, j), sp)
                self._put(("rts_rx_end", x, z),
                          OmegaPredicate("", lambda s, x=x: s.action is Act.RECV_RTS
                                         and s.peer == x and s.timer == 0), sp)
                self._put(("cts_rx_end", x, z),
                          OmegaPredicate("", lambda s, x=x: s.action is Act.RECV_CTS
                                         and s.peer == x and s.timer == 0), sp)
            sp = self.spaces[x]
            for y in topo.receivers(x):
                self._put(("rts_tx_end", x, y),
                          OmegaPredicate("", lambda s, y=y: s.action is Act.SEND_RTS
                                         and s.peer == y and s.timer == 0), sp)
            for z in sorted(topo.neighbors[x]):
                self._put(("cts_tx_end", x, z),
                          OmegaPredicate("", lambda s, z=z: s.action is Act.SEND_CTS
                                         and s.peer == z and s.timer == 0), sp)

    def _put(self, key, pred, space):
        self._masks[key] = _vec(pred, space)

    def _mass(self, key, pi: Dict[str, np.ndarray], node: str) -> float:
        return float(self._masks[key] @ pi[node])

    # -- per-label values -------------------------------------------------

    def quiet_ratio(self, x, z, pi) -> float:
        den = self._mass(("base", x, z), pi, z)
        if den <= 0.0:
            self.diagnostics.append(f"empty compatibility mass for ({x},{z})")
            return 0.0
        return self._mass(("quiet", x, z), pi, z) / den

    def _start_ratio(self, kind, x, z, pi) -> float:
        den = self._mass(("base", x, z), pi, z)
        if den <= 0.0:
            self.diagnostics.append(f"empty compatibility mass for ({x},{z})")
            return 0.0
        return self._mass((kind, x, z), pi, z) / den

    def family1(self, x, pi) -> Dict[str, object]:
        """1a..1e for node x; pairwise labels map partner -> value."""
        nbrs = sorted(self.topo.neighbors[x])
        quiet = {z: self.quiet_ratio(x, z, pi) for z in nbrs}
        p1a = float(np.prod([quiet[z] for z in nbrs])) if nbrs else 1.0

        def one(kind, z):
            v = self._start_ratio(kind, x, z, pi)
            for other in nbrs:
                if other != z:
                    v *= quiet[other]
            return v

        p1b = {z: one("brts", z) for z in nbrs}
        p1c = {z: one("brts_other", z) for z in nbrs}
        p1d = {z: one("bcts3", z) for z in nbrs}
        p1e = 1.0 - p1a - sum(p1b.values()) - sum(p1c.values()) - sum(p1d.values())
        return {"1a": p1a, "1b": p1b, "1c": p1c, "1d": p1d,
                "1e": min(max(p1e, 0.0), 1.0)}

    def reception_ok(self, x, sender, cond_action: Act, step: int, pi) -> float:
        """2a/3a/4a/6a/10a at one reception step."""
        if cond_action in (Act.RECV_CTS, Act.RECV_DATA) and nav_shields(self.topo, x):
            return 1.0
        value = 1.0
        for alpha in sorted(self.topo.hidden_from(x, sender)):
            if cond_action in (Act.RECV_CTS, Act.RECV_DATA):
                den = self._mass(("hb", x, alpha, cond_action, step), pi, alpha)
                num = self._mass(("hok", x, alpha, cond_action, step), pi, alpha)
            else:
                den = self._mass(("base", x, alpha), pi, alpha)
                num = self._mass(("quiet", x, alpha), pi, alpha)
            if den <= 0.0:
                self.diagnostics.append(
                    f"empty hidden-set mass for ({x},{sender},{alpha})")
                return 0.0
            value *= num / den
        return value

    def handshake_answered(self, x, partner, pi, data_phase: bool) -> float:
        """9a (RTS answered) or 5a (CTS answered): partner-side mass over
        sender-side mass at the final sending step."""
        if data_phase:
            num = self._mass(("cts_rx_end", x, partner), pi, partner)
            den = self._mass(("cts_tx_end", x, partner), pi, x)
        else:
            num = self._mass(("rts_rx_end", x, partner), pi, partner)
            den = self._mass(("rts_tx_end", x, partner), pi, x)
        if den <= 0.0:
            self.diagnostics.append(
                f"no sending mass for ({x},{partner},{'5a' if data_phase else '9a'})")
            return 0.0
        return min(num / den, 1.0)

    def _union_mass(self, x, pi, sets) -> float:
        """Mass of 'at least one neighbor active' under the product measure.

        sets maps z -> (active_key, ambient_key) with active subset ambient.
        """
        ambient = 1.0
        inactive = 1.0
        for z, (act_key, amb_key) in sets.items():
            amb = self._mass(amb_key, pi, z)
            act = self._mass(act_key, pi, z)
            ambient *= amb
            inactive *= max(amb - act, 0.0)
        return ambient - inactive

    def busy_clears(self, x, pi) -> float:
        """8a: someone ends a transmission and nobody else disturbs."""
        nbrs = sorted(self.topo.neighbors[x])
        den = self._union_mass(
            x, pi, {z: (("u_act", x, z), ("u_pass", x, z)) for z in nbrs})
        if den <= 0.0:
            self.diagnostics.append(f"empty busy-channel mass for {x}")
            return 0.0
        num = self._union_mass(
            x, pi, {z: (("u_end", x, z), ("u_ok", x, z)) for z in nbrs})
        return min(max(num / den, 0.0), 1.0)

    def nav_clears(self, x, partner, pi, skip_partner: bool = False) -> float:
        """7a: channel found free at the end of a NAV wait."""
        num, den = 1.0, 1.0
        for z in sorted(self.topo.neighbors[x]):
            flag = z == partner
            if flag and skip_partner:
                continue
            den_z = self._mass(("d_base", x, z, flag), pi, z)
            if den_z <= 0.0:
                self.diagnostics.append(f"empty NAV-base mass for ({x},{z})")
                return 0.0
            num *= self._mass(("d_ok", x, z, flag), pi, z)
            den *= den_z
        return num / den

    def timeout_clears(self, x, partner, pi,
                       skip_partner: bool = False) -> float:
        """11a: channel found free at the end of the CTS timeout.

        With skip_partner the phase-locked partner is conditioned out and
        third parties keep their own-traffic states in the support.
        """
        num, den = 1.0, 1.0
        for z in sorted(self.topo.neighbors[x]):
            flag = z == partner
            if flag and skip_partner:
                continue
            if skip_partner:
                base_key, ok_key = ("w_base3", x, z), ("w_ok3", x, z)
            else:
                base_key, ok_key = (("w_base", x, z, flag),
                                    ("w_ok", x, z, flag))
            den_z = self._mass(base_key, pi, z)
            if den_z <= 0.0:
                self.diagnostics.append(f"empty timeout-base mass for ({x},{z})")
                return 0.0
            num *= self._mass(ok_key, pi, z)
            den *= den_z
        return num / den

    def to_vector(self, dist: Distribution) -> np.ndarray:
        sp = self.spaces[dist.owner]
        v = np.zeros(len(sp))
        for s, p in dist.probs.items():
            v[sp.index[s]] = p
        return v


# ---------------------------------------------------------------------------
# public single-label evaluation

_FAMILY_COND = {
    "1": (Act.IDLE, Act.BACKOFF), "2": (Act.RECV_RTS,),
    "3": (Act.OVERHEAR_RTS,), "4": (Act.OVERHEAR_CTS,), "5": (Act.SEND_CTS,),
    "6": (Act.RECV_DATA,), "7": (Act.NAV,), "8": (Act.BUSY,),
    "9": (Act.SEND_RTS,), "10": (Act.RECV_CTS,), "11": (Act.TIMEOUT,),
}


def _check_cond(label: TransitionLabel, cond: NodeState) -> None:
    fam = label.name.rstrip("abcde")
    if cond.action not in _FAMILY_COND[fam]:
        raise ContractViolation(f"label {label.name} from {cond.action}")
    if fam == "1" and cond.action is Act.BACKOFF and cond.counter == 0:
        raise ContractViolation("backoff counter 0 commits a transmission")
    if fam in ("2", "3", "4", "6", "10") and cond.timer < 1:
        raise ContractViolation(f"label {label.name} applies mid-reception")
    if fam in ("5", "7", "9", "11") and cond.timer != 0:
        raise ContractViolation(f"label {label.name} applies at timer 0")


def evaluate_transition(label: TransitionLabel, x: str, cond: NodeState,
                        dists: Dict[str, Distribution], topo: Topology,
                        params: ProtocolParams,
                        kernel: Optional[Kernel] = None) -> float:
    """Probability of one labeled transition from a conditioning state."""
    _check_cond(label, cond)
    k = kernel or Kernel(topo, params)
    pi = {z: k.to_vector(d) for z, d in dists.items()}
    name, fam = label.name, label.name.rstrip("abcde")

    if fam == "1":
        vals = k.family1(x, pi)
        if name == "1a":
            return vals["1a"]
        if name == "1e":
            return vals["1e"]
        if label.partner is None:
            raise ContractViolation(f"{name} needs a partner node")
        return vals[name][label.partner]

    if fam == "8":
        ok = k.busy_clears(x, pi)
        return ok if name == "8a" else 1.0 - ok

    partner = label.partner or cond.peer or cond.recv
    if partner is None:
        raise ContractViolation(f"{name} needs a partner node")

    if fam in ("2", "3", "4", "6", "10"):
        ok = k.reception_ok(x, partner, cond.action, cond.timer, pi)
        return ok if name.endswith("a") else 1.0 - ok
    if fam in ("5", "9"):
        ok = k.handshake_answered(x, partner, pi, data_phase=fam == "5")
        return ok if name.endswith("a") else 1.0 - ok
    if fam == "7":
        ok = k.nav_clears(x, partner, pi)
        return ok if name == "7a" else 1.0 - ok
    ok = k.timeout_clears(x, partner, pi)
    return ok if name == "11a" else 1.0 - ok


# ---------------------------------------------------------------------------
# static non-trivial-label analysis

def specialize_example(topo: Topology,
                       params: ProtocolParams) -> Dict[str, frozenset]:
    """Which labels are non-trivial (not identically 0 or 1) per node.

    NAV-end and timeout-end waits (families 7 and 11) are treated as
    finding a free channel, following the applied convention of the
    worked examples; their labels never appear here.
    """
    reach = {x: enumerate_states(topo, params, x) for x in topo.nodes}

    def has(z: str, pred) -> bool:
        return any(pred(s) for s in reach[z])

    def begin_capable_in_base(z: str, x: str, rts_only: bool = False) -> bool:
        base = listener_base(topo, x)
        if rts_only:
            return has(z, lambda s: base(s) and _is_begin_rts(s))
        return has(z, lambda s: base(s) and _is_begin_any(s))

    out: Dict[str, frozenset] = {}
    for x in topo.nodes:
        labels = set()
        nbrs = sorted(topo.neighbors[x])
        capable = [z for z in nbrs if begin_capable_in_base(z, x)]
        if capable:
            labels.add("1a")
        if any(has(z, begins_rts_to(x)) for z in nbrs):
            labels.add("1b")
        if any(has(z, begins_rts_elsewhere(x)) for z in nbrs):
            labels.add("1c")
        if any(has(z, begins_cts_third_party(topo, x)) for z in nbrs):
            labels.add("1d")
        if len(capable) >= 2:
            labels.add("1e")

        def chain_present(act, z):
            return any(s.action is act and s.peer == z for s in reach[x])

        for z in nbrs:
            hidden = sorted(topo.hidden_from(x, z))
            disturbed = any(begin_capable_in_base(a, x) for a in hidden)
            if chain_present(Act.RECV_RTS, z) and disturbed:
                labels.update(("2a", "2b"))
            if chain_present(Act.OVERHEAR_RTS, z) and disturbed:
                labels.update(("3a", "3b"))
            if chain_present(Act.OVERHEAR_CTS, z) and disturbed:
                labels.update(("4a", "4b"))
            if chain_present(Act.RECV_DATA, z) and not nav_shields(topo, x) \
                    and any(begin_capable_in_base(a, x) for a in hidden):
                labels.update(("6a", "6b"))
            if chain_present(Act.RECV_CTS, z) and not nav_shields(topo, x) \
                    and any(begin_capable_in_base(a, x, rts_only=True)
                            for a in hidden):
                labels.update(("10a", "10b"))
            if chain_present(Act.SEND_CTS, z) and not nav_shields(topo, z) \
                    and any(begin_capable_in_base(a, z, rts_only=True)
                            for a in sorted(topo.hidden_from(z, x))):
                labels.update(("5a", "5b"))
            if chain_present(Act.SEND_RTS, z):
                labels.update(("9a", "9b"))
        if any(s.action is Act.BUSY for s in reach[x]):
            labels.update(("8a", "8b"))
        out[x] = frozenset(labels)
    return out
