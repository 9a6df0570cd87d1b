"""Slotted protocol simulator.

Every node advances one slot at a time from the previous slot's snapshot.
Transitions are the shared `local_next` semantics; states are interned
per node and the branch distributions memoized on the neighbor snapshot,
which keeps the hot loop at dictionary-lookup cost.

Randomness comes from one PCG64 stream per node, derived from
(seed, node index) via numpy's SeedSequence, so runs are reproducible
across platforms and independent of node iteration order.
"""
from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field
from itertools import accumulate
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import ConfigurationError
from .params import ProtocolParams
from .protocol import check_world, local_next
from .states import Act, Distribution, NodeState
from .topology import Topology


@dataclass(frozen=True)
class SimConfig:
    topology: Topology
    params: ProtocolParams
    seed: int = 0
    n_slots: int = 100_000
    warmup_slots: int = 1_000
    collect_events: bool = False
    consistency_checks: bool = False

    def __post_init__(self):
        if not self.n_slots > self.warmup_slots >= 0:
            raise ConfigurationError("need n_slots > warmup_slots >= 0")


@dataclass
class SimResult:
    config: SimConfig
    occupancy: Dict[str, Distribution]
    rts_sent: Dict[str, int]
    rts_succeeded: Dict[str, int]
    rts_failed: Dict[str, int]
    data_delivered: Dict[str, int]
    data_dropped: Dict[str, int]
    collisions: Dict[str, int]
    tallied_slots: int
    events: Optional[List[Tuple[int, str, str, int, str]]] = field(
        default=None, repr=False)


class _NodeEngine:
    """Interned states and memoized branch tables for one node."""

    __slots__ = ("name", "topo", "params", "states", "ids", "table", "nbrs")

    def __init__(self, topo, params, name, nbrs):
        self.name = name
        self.topo = topo
        self.params = params
        self.states: List[NodeState] = []
        self.ids: Dict[NodeState, int] = {}
        self.table: Dict[tuple, tuple] = {}
        self.nbrs = nbrs

    def intern(self, s: NodeState) -> int:
        i = self.ids.get(s)
        if i is None:
            i = len(self.states)
            self.ids[s] = i
            self.states.append(s)
        return i

    def branches(self, sid: int, nbr_ids: tuple, engines) -> tuple:
        key = (sid, nbr_ids)
        hit = self.table.get(key)
        if hit is None:
            nbr = {z: engines[z].states[nid]
                   for z, nid in zip(self.nbrs, nbr_ids)}
            out = local_next(self.topo, self.params, self.name,
                             self.states[sid], nbr)
            targets = tuple(self.intern(s) for _, s in out)
            cumulative = tuple(accumulate(p for p, _ in out))
            hit = (cumulative, targets)
            self.table[key] = hit
        return hit


def _sample_initial(topo, params, rng_of) -> Dict[str, NodeState]:
    from .equilibrium import initial_distribution

    world = {}
    for x, dist in initial_distribution(topo, params).items():
        items = sorted(dist.probs.items(), key=lambda kv: kv[0].sort_key())
        r = rng_of[x].random()
        acc = 0.0
        world[x] = items[-1][0]
        for s, p in items:
            acc += p
            if r < acc:
                world[x] = s
                break
    return world


def run(config: SimConfig) -> SimResult:
    """Simulate n_slots slots; occupancy tallied after the warmup."""
    topo, params = config.topology, config.params
    names = topo.nodes
    nbrs = {x: tuple(sorted(topo.neighbors[x])) for x in names}
    engines = {x: _NodeEngine(topo, params, x, nbrs[x]) for x in names}
    rng_of = {x: np.random.Generator(np.random.PCG64(
        np.random.SeedSequence((config.seed, i))))
        for i, x in enumerate(names)}

    world = _sample_initial(topo, params, rng_of)
    cur = {x: engines[x].intern(world[x]) for x in names}

    counts = {x: {} for x in names}
    rts_sent = {x: 0 for x in names}
    rts_ok = {x: 0 for x in names}
    rts_bad = {x: 0 for x in names}
    delivered = {x: 0 for x in names}
    dropped = {x: 0 for x in names}
    collisions = {x: 0 for x in names}
    events = [] if config.collect_events else None

    for slot in range(config.n_slots):
        if config.consistency_checks:
            check_world(topo, params,
                        {x: engines[x].states[cur[x]] for x in names})
        nxt = {}
        for x in names:
            eng = engines[x]
            nbr_ids = tuple(cur[z] for z in eng.nbrs)
            cumulative, targets = eng.branches(cur[x], nbr_ids, engines)
            if len(targets) == 1:
                nxt[x] = targets[0]
            else:
                r = rng_of[x].random()
                nxt[x] = targets[bisect_right(cumulative, r)]

        tally = slot >= config.warmup_slots
        for x in names:
            eng = engines[x]
            a, b = eng.states[cur[x]], eng.states[nxt[x]]
            if a.action is Act.SEND_RTS and a.timer == 0:
                rts_sent[x] += 1
                if b.action is Act.RECV_CTS:
                    rts_ok[x] += 1
                else:
                    rts_bad[x] += 1
            if a.action is Act.RECV_DATA and a.timer == 0:
                delivered[x] += 1
            if a.action is Act.RECV_DATA and b.action is Act.BUSY:
                dropped[x] += 1
                collisions[x] += 1
            if a.action is Act.RECV_RTS and b.action is Act.BUSY:
                collisions[x] += 1
            if a.action is Act.TIMEOUT and a.timer == 0 \
                    and a.stage == params.m and b.action is not Act.TIMEOUT:
                dropped[x] += 1
            if tally:
                counts[x][nxt[x]] = counts[x].get(nxt[x], 0) + 1
            if events is not None:
                events.append((slot + 1, x, b.action.value, b.timer,
                               b.peer or ""))
        cur = nxt

    tallied = config.n_slots - config.warmup_slots
    occupancy = {}
    for x in names:
        eng = engines[x]
        occupancy[x] = Distribution(
            x, {eng.states[i]: c / tallied for i, c in counts[x].items()})
    return SimResult(config=config, occupancy=occupancy, rts_sent=rts_sent,
                     rts_succeeded=rts_ok, rts_failed=rts_bad,
                     data_delivered=delivered, data_dropped=dropped,
                     collisions=collisions, tallied_slots=tallied,
                     events=events)


def averaged_occupancy(configs: List[SimConfig]) -> Dict[str, Distribution]:
    """Mean occupancy over replications (embarrassingly parallel by seed)."""
    if not configs:
        raise ConfigurationError("no replications requested")
    total: Dict[str, Dict[NodeState, float]] = {}
    for cfg in configs:
        res = run(cfg)
        for x, dist in res.occupancy.items():
            into = total.setdefault(x, {})
            for s, p in dist.probs.items():
                into[s] = into.get(s, 0.0) + p / len(configs)
    return {x: Distribution(x, probs) for x, probs in total.items()}


def write_event_log(result: SimResult, path) -> None:
    """One line per (slot, node, action, timer, partner)."""
    if result.events is None:
        raise ConfigurationError("run with collect_events=True to log events")
    with open(path, "w") as fh:
        fh.write("# slot node action timer partner\n")
        for slot, node, action, timer, partner in result.events:
            fh.write(f"{slot} {node} {action} {timer} {partner or '-'}\n")
