"""Exact product-state Markov chain over all nodes (small networks only).

Transitions come from the same slot semantics the simulator executes,
with the two randomness sources (backoff draws, receiver choice)
enumerated branch by branch.  This is the ground truth the per-node
model and the simulator are judged against.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import NumericalError, StateSpaceTooLarge
from .params import ProtocolParams
from .protocol import check_world, classify_pair, local_next
from .states import Distribution, NodeState
from .topology import Topology

JointState = Tuple[NodeState, ...]

DEFAULT_CAP = 2_000_000
DIRECT_SOLVE_LIMIT = 200_000


@dataclass
class JointChain:
    topo: Topology
    params: ProtocolParams
    states: List[JointState]
    index: Dict[JointState, int]
    matrix: sp.csr_matrix
    initial: np.ndarray
    stationary_vector: np.ndarray = field(default=None, repr=False)

    def __len__(self):
        return len(self.states)


def _initial_support(topo, params, initial: Dict[str, Distribution]):
    combos: List[Tuple[JointState, float]] = [((), 1.0)]
    for x in topo.nodes:
        nxt = []
        for joint, p in combos:
            for s, q in initial[x].probs.items():
                nxt.append((joint + (s,), p * q))
        combos = nxt
    return combos


def build_joint_chain(topo: Topology, params: ProtocolParams,
                      cap: int = DEFAULT_CAP,
                      consistency_checks: bool = True) -> JointChain:
    """Reachability closure from the initial condition."""
    from .equilibrium import initial_distribution

    names = topo.nodes
    pos = {x: i for i, x in enumerate(names)}
    seeds = _initial_support(topo, params, initial_distribution(topo, params))

    index: Dict[JointState, int] = {}
    states: List[JointState] = []
    initial_mass: Dict[int, float] = {}

    def intern(js: JointState) -> int:
        i = index.get(js)
        if i is None:
            if len(states) >= cap:
                raise StateSpaceTooLarge(
                    f"joint chain exceeds {cap} states")
            i = len(states)
            index[js] = i
            states.append(js)
        return i

    frontier = []
    for js, p in seeds:
        i = intern(js)
        initial_mass[i] = initial_mass.get(i, 0.0) + p
        frontier.append(i)

    rows, cols, vals = [], [], []
    done = 0
    while done < len(states):
        i = done
        done += 1
        js = states[i]
        world = {x: js[pos[x]] for x in names}
        if consistency_checks:
            check_world(topo, params, world)
        per_node = []
        for x in names:
            nbr = {z: world[z] for z in topo.neighbors[x]}
            per_node.append(local_next(topo, params, x, world[x], nbr))
        combos: List[Tuple[Tuple[NodeState, ...], float]] = [((), 1.0)]
        for branches in per_node:
            combos = [(acc + (s,), ap * p)
                      for acc, ap in combos for p, s in branches]
        merged: Dict[int, float] = {}
        for nxt, p in combos:
            j = intern(nxt)
            merged[j] = merged.get(j, 0.0) + p
        for j, p in merged.items():
            rows.append(i)
            cols.append(j)
            vals.append(p)

    n = len(states)
    matrix = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    init = np.zeros(n)
    for i, p in initial_mass.items():
        init[i] = p
    return JointChain(topo, params, states, index, matrix, init)


def _recurrent_class(chain: JointChain) -> np.ndarray:
    """Indices of the unique recurrent class; error if there are several."""
    n = len(chain)
    ncomp, labels = connected_components(chain.matrix, directed=True,
                                         connection="strong")
    # a component is recurrent iff it has no edge leaving it
    leaves = np.zeros(ncomp, dtype=bool)
    coo = chain.matrix.tocoo()
    for i, j in zip(coo.row, coo.col):
        if labels[i] != labels[j]:
            leaves[labels[i]] = True
    recurrent = [c for c in range(ncomp) if not leaves[c]]
    if len(recurrent) != 1:
        reps = [chain.states[int(np.nonzero(labels == c)[0][0])]
                for c in recurrent]
        raise NumericalError(
            f"{len(recurrent)} recurrent classes; representatives: {reps[:3]}")
    return np.nonzero(labels == recurrent[0])[0]


def stationary(chain: JointChain,
               tol: float = 1e-13) -> Dict[str, Distribution]:
    """Solve pi P = pi on the recurrent class; per-node marginals."""
    keep = _recurrent_class(chain)
    P = chain.matrix[keep][:, keep].tocsc()
    k = len(keep)
    if k <= DIRECT_SOLVE_LIMIT:
        A = (P.T - sp.identity(k, format="csc")).tolil()
        A[-1, :] = 1.0
        b = np.zeros(k)
        b[-1] = 1.0
        v = sp.linalg.spsolve(A.tocsc(), b)
    else:
        v = np.full(k, 1.0 / k)
        for _ in range(1_000_000):
            nxt = P.T @ v
            nxt /= nxt.sum()
            if np.max(np.abs(nxt - v)) <= tol:
                v = nxt
                break
            v = nxt
    v = np.clip(v, 0.0, None)
    v /= v.sum()
    res = float(np.max(np.abs(P.T @ v - v)))
    if res > 1e-10:
        raise NumericalError(f"stationary solve residual {res}")

    full = np.zeros(len(chain))
    full[keep] = v
    chain.stationary_vector = full

    out = {}
    for i, x in enumerate(chain.topo.nodes):
        probs: Dict[NodeState, float] = {}
        for idx in keep:
            s = chain.states[idx][i]
            probs[s] = probs.get(s, 0.0) + float(full[idx])
        out[x] = Distribution(x, probs)
    return out


def export_edges(chain: JointChain, path) -> None:
    """Edge list as text: state-id, state-id, probability, per-node labels.

    The label column joins `node=edge` entries for every node whose state
    changed, in node order.
    """
    coo = chain.matrix.tocoo()
    names = chain.topo.nodes
    with open(path, "w") as fh:
        fh.write("# src dst probability labels\n")
        order = sorted(zip(coo.row, coo.col, coo.data))
        for i, j, p in order:
            a, b = chain.states[i], chain.states[j]
            tags = ";".join(f"{x}={classify_pair(a[k], b[k])}"
                            for k, x in enumerate(names))
            fh.write(f"{i} {j} {p:.12g} {tags}\n")
