"""Command-line interface: solve, simulate, oracle, compare.

Experiments come from a named fixture or a TOML file; see README for the
schema.  All commands are deterministic for a fixed seed.
"""
from __future__ import annotations

import argparse
import sys

try:
    import tomllib
except ModuleNotFoundError:  # python 3.10
    import tomli as tomllib

from dataclasses import dataclass, field
from typing import Dict, Optional

from .equilibrium import build_system, solve
from .errors import ConfigurationError
from .fixtures import FIXTURE_NAMES, fixture, fixture_symmetry
from .jointchain import build_joint_chain, export_edges, stationary
from .params import ProtocolParams, default_params
from .reporting import compare, emit_distribution, format_compare
from .simulate import SimConfig, averaged_occupancy, run, write_event_log
from .topology import QueueMode, QueueSpec, Topology


@dataclass
class ExperimentSpec:
    topology: Topology
    params: ProtocolParams
    symmetry: Optional[list] = None
    seed: int = 0
    slots: int = 200_000
    warmup: int = 1_000
    seeds: int = 1
    solver_tolerance: float = 1e-10
    solver_damping: float = 0.5
    solver_max_iterations: int = 100_000
    wait_convention: str = "partner-exempt"
    thresholds: Dict[tuple, float] = field(default_factory=dict)


_QUEUE_MODES = {"saturated": QueueMode.SATURATED, "sink": QueueMode.SINK,
                "finite": QueueMode.FINITE}


def _parse_topology(doc: dict) -> Topology:
    try:
        nodes = tuple(doc["nodes"])
        edges = doc["edges"]
    except KeyError as e:
        raise ConfigurationError(f"topology.{e.args[0]}: missing") from None
    nbrs = {x: set() for x in nodes}
    for pair in edges:
        if len(pair) != 2:
            raise ConfigurationError(f"topology.edges: bad edge {pair!r}")
        a, b = pair
        if a not in nbrs or b not in nbrs:
            raise ConfigurationError(f"topology.edges: unknown node in {pair!r}")
        nbrs[a].add(b)
        nbrs[b].add(a)
    queues = {}
    for x, q in doc.get("queues", {}).items():
        if x not in nbrs:
            raise ConfigurationError(f"topology.queues.{x}: unknown node")
        if isinstance(q, str):
            if q not in _QUEUE_MODES or q == "finite":
                raise ConfigurationError(
                    f"topology.queues.{x}: bad mode {q!r}")
            queues[x] = QueueSpec(_QUEUE_MODES[q])
        else:
            mode = q.get("mode")
            if mode not in _QUEUE_MODES:
                raise ConfigurationError(
                    f"topology.queues.{x}.mode: bad mode {mode!r}")
            queues[x] = QueueSpec(_QUEUE_MODES[mode], int(q.get("limit", 0)))
    for x in nodes:
        queues.setdefault(x, QueueSpec(QueueMode.SATURATED))
    routing = {}
    for key, p in doc.get("routing", {}).items():
        try:
            a, b = key.split("->")
        except ValueError:
            raise ConfigurationError(
                f"topology.routing.{key}: expected 'src->dst'") from None
        routing[(a, b)] = float(p)
    return Topology(nodes=nodes, neighbors={x: frozenset(v)
                                            for x, v in nbrs.items()},
                    queues=queues, routing=routing)


_PARAM_FIELDS = ("w", "m", "t_rts", "t_cts", "t_data", "t_out", "t_navr",
                 "t_navc", "sigma")


def load_experiment(source: str, m: Optional[int] = None,
                    overrides: Optional[dict] = None) -> ExperimentSpec:
    """Resolve a fixture name or TOML file into a full experiment."""
    if source in FIXTURE_NAMES:
        spec = ExperimentSpec(topology=fixture(source),
                              params=default_params(m=m or 0),
                              symmetry=fixture_symmetry(source))
    else:
        try:
            with open(source, "rb") as fh:
                doc = tomllib.load(fh)
        except FileNotFoundError:
            raise ConfigurationError(
                f"{source!r} is neither a fixture name {FIXTURE_NAMES} "
                f"nor a readable file") from None
        except tomllib.TOMLDecodeError as e:
            raise ConfigurationError(f"{source}: {e}") from None
        exp = doc.get("experiment", {})
        for key in exp:
            if key not in ("fixture", "seed", "slots", "warmup", "seeds", "m",
                           "wait_convention"):
                raise ConfigurationError(f"experiment.{key}: unknown field")
        if "fixture" in exp:
            topo = fixture(exp["fixture"])
            symmetry = fixture_symmetry(exp["fixture"])
        elif "topology" in doc:
            topo = _parse_topology(doc["topology"])
            symmetry = None
        else:
            raise ConfigurationError(
                "experiment needs a fixture or a [topology] section")
        pdoc = doc.get("params", {})
        for key in pdoc:
            if key not in _PARAM_FIELDS:
                raise ConfigurationError(f"params.{key}: unknown field")
        stage = m if m is not None else exp.get("m", pdoc.get("m", 0))
        base = default_params(m=stage)
        fields = {name: pdoc.get(name, getattr(base, name))
                  for name in _PARAM_FIELDS}
        fields["m"] = stage
        spec = ExperimentSpec(topology=topo, params=ProtocolParams(**fields),
                              symmetry=symmetry,
                              seed=int(exp.get("seed", 0)),
                              slots=int(exp.get("slots", 200_000)),
                              warmup=int(exp.get("warmup", 1_000)),
                              seeds=int(exp.get("seeds", 1)))
        if "wait_convention" in exp:
            spec.wait_convention = exp["wait_convention"]
    if m is not None and spec.params.m != m:
        spec = ExperimentSpec(**{**spec.__dict__,
                                 "params": default_params(m=m)})
    for key, value in (overrides or {}).items():
        setattr(spec, key, value)
    return spec


def _out(path: Optional[str]):
    return open(path, "w") if path else sys.stdout


def cmd_solve(args) -> int:
    spec = load_experiment(args.experiment, m=args.m)
    system = build_system(spec.topology, spec.params, symmetry=spec.symmetry,
                          wait_convention=spec.wait_convention)
    rep = solve(system, tolerance=spec.solver_tolerance,
                max_iterations=spec.solver_max_iterations,
                damping=spec.solver_damping)
    fh = _out(args.out)
    fh.write(f"# converged={rep.converged} iterations={rep.iterations} "
             f"residual={rep.residual:.3e}\n")
    emit_distribution(fh, rep.pi, bins=args.bins)
    if fh is not sys.stdout:
        fh.close()
    return 0 if rep.converged else 1


def _sim_occupancy(spec: ExperimentSpec):
    configs = [SimConfig(topology=spec.topology, params=spec.params,
                         seed=spec.seed + i, n_slots=spec.slots + spec.warmup,
                         warmup_slots=spec.warmup)
               for i in range(spec.seeds)]
    if len(configs) == 1:
        return run(configs[0]).occupancy
    return averaged_occupancy(configs)


def cmd_simulate(args) -> int:
    spec = load_experiment(args.experiment, m=args.m)
    spec.seed = args.seed if args.seed is not None else spec.seed
    spec.slots = args.slots or spec.slots
    if args.events:
        cfg = SimConfig(topology=spec.topology, params=spec.params,
                        seed=spec.seed, n_slots=spec.slots + spec.warmup,
                        warmup_slots=spec.warmup, collect_events=True)
        res = run(cfg)
        write_event_log(res, args.events)
        occ = res.occupancy
    else:
        spec.seeds = args.seeds or spec.seeds
        occ = _sim_occupancy(spec)
    fh = _out(args.out)
    emit_distribution(fh, occ, bins=args.bins)
    if fh is not sys.stdout:
        fh.close()
    return 0


def cmd_oracle(args) -> int:
    spec = load_experiment(args.experiment, m=args.m)
    chain = build_joint_chain(spec.topology, spec.params)
    marg = stationary(chain)
    fh = _out(args.out)
    fh.write(f"# joint-states={len(chain)}\n")
    emit_distribution(fh, marg, bins=args.bins)
    if fh is not sys.stdout:
        fh.close()
    if args.edges:
        export_edges(chain, args.edges)
    return 0


DEFAULT_THRESHOLDS = {("model", "oracle"): 0.08, ("model", "sim"): 0.15,
                      ("oracle", "sim"): 0.02}


def cmd_compare(args) -> int:
    spec = load_experiment(args.experiment, m=args.m)
    spec.seed = args.seed if args.seed is not None else spec.seed
    spec.slots = args.slots or spec.slots
    spec.seeds = args.seeds or spec.seeds
    system = build_system(spec.topology, spec.params, symmetry=spec.symmetry,
                          wait_convention=spec.wait_convention)
    model = solve(system).pi
    oracle = None
    if not args.no_oracle:
        oracle = stationary(build_joint_chain(spec.topology, spec.params))
    sim = _sim_occupancy(spec)
    thresholds = dict(DEFAULT_THRESHOLDS)
    if args.model_sim_limit is not None:
        thresholds[("model", "sim")] = args.model_sim_limit
    report = compare(model, sim=sim, oracle=oracle, thresholds=thresholds)
    fh = _out(args.out)
    fh.write(format_compare(report))
    if fh is not sys.stdout:
        fh.close()
    return 0 if report.passed else 2


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="dcfmodel",
        description="Per-node DCF model, exact joint chain, and simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("experiment",
                       help=f"fixture name {FIXTURE_NAMES} or TOML file")
        p.add_argument("--m", type=int, default=None, choices=(0, 1, 2),
                       help="retry limit override")
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--bins", action="store_true",
                       help="aggregate into reporting bins")

    p = sub.add_parser("solve", help="stationary distribution of the model")
    common(p)
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("simulate", help="slotted protocol simulation")
    common(p)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--slots", type=int, default=None)
    p.add_argument("--seeds", type=int, default=None,
                   help="number of replications to average")
    p.add_argument("--events", default=None, help="write an event log here")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("oracle", help="exact joint-chain marginals")
    common(p)
    p.add_argument("--edges", default=None, help="export the edge list here")
    p.set_defaults(fn=cmd_oracle)

    p = sub.add_parser("compare", help="model vs oracle vs simulation")
    common(p)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--slots", type=int, default=None)
    p.add_argument("--seeds", type=int, default=None)
    p.add_argument("--no-oracle", action="store_true",
                   help="skip the joint chain (large networks)")
    p.add_argument("--model-sim-limit", type=float, default=None,
                   help="override the model-vs-sim L1 threshold")
    p.set_defaults(fn=cmd_compare)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigurationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 64


if __name__ == "__main__":
    sys.exit(main())
