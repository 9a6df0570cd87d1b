"""Distribution serialization and engine comparison."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, TextIO, Tuple

from .bins import bin_l1, bin_sort_key, binned
from .errors import ConfigurationError
from .states import Act, Distribution, NodeState

_ACT_BY_VALUE = {a.value: a for a in Act}

COLUMNS = ("node", "stage", "counter", "action", "timer", "receiver",
           "layer", "probability")


def emit_distribution(fh: TextIO, dists: Dict[str, Distribution],
                      bins: bool = False) -> None:
    """Deterministic comma-separated dump, raw or aggregated into bins."""
    if bins:
        fh.write("node,bin,probability\n")
        for x in sorted(dists):
            agg = binned(dists[x])
            for name in sorted(agg, key=bin_sort_key):
                fh.write(f"{x},{name},{agg[name]:.6f}\n")
        return
    fh.write(",".join(COLUMNS) + ",partner\n")
    for x in sorted(dists):
        for s, p in dists[x].items_sorted():
            fh.write(f"{x},{s.stage},{s.counter},{s.action.value},{s.timer},"
                     f"{s.recv or '-'},{s.qlen},{p:.12g},{s.peer or '-'}\n")


def load_distribution(fh: TextIO) -> Dict[str, Distribution]:
    header = fh.readline().strip()
    if not header.startswith("node,stage"):
        raise ConfigurationError("not a raw distribution file")
    out: Dict[str, Dict[NodeState, float]] = {}
    for line in fh:
        line = line.strip()
        if not line:
            continue
        (node, stage, counter, action, timer, recv, layer, prob,
         peer) = line.split(",")
        s = NodeState(int(stage), int(counter), _ACT_BY_VALUE[action],
                      int(timer), None if recv == "-" else recv, int(layer),
                      None if peer == "-" else peer)
        out.setdefault(node, {})[s] = float(prob)
    return {x: Distribution(x, probs) for x, probs in out.items()}


@dataclass
class CompareReport:
    """Per-bin table and summary distances for up to three engines."""

    nodes: List[str]
    table: Dict[str, Dict[str, Dict[str, float]]]  # node -> bin -> col -> p
    l1: Dict[str, Dict[Tuple[str, str], float]]
    max_abs: Dict[str, Dict[Tuple[str, str], float]]
    threshold_failures: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.threshold_failures


def compare(model: Dict[str, Distribution],
            sim: Optional[Dict[str, Distribution]] = None,
            oracle: Optional[Dict[str, Distribution]] = None,
            thresholds: Optional[Dict[Tuple[str, str], float]] = None
            ) -> CompareReport:
    """Bin-level comparison of the available engines.

    thresholds maps engine pairs like ("model", "oracle") to a maximum
    allowed per-node binned L1 distance.
    """
    engines = {"model": model}
    if oracle is not None:
        engines["oracle"] = oracle
    if sim is not None:
        engines["sim"] = sim
    names = sorted(model)
    for tag, dists in engines.items():
        if sorted(dists) != names:
            raise ConfigurationError(
                f"engine {tag!r} covers nodes {sorted(dists)}, expected {names}")

    table: Dict[str, Dict[str, Dict[str, float]]] = {}
    l1: Dict[str, Dict[Tuple[str, str], float]] = {}
    mx: Dict[str, Dict[Tuple[str, str], float]] = {}
    for x in names:
        agg = {tag: binned(d[x]) for tag, d in engines.items()}
        all_bins = sorted({b for a in agg.values() for b in a},
                          key=bin_sort_key)
        table[x] = {b: {tag: agg[tag].get(b, 0.0) for tag in engines}
                    for b in all_bins}
        l1[x] = {}
        mx[x] = {}
        tags = sorted(engines)
        for i, a in enumerate(tags):
            for b in tags[i + 1:]:
                l1[x][(a, b)] = bin_l1(agg[a], agg[b])
                mx[x][(a, b)] = max(
                    abs(agg[a].get(k, 0.0) - agg[b].get(k, 0.0))
                    for k in all_bins)

    failures = []
    for pair, limit in (thresholds or {}).items():
        key = tuple(sorted(pair))
        for x in names:
            if key in l1[x] and l1[x][key] > limit:
                failures.append(
                    f"{x}: L1({key[0]},{key[1]}) = {l1[x][key]:.4f} > {limit}")
    return CompareReport(nodes=names, table=table, l1=l1, max_abs=mx,
                         threshold_failures=failures)


def format_compare(report: CompareReport) -> str:
    lines = []
    for x in report.nodes:
        lines.append(f"node {x}")
        cols = sorted(next(iter(report.table[x].values())))
        header = "  bin      " + "".join(f"{c:>12s}" for c in cols)
        lines.append(header + f"{'|diff|':>12s}")
        for b, row in report.table[x].items():
            spread = max(row.values()) - min(row.values())
            lines.append(f"  {b:9s}" + "".join(f"{row[c]:12.6f}" for c in cols)
                         + f"{spread:12.6f}")
        for pair, v in sorted(report.l1[x].items()):
            lines.append(f"  L1[{pair[0]},{pair[1]}] = {v:.6f}   "
                         f"max|diff| = {report.max_abs[x][pair]:.6f}")
    if report.threshold_failures:
        lines.append("THRESHOLD FAILURES:")
        lines.extend(f"  {f}" for f in report.threshold_failures)
    else:
        lines.append("all thresholds satisfied")
    return "\n".join(lines) + "\n"
