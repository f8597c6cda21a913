"""Directly-follows graphs: construction, noise filtering, connectivity repair.

The DFG of a log has one node per activity plus two artificial terminals,
START and END. Edge weights count directly-follows occurrences over all
cases (variant multiplicity included); START->first and last->END edges are
counted once per case.
"""

from __future__ import annotations

from collections import deque
from typing import Iterable, Mapping, Union

from .eventlog import EventLog


class _Terminal:
    """Artificial graph endpoint; compares by identity."""

    __slots__ = ("name",)

    def __init__(self, name: str) -> None:
        self.name = name

    def __repr__(self) -> str:
        return self.name


START = _Terminal("START")
END = _Terminal("END")

Node = Union[str, _Terminal]
Edge = tuple[Node, Node]


def node_key(node: Node) -> tuple[int, str]:
    """Sort key placing START first, END last, activities alphabetical."""
    if node is START:
        return (0, "")
    if node is END:
        return (2, "")
    return (1, node)


def edge_key(edge: Edge) -> tuple[tuple[int, str], tuple[int, str]]:
    return (node_key(edge[0]), node_key(edge[1]))


class DFG:
    """A weighted directly-follows graph. Treat instances as immutable."""

    def __init__(self, edges: Mapping[Edge, int], node_freq: Mapping[str, int]) -> None:
        self.edges: dict[Edge, int] = dict(edges)
        self.node_freq: dict[str, int] = dict(node_freq)
        self._succ: dict[Node, list[Node]] = {}
        self._pred: dict[Node, list[Node]] = {}
        for source, target in self.edges:
            self._succ.setdefault(source, []).append(target)
            self._pred.setdefault(target, []).append(source)
        for adjacency in (self._succ, self._pred):
            for node in adjacency:
                adjacency[node].sort(key=node_key)

    @property
    def activities(self) -> set[str]:
        return set(self.node_freq)

    @property
    def nodes(self) -> list[Node]:
        return [START, *sorted(self.node_freq), END]

    def successors(self, node: Node) -> list[Node]:
        return self._succ.get(node, [])

    def predecessors(self, node: Node) -> list[Node]:
        return self._pred.get(node, [])

    def frequency(self, source: Node, target: Node) -> int:
        return self.edges.get((source, target), 0)

    def replace_edges(self, edges: Mapping[Edge, int]) -> "DFG":
        """New graph with the same node frequencies and different edges."""
        return DFG(edges, self.node_freq)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DFG):
            return NotImplemented
        return self.edges == other.edges and self.node_freq == other.node_freq

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"DFG(activities={len(self.node_freq)}, edges={len(self.edges)})"


def build_dfg(event_log: EventLog) -> DFG:
    """Count directly-follows pairs of a log, multiplicity-weighted."""
    edges: dict[Edge, int] = {}
    node_freq: dict[str, int] = {}
    for trace, count in event_log.variants.items():
        edges[(START, trace[0])] = edges.get((START, trace[0]), 0) + count
        edges[(trace[-1], END)] = edges.get((trace[-1], END), 0) + count
        for activity in trace:
            node_freq[activity] = node_freq.get(activity, 0) + count
        for left, right in zip(trace, trace[1:]):
            edges[(left, right)] = edges.get((left, right), 0) + count
    return DFG(edges, node_freq)


def _reachable(edges: Iterable[Edge], origin: Node, forward: bool) -> set[Node]:
    adjacency: dict[Node, list[Node]] = {}
    for source, target in edges:
        if forward:
            adjacency.setdefault(source, []).append(target)
        else:
            adjacency.setdefault(target, []).append(source)
    seen = {origin}
    frontier = deque([origin])
    while frontier:
        node = frontier.popleft()
        for neighbor in adjacency.get(node, ()):
            if neighbor not in seen:
                seen.add(neighbor)
                frontier.append(neighbor)
    return seen


def disconnected_nodes(edges: Iterable[Edge], activities: Iterable[str]) -> set[str]:
    """Activities that dropped off every START->END path under these edges."""
    edge_list = list(edges)
    from_start = _reachable(edge_list, START, forward=True)
    to_end = _reachable(edge_list, END, forward=False)
    return {a for a in activities if a not in from_start or a not in to_end}


def restore_connectivity(
    kept: dict[Edge, int], removed: dict[Edge, int], activities: Iterable[str]
) -> dict[Edge, int]:
    """Return removed edges to `kept` until every activity is on a path again.

    Per disconnected node the highest-frequency removed edge pointing the
    right way is restored (ties broken by (source, target)); the pass repeats
    until no node is stranded or no candidate remains. `kept` is updated in
    place and also returned.
    """
    activities = list(activities)
    while True:
        from_start = _reachable(kept, START, forward=True)
        to_end = _reachable(kept, END, forward=False)
        stranded = sorted(
            a for a in activities if a not in from_start or a not in to_end
        )
        progress = False
        for node in stranded:
            if node not in from_start:
                candidates = [e for e in removed if e[1] == node]
            else:
                candidates = [e for e in removed if e[0] == node]
            if not candidates:
                continue
            best = min(candidates, key=lambda e: (-removed[e], edge_key(e)))
            kept[best] = removed.pop(best)
            progress = True
            break  # recompute reachability before the next fix
        if not stranded or not progress:
            return kept


def filter_dfg(dfg: DFG, noise: float = 0.0) -> DFG:
    """Drop locally infrequent edges while keeping the graph connected.

    For every node, outgoing edges with frequency strictly below
    noise * (the node's strongest outgoing frequency) are marked, and the
    same rule is applied to incoming edges. Marked edges are removed in one
    batch; any activity that loses all its START->END paths then has its
    strongest removed edge restored, repeatedly, until the graph is whole.
    noise 0 is the identity.
    """
    if not 0.0 <= noise <= 1.0:
        raise ValueError(f"noise must be in [0, 1], got {noise}")
    marked: set[Edge] = set()
    for node in dfg.nodes:
        out_edges = [(node, t) for t in dfg.successors(node)]
        if out_edges:
            strongest = max(dfg.edges[e] for e in out_edges)
            marked.update(e for e in out_edges if dfg.edges[e] < noise * strongest)
        in_edges = [(s, node) for s in dfg.predecessors(node)]
        if in_edges:
            strongest = max(dfg.edges[e] for e in in_edges)
            marked.update(e for e in in_edges if dfg.edges[e] < noise * strongest)

    kept = {e: f for e, f in dfg.edges.items() if e not in marked}
    removed = {e: dfg.edges[e] for e in sorted(marked, key=edge_key)}
    restore_connectivity(kept, removed, dfg.activities)
    result = dfg.replace_edges(kept)
    leftover = disconnected_nodes(result.edges, result.activities)
    if leftover:  # pragma: no cover - restoration makes this unreachable
        raise AssertionError(f"filter left nodes disconnected: {sorted(leftover)}")
    return result


def dfg_to_dot(dfg: DFG) -> str:
    """Render the graph in DOT syntax with frequency-labelled edges."""
    lines = ["digraph dfg {", "  rankdir=LR;"]
    lines.append('  "START" [shape=circle];')
    lines.append('  "END" [shape=doublecircle];')
    for activity in sorted(dfg.node_freq):
        freq = dfg.node_freq[activity]
        lines.append(f'  "{activity}" [shape=box label="{activity} ({freq})"];')
    for source, target in sorted(dfg.edges, key=edge_key):
        freq = dfg.edges[(source, target)]
        lines.append(f'  "{source}" -> "{target}" [label="{freq}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
