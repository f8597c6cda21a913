"""Gateway synthesis: successor/predecessor grouping and transitivity removal.

The successors of a node are arranged into a nested XOR/AND tree driven by
the concurrency relation: activities that are pairwise parallel belong under
one AND gateway, groups with no parallelism between them are alternatives
under an XOR gateway, recursively. The same construction applied to
predecessors yields the join side.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .concurrency import ConcurrencyRelation
from .dfg import DFG, END, START, Edge, edge_key, restore_connectivity
from .errors import AmbiguousPartition
from .eventlog import EventLog


@dataclass(frozen=True)
class GatewayTree:
    """Nested grouping of activities under alternating xor/and nodes.

    op is "task" for leaves (label set), "xor" or "and" for internal nodes
    (children set, at least two, never of the same op as the parent).
    """

    op: str
    label: str | None = None
    children: tuple["GatewayTree", ...] = field(default=())

    def __post_init__(self) -> None:
        if self.op == "task":
            if not self.label or self.children:
                raise ValueError("task leaves need a label and no children")
        elif self.op in ("xor", "and"):
            if self.label is not None or len(self.children) < 2:
                raise ValueError(f"{self.op} nodes need >= 2 children and no label")
            if any(child.op == self.op for child in self.children):
                raise ValueError(f"nested {self.op} under {self.op} must be collapsed")
        else:
            raise ValueError(f"unknown tree op {self.op!r}")

    def leaves(self) -> list[str]:
        if self.op == "task":
            return [self.label]  # type: ignore[list-item]
        return [leaf for child in self.children for leaf in child.leaves()]

    def canonical(self) -> str:
        """Stable textual form, e.g. 'xor(and(b,c),e)'."""
        if self.op == "task":
            return self.label  # type: ignore[return-value]
        return f"{self.op}({','.join(c.canonical() for c in self.children)})"


def leaf(label: str) -> GatewayTree:
    return GatewayTree("task", label=label)


def _internal(op: str, children: list[GatewayTree]) -> GatewayTree:
    """Build an internal node, collapsing same-op children and singletons."""
    flat: list[GatewayTree] = []
    for child in children:
        if child.op == op:
            flat.extend(child.children)
        else:
            flat.append(child)
    if len(flat) == 1:
        return flat[0]
    flat.sort(key=lambda t: t.canonical())
    return GatewayTree(op, children=tuple(flat))


def _components(nodes: set[str], adjacent: dict[str, set[str]]) -> list[set[str]]:
    remaining = set(nodes)
    components = []
    while remaining:
        seed = min(remaining)
        component = {seed}
        frontier = [seed]
        while frontier:
            node = frontier.pop()
            for neighbor in adjacent.get(node, set()) & remaining:
                if neighbor not in component:
                    component.add(neighbor)
                    frontier.append(neighbor)
        remaining -= component
        components.append(component)
    return components


def _greedy_cliques(nodes: set[str], adjacent: dict[str, set[str]]) -> list[set[str]]:
    """Cover nodes with cliques, largest first, deterministic tie-breaks."""
    remaining = set(nodes)
    cliques = []
    while remaining:
        best: set[str] = set()
        for seed in sorted(remaining):
            clique = {seed}
            for candidate in sorted(remaining - {seed}):
                if all(candidate in adjacent.get(member, set()) for member in clique):
                    clique.add(candidate)
            if len(clique) > len(best) or (
                len(clique) == len(best) and sorted(clique) < sorted(best)
            ):
                best = clique
        if not best:  # pragma: no cover - a singleton is always a clique
            raise AmbiguousPartition(f"no clique covers {sorted(remaining)}")
        cliques.append(best)
        remaining -= best
    return cliques


def _grouping(nodes: set[str], relation: ConcurrencyRelation) -> GatewayTree:
    if len(nodes) == 1:
        return leaf(next(iter(nodes)))
    adjacent = {n: relation.partners(n) & nodes for n in nodes}
    components = _components(nodes, adjacent)
    if len(components) > 1:
        return _internal("xor", [_grouping(c, relation) for c in components])
    complement = {n: (nodes - adjacent[n]) - {n} for n in nodes}
    cocomponents = _components(nodes, complement)
    if len(cocomponents) > 1:
        return _internal("and", [_grouping(c, relation) for c in cocomponents])
    # Relation is connected and co-connected: no exact nesting exists.
    # Fall back to covering with parallel cliques offered as alternatives.
    cliques = _greedy_cliques(nodes, adjacent)
    groups = [
        _internal("and", [leaf(m) for m in sorted(clique)]) if len(clique) > 1 else leaf(min(clique))
        for clique in cliques
    ]
    return _internal("xor", groups)


def partition_successors(
    node: str | object, dfg: DFG, relation: ConcurrencyRelation
) -> GatewayTree | None:
    """Group a node's activity successors into a gateway tree.

    Returns None for no activity successors, a bare leaf for one, and a
    nested xor/and tree otherwise. The END terminal is not part of the
    tree; when present it is one more exclusive alternative, which the
    model builder attaches at the top level.
    """
    successors = {s for s in dfg.successors(node) if isinstance(s, str)}
    return _tree_or_none(successors, relation)


def partition_predecessors(
    node: str | object, dfg: DFG, relation: ConcurrencyRelation
) -> GatewayTree | None:
    """Group a node's activity predecessors into a gateway tree (join side)."""
    predecessors = {p for p in dfg.predecessors(node) if isinstance(p, str)}
    return _tree_or_none(predecessors, relation)


def _tree_or_none(nodes: set[str], relation: ConcurrencyRelation) -> GatewayTree | None:
    if not nodes:
        return None
    if len(nodes) == 1:
        return leaf(next(iter(nodes)))
    return _grouping(nodes, relation)


def remove_transitive_successors(
    dfg: DFG, relation: ConcurrencyRelation, event_log: EventLog
) -> DFG:
    """Drop edges that only echo a two-step path through the graph.

    An edge a->c explained by some a->b->c is removed when no trace shows a
    causally adjacent a,c pair. Causal adjacency skips over activities that
    are parallel to c: the causal predecessor of an occurrence of c is the
    nearest earlier activity not concurrent with it. Edges whose every
    occurrence is such an interleaving artifact (or that never occur at all)
    carry no ordering information. Genuine skip edges survive because their
    occurrences are causal. The connectivity guard runs afterwards.
    """
    evidence: dict[Edge, int] = {}
    for trace, multiplicity in event_log.variants.items():
        for index, activity in enumerate(trace):
            back = index - 1
            while back >= 0 and relation.parallel(trace[back], activity):
                back -= 1
            source = trace[back] if back >= 0 else START
            evidence[(source, activity)] = evidence.get((source, activity), 0) + multiplicity
        evidence[(trace[-1], END)] = evidence.get((trace[-1], END), 0) + multiplicity

    two_hop: set[Edge] = set()
    for a, c in dfg.edges:
        for b in dfg.successors(a):
            if b not in (a, c) and isinstance(b, str) and dfg.frequency(b, c):
                two_hop.add((a, c))
                break

    doomed = {e for e in two_hop if not evidence.get(e)}
    kept = {e: f for e, f in dfg.edges.items() if e not in doomed}
    removed = {e: dfg.edges[e] for e in sorted(doomed, key=edge_key)}
    restore_connectivity(kept, removed, dfg.activities)
    return dfg.replace_edges(kept)
