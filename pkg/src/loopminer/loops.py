"""Loop handling: back-edge detection and loop-block grouping.

Cycles in a filtered DFG are resolved by ranking nodes in a canonical
forward order and declaring every edge that runs against the order a back
edge. Removing the back edges must leave an acyclic forward skeleton; a
restoration pass returns edges that the ranking misjudged (a loop-exit edge
ranked backwards would otherwise strand its target) to the forward set.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import Enum
from itertools import combinations

from .concurrency import ConcurrencyRelation
from .dfg import DFG, END, START, Edge, Node, edge_key, node_key
from .errors import CyclicResidue
from .eventlog import EventLog


class LoopKind(str, Enum):
    SINGLE = "single"
    MULTI_SOURCE_SINGLE_TARGET = "multi_source_single_target"
    MULTI_SOURCE_MULTI_TARGET = "multi_source_multi_target"
    AND_BODY_THEN_SPLIT = "and_body_then_split"
    XOR_BODY_THEN_SPLIT = "xor_body_then_split"


@dataclass(frozen=True)
class LoopBlock:
    """One loop: its back edges, boundary nodes, body and structural kind.

    entry_nodes are the back-edge targets (where iteration restarts), and
    exit_nodes the back-edge sources (where the repeat decision is taken).
    body covers every node on a forward path from an entry to an exit.
    """

    back_edges: frozenset[tuple[str, str]]
    entry_nodes: frozenset[str]
    exit_nodes: frozenset[str]
    body: frozenset[str]
    kind: LoopKind


def canonical_order(dfg: DFG) -> list[Node]:
    """Rank nodes for back-edge detection.

    Primary key is breadth-first distance from START; ties break by
    descending inflow from strictly earlier layers, then by label. START is
    pinned first and END last so terminal edges can never run backwards.
    """
    depth: dict[Node, int] = {START: 0}
    frontier = deque([START])
    while frontier:
        node = frontier.popleft()
        for successor in dfg.successors(node):
            if successor not in depth:
                depth[successor] = depth[node] + 1
                frontier.append(successor)
    fallback = len(dfg.node_freq) + 2  # unreachable nodes sort last
    inflow: dict[Node, int] = {}
    for node in dfg.nodes:
        node_depth = depth.get(node, fallback)
        inflow[node] = sum(
            dfg.frequency(pred, node)
            for pred in dfg.predecessors(node)
            if depth.get(pred, fallback) < node_depth
        )

    def rank(node: Node) -> tuple[int, int, int, tuple[int, str]]:
        group = 0 if node is START else 2 if node is END else 1
        return (group, depth.get(node, fallback), -inflow[node], node_key(node))

    return sorted(dfg.nodes, key=rank)


def _fresh_counts(event_log: EventLog) -> dict[Edge, int]:
    """Per edge, how often its target occurs for the first time in a trace.

    A directly-follows occurrence whose target was never seen earlier in the
    same case is evidence of genuine forward flow rather than iteration.
    """
    counts: dict[Edge, int] = {}
    for trace, multiplicity in event_log.variants.items():
        seen: set[str] = set()
        previous: Node = START
        for activity in trace:
            if activity not in seen:
                edge = (previous, activity)
                counts[edge] = counts.get(edge, 0) + multiplicity
                seen.add(activity)
            previous = activity
    return counts


def _has_path(edges: dict[Edge, int], origin: Node, goal: Node) -> bool:
    adjacency: dict[Node, list[Node]] = {}
    for source, target in edges:
        adjacency.setdefault(source, []).append(target)
    seen = {origin}
    frontier = deque([origin])
    while frontier:
        node = frontier.popleft()
        if node == goal:
            return True
        for neighbor in adjacency.get(node, ()):
            if neighbor not in seen:
                seen.add(neighbor)
                frontier.append(neighbor)
    return False


def detect_loop_edges(dfg: DFG, event_log: EventLog) -> set[Edge]:
    """Classify DFG edges as loop back edges.

    An edge whose target does not come strictly after its source in the
    canonical order is a back-edge candidate. Candidates are then restored
    to the forward set while any activity is stranded off every START->END
    forward path, preferring edges with fresh-occurrence evidence, as long
    as restoring keeps the forward graph acyclic. Activities that remain
    stranded are acceptable only when the loop itself is their continuation
    (they source or target a back edge); otherwise CyclicResidue is raised.
    """
    order = canonical_order(dfg)
    position = {node: index for index, node in enumerate(order)}
    back = {
        edge for edge in dfg.edges if position[edge[1]] <= position[edge[0]]
    }
    residual = {e: f for e, f in dfg.edges.items() if e not in back}
    fresh = _fresh_counts(event_log)

    def restore_candidates(edges: list[Edge]) -> list[Edge]:
        return sorted(
            edges,
            key=lambda e: (-fresh.get(e, 0), -dfg.edges[e], edge_key(e)),
        )

    while True:
        from_start = _reach_set(residual, START, forward=True)
        to_end = _reach_set(residual, END, forward=False)
        restored = False
        for node in sorted(dfg.activities):
            if node not in to_end and node in from_start:
                outgoing = [e for e in back if e[0] == node]
                for candidate in restore_candidates(outgoing):
                    if not _has_path(residual, candidate[1], candidate[0]):
                        back.discard(candidate)
                        residual[candidate] = dfg.edges[candidate]
                        restored = True
                        break
            if restored:
                break
            if node not in from_start:
                incoming = [e for e in back if e[1] == node]
                for candidate in restore_candidates(incoming):
                    if not _has_path(residual, candidate[0], candidate[1]):
                        back.discard(candidate)
                        residual[candidate] = dfg.edges[candidate]
                        restored = True
                        break
            if restored:
                break
        if not restored:
            break

    from_start = _reach_set(residual, START, forward=True)
    to_end = _reach_set(residual, END, forward=False)
    sources = {e[0] for e in back}
    targets = {e[1] for e in back}
    for node in sorted(dfg.activities):
        if node not in to_end and node not in sources:
            raise CyclicResidue(f"no forward path from {node!r} to END and no back edge leaves it")
        if node not in from_start and node not in targets:
            raise CyclicResidue(f"no forward path from START to {node!r} and no back edge enters it")
    if _contains_cycle(residual):  # pragma: no cover - order makes this impossible
        raise CyclicResidue("forward graph still contains a cycle")
    return back


def _reach_set(edges: dict[Edge, int], origin: Node, forward: bool) -> set[Node]:
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


def _contains_cycle(edges: dict[Edge, int]) -> bool:
    adjacency: dict[Node, list[Node]] = {}
    indegree: dict[Node, int] = {}
    nodes: set[Node] = set()
    for source, target in edges:
        adjacency.setdefault(source, []).append(target)
        indegree[target] = indegree.get(target, 0) + 1
        nodes.update((source, target))
    frontier = deque(n for n in nodes if not indegree.get(n))
    visited = 0
    while frontier:
        node = frontier.popleft()
        visited += 1
        for neighbor in adjacency.get(node, ()):
            indegree[neighbor] -= 1
            if not indegree[neighbor]:
                frontier.append(neighbor)
    return visited != len(nodes)


def group_loop_blocks(
    dfg: DFG, back_edges: set[Edge], relation: ConcurrencyRelation
) -> list[LoopBlock]:
    """Merge back edges with overlapping forward bodies into loop blocks."""
    residual = {e: f for e, f in dfg.edges.items() if e not in back_edges}
    edges = sorted(back_edges, key=edge_key)
    bodies: list[set[str]] = []
    for source, target in edges:
        descendants = _reach_set(residual, target, forward=True)
        ancestors = _reach_set(residual, source, forward=False)
        body = {n for n in descendants & ancestors if isinstance(n, str)}
        body.update((source, target))  # type: ignore[arg-type]
        bodies.append(body)

    parent = list(range(len(edges)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in combinations(range(len(edges)), 2):
        if bodies[i] & bodies[j]:
            parent[find(i)] = find(j)

    groups: dict[int, list[int]] = {}
    for i in range(len(edges)):
        groups.setdefault(find(i), []).append(i)

    blocks = []
    for members in groups.values():
        group_edges = frozenset(edges[i] for i in members)
        body = frozenset(n for i in members for n in bodies[i])
        entries = frozenset(t for _, t in group_edges)
        exits = frozenset(s for s, _ in group_edges)
        blocks.append(
            LoopBlock(
                back_edges=group_edges,  # type: ignore[arg-type]
                entry_nodes=entries,
                exit_nodes=exits,
                body=body,
                kind=_classify(entries, exits, body, residual, relation),
            )
        )
    blocks.sort(key=lambda b: min(edge_key(e) for e in b.back_edges))
    return blocks


def _classify(
    entries: frozenset[str],
    exits: frozenset[str],
    body: frozenset[str],
    residual: dict[Edge, int],
    relation: ConcurrencyRelation,
) -> LoopKind:
    if len(exits) > 1 and len(entries) == 1:
        return LoopKind.MULTI_SOURCE_SINGLE_TARGET
    if len(exits) > 1 and len(entries) > 1:
        return LoopKind.MULTI_SOURCE_MULTI_TARGET
    if any(relation.parallel(a, b) for a, b in combinations(sorted(body), 2)):
        return LoopKind.AND_BODY_THEN_SPLIT
    exit_fanout = {
        node: sum(1 for e in residual if e[0] == node) for node in exits
    }
    if any(count >= 2 for count in exit_fanout.values()):
        return LoopKind.XOR_BODY_THEN_SPLIT
    return LoopKind.SINGLE
