"""Concurrency discovery over a DFG and the log behind it.

Two activities are considered parallel when the log shows both orders with
roughly equal frequency and never shows the short-loop witness (one of them
immediately on both sides of the other, e.g. ...a,b,a...), which would be
evidence of a 2-loop instead of interleaving.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

from .dfg import DFG, edge_key, restore_connectivity
from .eventlog import EventLog


@dataclass(frozen=True)
class ConcurrencyRelation:
    """Symmetric, irreflexive set of parallel activity pairs."""

    pairs: frozenset[frozenset[str]]

    def __post_init__(self) -> None:
        for pair in self.pairs:
            if len(pair) != 2:
                raise ValueError(f"concurrency pairs must have two members: {set(pair)}")

    def __contains__(self, pair: tuple[str, str]) -> bool:
        return frozenset(pair) in self.pairs

    def __len__(self) -> int:
        return len(self.pairs)

    def parallel(self, a: str, b: str) -> bool:
        return frozenset((a, b)) in self.pairs

    def partners(self, activity: str) -> set[str]:
        return {other for pair in self.pairs if activity in pair for other in pair} - {
            activity
        }

    def sorted_pairs(self) -> list[tuple[str, str]]:
        return sorted(tuple(sorted(pair)) for pair in self.pairs)


def short_loop_witnesses(event_log: EventLog) -> set[frozenset[str]]:
    """Pairs {a,b} for which some trace contains an adjacent aba or bab."""
    witnesses: set[frozenset[str]] = set()
    for trace in event_log.variants:
        for first, second, third in zip(trace, trace[1:], trace[2:]):
            if first == third and first != second:
                witnesses.add(frozenset((first, second)))
    return witnesses


def discover_concurrency(
    dfg: DFG, event_log: EventLog, epsilon: float = 0.3
) -> ConcurrencyRelation:
    """Classify activity pairs as parallel.

    {a, b} is parallel iff all three hold:
      1. both a->b and b->a are DFG edges,
      2. |f(a->b) - f(b->a)| / (f(a->b) + f(b->a)) <= epsilon,
      3. no trace contains aba or bab as an adjacent triple.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must be in [0, 1], got {epsilon}")
    witnesses = short_loop_witnesses(event_log)
    pairs: set[frozenset[str]] = set()
    for a, b in combinations(sorted(dfg.activities), 2):
        forward = dfg.frequency(a, b)
        backward = dfg.frequency(b, a)
        if not forward or not backward:
            continue
        if abs(forward - backward) / (forward + backward) > epsilon:
            continue
        if frozenset((a, b)) in witnesses:
            continue
        pairs.add(frozenset((a, b)))
    return ConcurrencyRelation(frozenset(pairs))


def prune_concurrent_edges(dfg: DFG, relation: ConcurrencyRelation) -> DFG:
    """Drop both directly-follows directions of every parallel pair.

    Interleaving edges between parallel activities carry no ordering
    information; a gateway will express the parallelism instead. The
    connectivity guard restores a pruned edge if an activity would otherwise
    fall off every START->END path.
    """
    doomed = {
        edge
        for edge in dfg.edges
        if isinstance(edge[0], str)
        and isinstance(edge[1], str)
        and relation.parallel(edge[0], edge[1])
    }
    kept = {e: f for e, f in dfg.edges.items() if e not in doomed}
    removed = {e: dfg.edges[e] for e in sorted(doomed, key=edge_key)}
    restore_connectivity(kept, removed, dfg.activities)
    return dfg.replace_edges(kept)
