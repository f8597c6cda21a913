"""End-to-end discovery: event log in, loop-woven BPMN model out.

The stages are pure and keep their intermediate artifacts, which the CLI
can emit for debugging and tests can assert on individually.
"""

from __future__ import annotations

from dataclasses import dataclass

from .bpmn import BpmnModel, instantiate_gateways, weave_loops
from .concurrency import ConcurrencyRelation, discover_concurrency, prune_concurrent_edges
from .dfg import DFG, Edge, Node, build_dfg, filter_dfg
from .eventlog import EventLog
from .loops import LoopBlock, detect_loop_edges, group_loop_blocks
from .synthesis import (
    GatewayTree,
    partition_predecessors,
    partition_successors,
    remove_transitive_successors,
)


@dataclass(frozen=True)
class DiscoveryResult:
    """Final model plus the intermediate artifacts it was derived from."""

    model: BpmnModel
    dfg: DFG  # noise-filtered graph, loop edges still present
    relation: ConcurrencyRelation
    back_edges: frozenset[Edge]
    blocks: tuple[LoopBlock, ...]
    residual: DFG  # acyclic forward graph the skeleton was built from


def discover(event_log: EventLog, noise: float = 0.0, epsilon: float = 0.3) -> DiscoveryResult:
    """Run the full pipeline on an already-filtered event log.

    Order matters: concurrent edges are pruned before loop detection so
    interleaving noise never masquerades as a back edge, and transitive
    edges are removed only from the forward residual.
    """
    dfg = filter_dfg(build_dfg(event_log), noise)
    relation = discover_concurrency(dfg, event_log, epsilon)
    pruned = prune_concurrent_edges(dfg, relation)
    back_edges = detect_loop_edges(pruned, event_log)
    blocks = group_loop_blocks(pruned, back_edges, relation)
    residual = pruned.replace_edges(
        {edge: freq for edge, freq in pruned.edges.items() if edge not in back_edges}
    )
    residual = remove_transitive_successors(residual, relation, event_log)

    split_trees: dict[Node, GatewayTree] = {}
    join_trees: dict[Node, GatewayTree] = {}
    for node in residual.nodes:
        split = partition_successors(node, residual, relation)
        if split is not None:
            split_trees[node] = split
        join = partition_predecessors(node, residual, relation)
        if join is not None:
            join_trees[node] = join

    model = instantiate_gateways(residual, split_trees, join_trees)
    model = weave_loops(model, list(blocks))
    model.validate()
    return DiscoveryResult(
        model=model,
        dfg=dfg,
        relation=relation,
        back_edges=frozenset(back_edges),
        blocks=tuple(blocks),
        residual=residual,
    )
