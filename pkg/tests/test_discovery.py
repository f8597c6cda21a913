"""End-to-end pipeline: artifacts, loop patterns, parameter threading."""

from __future__ import annotations

from loopminer.bpmn import BpmnModel, ExclusiveGateway, ParallelGateway, serialize_bpmn_xml
from loopminer.dfg import END, START
from loopminer.discovery import discover
from loopminer.eventlog import EventLog
from loopminer.loops import LoopKind
from loopminer.petri import bpmn_to_petri, enumerate_language


def test_running_example_artifacts(running_log):
    result = discover(running_log)
    assert result.relation.sorted_pairs() == [("b", "c")]
    assert result.back_edges == frozenset()
    assert result.blocks == ()
    assert result.residual.edges == {
        (START, "a"): 25,
        ("a", "b"): 10,
        ("a", "c"): 10,
        ("a", "e"): 5,
        ("b", "d"): 10,
        ("c", "d"): 10,
        ("e", "d"): 5,
        ("d", END): 25,
    }
    language = enumerate_language(bpmn_to_petri(result.model), max_length=4)
    assert language == {("a", "b", "c", "d"), ("a", "c", "b", "d"), ("a", "e", "d")}


def test_pattern_relations(pattern_results):
    expected = {
        "L1": [("b", "c")],
        "L2": [("p", "q")],
        "L3": [],
        "L4": [("b", "c")],
    }
    for pattern, pairs in expected.items():
        _, result = pattern_results[pattern]
        assert result.relation.sorted_pairs() == pairs, pattern


def test_pattern_loop_blocks(pattern_results):
    kinds = {
        "L1": LoopKind.MULTI_SOURCE_MULTI_TARGET,
        "L2": LoopKind.MULTI_SOURCE_SINGLE_TARGET,
        "L3": LoopKind.MULTI_SOURCE_MULTI_TARGET,
        "L4": LoopKind.AND_BODY_THEN_SPLIT,
    }
    for pattern, kind in kinds.items():
        _, result = pattern_results[pattern]
        assert len(result.blocks) == 1, pattern
        block = result.blocks[0]
        assert block.kind is kind, pattern
        assert frozenset(block.back_edges) == result.back_edges, pattern

    l1_block = pattern_results["L1"][1].blocks[0]
    assert l1_block.entry_nodes == frozenset({"b", "c", "d"})
    assert l1_block.exit_nodes == frozenset({"r", "s"})


def gateway_hops(model: BpmnModel, from_id: str) -> set[str]:
    """Non-gateway nodes reachable from from_id through gateways only."""
    seen = set()
    hits = set()
    frontier = [from_id]
    while frontier:
        node_id = frontier.pop()
        for flow in model.outgoing(node_id):
            if flow.target in seen:
                continue
            seen.add(flow.target)
            if isinstance(model.nodes[flow.target], (ExclusiveGateway, ParallelGateway)):
                frontier.append(flow.target)
            else:
                hits.add(flow.target)
    return hits


def test_every_graph_edge_is_walkable(running_log, pattern_results):
    cases = [discover(running_log)] + [result for _, result in pattern_results.values()]
    for result in cases:
        model = result.model
        task_ids = {name: task.id for name, task in model.tasks().items()}
        edges = set(result.residual.edges) | set(result.back_edges)
        for source, target in edges:
            from_id = model.start_event().id if source is START else task_ids[source]
            goal = model.end_event().id if target is END else task_ids[target]
            assert goal in gateway_hops(model, from_id), (source, target)


def test_discovery_is_deterministic(pattern_results):
    for pattern, (log, result) in pattern_results.items():
        again = discover(log)
        assert serialize_bpmn_xml(again.model) == serialize_bpmn_xml(result.model), pattern


def test_epsilon_reaches_concurrency_stage():
    # an 9:1 interleaving imbalance reads as a loop by default and as
    # concurrency once the balance tolerance is widened
    log = EventLog({("a", "b", "c", "d"): 9, ("a", "c", "b", "d"): 1})
    strict = discover(log)
    assert strict.relation.sorted_pairs() == []
    assert strict.back_edges == frozenset({("c", "b")})
    loose = discover(log, epsilon=0.9)
    assert loose.relation.sorted_pairs() == [("b", "c")]
    assert loose.back_edges == frozenset()


def test_noise_reaches_filter_stage():
    log = EventLog({("a", "b", "d"): 96, ("a", "d"): 4})
    raw = discover(log, noise=0.0)
    assert ("a", "d") in raw.dfg.edges
    filtered = discover(log, noise=0.1)
    assert ("a", "d") not in filtered.dfg.edges
    language = enumerate_language(bpmn_to_petri(filtered.model), max_length=3)
    assert language == {("a", "b", "d")}
