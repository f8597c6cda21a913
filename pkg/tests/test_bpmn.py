"""BPMN construction, loop weaving, XML round trips, determinism."""

from __future__ import annotations

import pytest

from loopminer.bpmn import (
    CONVERGING,
    DIVERGING,
    BpmnModel,
    EndEvent,
    ExclusiveGateway,
    ParallelGateway,
    StartEvent,
    Task,
    parse_bpmn_xml,
    serialize_bpmn_xml,
    serialize_dot,
    weave_loops,
)
from loopminer.discovery import discover
from loopminer.errors import EntryNotFound, InvariantViolation, MalformedXml
from loopminer.eventlog import EventLog
from loopminer.loops import LoopBlock, LoopKind
from loopminer.petri import bpmn_to_petri, enumerate_language


def count_types(model: BpmnModel) -> dict[str, int]:
    counts: dict[str, int] = {}
    for node in model.nodes.values():
        counts[type(node).__name__] = counts.get(type(node).__name__, 0) + 1
    return counts


def test_running_example_shape(running_log):
    model = discover(running_log).model
    assert len(model.nodes) == 11
    assert len(model.flows) == 12
    assert count_types(model) == {
        "StartEvent": 1,
        "EndEvent": 1,
        "Task": 5,
        "ExclusiveGateway": 2,
        "ParallelGateway": 2,
    }
    model.validate()


def test_linear_log_has_no_gateways():
    model = discover(EventLog({("a", "b", "c"): 7})).model
    assert len(model.nodes) == 5
    assert len(model.flows) == 4
    counts = count_types(model)
    assert "ExclusiveGateway" not in counts and "ParallelGateway" not in counts
    model.validate()


def test_pure_choice_gets_one_split_one_join():
    model = discover(EventLog({("a", "b", "d"): 5, ("a", "c", "d"): 5})).model
    gateways = [n for n in model.nodes.values() if isinstance(n, ExclusiveGateway)]
    assert sorted(g.direction for g in gateways) == [CONVERGING, DIVERGING]
    assert not any(isinstance(n, ParallelGateway) for n in model.nodes.values())
    split = next(g for g in gateways if g.direction == DIVERGING)
    join = next(g for g in gateways if g.direction == CONVERGING)
    assert {model.nodes[f.target].name for f in model.outgoing(split.id)} == {"b", "c"}
    assert {model.nodes[f.source].name for f in model.incoming(join.id)} == {"b", "c"}


def test_xml_round_trip_preserves_model(running_log):
    model = discover(running_log).model
    restored = parse_bpmn_xml(serialize_bpmn_xml(model))
    assert restored == model
    assert set(restored.flows) == set(model.flows)  # flow ids survive


def test_serialization_is_byte_stable(running_log):
    first = serialize_bpmn_xml(discover(running_log).model)
    second = serialize_bpmn_xml(discover(running_log).model)
    assert first == second
    assert first.startswith(b"<?xml")


def test_linear_xml_element_counts():
    xml = serialize_bpmn_xml(discover(EventLog({("a", "b", "c"): 7})).model).decode()
    assert xml.count("<startEvent") == 1
    assert xml.count("<endEvent") == 1
    assert xml.count("<task") == 3
    assert xml.count("<sequenceFlow") == 4
    assert "Gateway" not in xml


def test_direction_inference_from_arity(running_log):
    xml = serialize_bpmn_xml(discover(running_log).model).decode()
    stripped = xml.replace(' gatewayDirection="Diverging"', "").replace(
        ' gatewayDirection="Converging"', ""
    )
    assert "gatewayDirection" not in stripped
    assert parse_bpmn_xml(stripped.encode()) == discover(running_log).model


UNDECIDABLE = b"""<?xml version='1.0' encoding='utf-8'?>
<definitions xmlns="http://www.omg.org/spec/BPMN/20100524/MODEL" id="d" targetNamespace="t">
  <process id="p" isExecutable="false">
    <startEvent id="s" />
    <endEvent id="e" />
    <exclusiveGateway id="g" />
    <sequenceFlow id="f1" sourceRef="s" targetRef="g" />
    <sequenceFlow id="f2" sourceRef="g" targetRef="e" />
  </process>
</definitions>
"""


def test_one_in_one_out_gateway_is_undecidable():
    with pytest.raises(MalformedXml, match="undecidable"):
        parse_bpmn_xml(UNDECIDABLE)


def test_parse_rejects_bad_documents():
    with pytest.raises(MalformedXml):
        parse_bpmn_xml(b"this is not xml")
    with pytest.raises(MalformedXml, match="no process"):
        parse_bpmn_xml(b"<definitions><other/></definitions>")
    with pytest.raises(MalformedXml, match="missing endpoints"):
        parse_bpmn_xml(
            b"<definitions><process><task id='a'/>"
            b"<sequenceFlow id='f' sourceRef='a'/></process></definitions>"
        )
    with pytest.raises(MalformedXml, match="unknown nodes"):
        parse_bpmn_xml(
            b"<definitions><process><task id='a'/>"
            b"<sequenceFlow id='f' sourceRef='a' targetRef='ghost'/></process></definitions>"
        )
    with pytest.raises(MalformedXml, match="without id"):
        parse_bpmn_xml(b"<definitions><process><task/></process></definitions>")


def linear_model() -> BpmnModel:
    model = BpmnModel()
    model.add(StartEvent("s"))
    model.add(Task("t1", "a"))
    model.add(EndEvent("e"))
    model.flow("s", "t1")
    model.flow("t1", "e")
    return model


def test_validate_degree_rules():
    model = linear_model()
    model.validate()

    two_starts = linear_model()
    two_starts.add(StartEvent("s2"))
    with pytest.raises(InvariantViolation, match="expected one StartEvent"):
        two_starts.validate()

    busy_task = linear_model()
    busy_task.add(Task("t2", "b"))
    busy_task.flow("t1", "t2")  # t1 now has two outputs, t2 dangles
    with pytest.raises(InvariantViolation):
        busy_task.validate(allow_dangling_tasks=True)


def test_validate_rejects_inputless_task():
    stranded = linear_model()
    stranded.add(Task("island", "x"))
    with pytest.raises(InvariantViolation):
        stranded.validate(allow_dangling_tasks=True)


def test_validate_dangling_mode_permits_loop_tails():
    model = BpmnModel()
    model.add(StartEvent("s"))
    model.add(Task("t1", "a"))
    model.add(ExclusiveGateway("g", DIVERGING))
    model.add(Task("t2", "b"))  # loop tail awaiting its back flow
    model.add(Task("t3", "c"))
    model.add(EndEvent("e"))
    for source, target in [("s", "t1"), ("t1", "g"), ("g", "t2"), ("g", "t3"), ("t3", "e")]:
        model.flow(source, target)
    with pytest.raises(InvariantViolation):
        model.validate()
    model.validate(allow_dangling_tasks=True)


def test_insert_on_flow_splices_node():
    model = linear_model()
    flow = model.flow_between("s", "t1")
    model.insert_on_flow(flow.id, Task("mid", "m"))
    assert model.flow_between("s", "t1") is None
    assert model.flow_between("s", "mid") is not None
    assert model.flow_between("mid", "t1") is not None
    model.validate()


def test_weave_single_loop_structure_and_language():
    result = discover(EventLog({("a", "b", "d"): 5, ("a", "b", "c", "b", "d"): 3}))
    model = result.model
    model.validate()
    task_b = model.tasks()["b"]
    join_flow = model.incoming(task_b.id)
    assert len(join_flow) == 1
    join = model.nodes[join_flow[0].source]
    assert isinstance(join, ExclusiveGateway) and join.direction == CONVERGING
    assert len(model.incoming(join.id)) == 2

    net = bpmn_to_petri(model)
    language = enumerate_language(net, max_length=9)
    assert language == {
        ("a", "b", "d"),
        ("a", "b", "c", "b", "d"),
        ("a", "b", "c", "b", "c", "b", "d"),
        ("a", "b", "c", "b", "c", "b", "c", "b", "d"),
    }


def test_weave_no_blocks_is_identity(running_log):
    model = discover(running_log).model
    nodes_before = dict(model.nodes)
    flows_before = dict(model.flows)
    weave_loops(model, [])
    assert model.nodes == nodes_before
    assert model.flows == flows_before


def test_weave_merges_shared_target_entries(pattern_results):
    # two alternative bodies returning to the same activity get one shared
    # join with three inputs: the original path plus both back flows
    _, result = pattern_results["L2"]
    model = result.model
    task_b = model.tasks()["b"]
    triple_joins = [
        n
        for n in model.nodes.values()
        if isinstance(n, ExclusiveGateway)
        and n.direction == CONVERGING
        and len(model.incoming(n.id)) == 3
    ]
    assert len(triple_joins) == 1
    (outgoing,) = model.outgoing(triple_joins[0].id)
    assert outgoing.target == task_b.id


def test_weave_unknown_entry_raises():
    model = discover(EventLog({("a", "b"): 3})).model
    block = LoopBlock(
        back_edges=frozenset({("ghost", "a")}),
        entry_nodes=frozenset({"a"}),
        exit_nodes=frozenset({"ghost"}),
        body=frozenset({"a", "ghost"}),
        kind=LoopKind.SINGLE,
    )
    with pytest.raises(EntryNotFound):
        weave_loops(model, [block])


def test_dot_output(running_log):
    model = discover(running_log).model
    dot = serialize_dot(model)
    assert dot == serialize_dot(discover(running_log).model)
    assert dot.startswith("digraph bpmn {")
    assert 'label="×"' in dot  # exclusive gateways
    assert 'label="+"' in dot  # parallel gateways
    assert dot.count('label="start"') == 1
    assert dot.count("->") == 12
