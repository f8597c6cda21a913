"""BPMN model construction and serialization.

instantiate_gateways turns a filtered, loop-free graph into tasks wired
through nested gateway chains; weave_loops then adds the cyclic flows for
detected loop blocks. Serialization is deterministic: stable content-hash
ids, sorted element order.
"""

from __future__ import annotations

import hashlib
from collections.abc import Mapping
from dataclasses import dataclass
from xml.etree import ElementTree as ET

from .dfg import DFG, END, START, Node, edge_key
from .errors import EntryNotFound, InvariantViolation, MalformedXml
from .loops import LoopBlock
from .synthesis import GatewayTree, leaf

DIVERGING = "Diverging"
CONVERGING = "Converging"


def _hash_id(kind: str, seed: str) -> str:
    return f"{kind}_{hashlib.sha1(seed.encode('utf-8')).hexdigest()[:8]}"


@dataclass(frozen=True)
class StartEvent:
    id: str


@dataclass(frozen=True)
class EndEvent:
    id: str


@dataclass(frozen=True)
class Task:
    id: str
    name: str


@dataclass(frozen=True)
class ExclusiveGateway:
    id: str
    direction: str


@dataclass(frozen=True)
class ParallelGateway:
    id: str
    direction: str


BpmnNode = StartEvent | EndEvent | Task | ExclusiveGateway | ParallelGateway
Gateway = ExclusiveGateway | ParallelGateway


@dataclass(frozen=True)
class Flow:
    id: str
    source: str
    target: str


class BpmnModel:
    """Flow-node graph with one start event and one end event."""

    def __init__(self) -> None:
        self.nodes: dict[str, BpmnNode] = {}
        self.flows: dict[str, Flow] = {}
        self._out: dict[str, list[str]] = {}
        self._in: dict[str, list[str]] = {}

    def add(self, node: BpmnNode) -> BpmnNode:
        if node.id in self.nodes:
            raise InvariantViolation(f"duplicate node id {node.id}")
        self.nodes[node.id] = node
        self._out[node.id] = []
        self._in[node.id] = []
        return node

    def flow(self, source: str, target: str, flow_id: str | None = None) -> Flow:
        if source not in self.nodes or target not in self.nodes:
            raise InvariantViolation(f"flow endpoints missing: {source} -> {target}")
        if self.flow_between(source, target) is not None:
            raise InvariantViolation(f"duplicate flow {source} -> {target}")
        fid = flow_id or _hash_id("flow", f"{source}>{target}")
        if fid in self.flows:
            raise InvariantViolation(f"duplicate flow id {fid}")
        flow = Flow(fid, source, target)
        self.flows[fid] = flow
        self._out[source].append(fid)
        self._in[target].append(fid)
        return flow

    def remove_flow(self, flow_id: str) -> None:
        flow = self.flows.pop(flow_id)
        self._out[flow.source].remove(flow_id)
        self._in[flow.target].remove(flow_id)

    def outgoing(self, node_id: str) -> list[Flow]:
        return [self.flows[i] for i in self._out[node_id]]

    def incoming(self, node_id: str) -> list[Flow]:
        return [self.flows[i] for i in self._in[node_id]]

    def flow_between(self, source: str, target: str) -> Flow | None:
        for fid in self._out.get(source, ()):
            if self.flows[fid].target == target:
                return self.flows[fid]
        return None

    def insert_on_flow(self, flow_id: str, node: BpmnNode) -> None:
        """Replace source->target with source->node->target."""
        flow = self.flows[flow_id]
        self.remove_flow(flow_id)
        if node.id not in self.nodes:
            self.add(node)
        self.flow(flow.source, node.id)
        self.flow(node.id, flow.target)

    def start_event(self) -> StartEvent:
        return self._only(StartEvent)  # type: ignore[return-value]

    def end_event(self) -> EndEvent:
        return self._only(EndEvent)  # type: ignore[return-value]

    def _only(self, cls: type) -> BpmnNode:
        found = [n for n in self.nodes.values() if isinstance(n, cls)]
        if len(found) != 1:
            raise InvariantViolation(f"expected one {cls.__name__}, found {len(found)}")
        return found[0]

    def tasks(self) -> dict[str, Task]:
        """Task name -> node, names are unique by construction."""
        result: dict[str, Task] = {}
        for node in self.nodes.values():
            if isinstance(node, Task):
                if node.name in result:
                    raise InvariantViolation(f"duplicate task name {node.name!r}")
                result[node.name] = node
        return result

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BpmnModel):
            return NotImplemented
        return self.nodes == other.nodes and self.flows == other.flows

    def validate(self, allow_dangling_tasks: bool = False) -> None:
        """Check degree rules; raises InvariantViolation on the first breach.

        allow_dangling_tasks permits tasks with no outgoing flow, the state
        a loop tail is in before its back flow has been woven, and skips the
        start-to-end path check that such tasks necessarily fail.
        """
        start = self._only(StartEvent)
        end = self._only(EndEvent)
        self.tasks()
        for node_id in sorted(self.nodes):
            node = self.nodes[node_id]
            ins, outs = len(self._in[node_id]), len(self._out[node_id])
            if isinstance(node, StartEvent):
                ok = ins == 0 and outs == 1
            elif isinstance(node, EndEvent):
                ok = ins == 1 and outs == 0
            elif isinstance(node, Task):
                ok = ins == 1 and (outs == 1 or (allow_dangling_tasks and outs == 0))
            elif node.direction == DIVERGING:
                ok = ins == 1 and outs >= 2
            elif node.direction == CONVERGING:
                ok = ins >= 2 and outs == 1
            else:
                raise InvariantViolation(f"bad gateway direction on {node_id}")
            if not ok:
                raise InvariantViolation(
                    f"{type(node).__name__} {node_id} has {ins} in / {outs} out"
                )
        if not allow_dangling_tasks:
            forward = self._closure(start.id, self._out)
            backward = self._closure(end.id, self._in)
            astray = sorted(set(self.nodes) - (forward & backward))
            if astray:
                raise InvariantViolation(f"nodes off every start-end path: {astray}")

    def _closure(self, origin: str, flow_ids: dict[str, list[str]]) -> set[str]:
        seen = {origin}
        frontier = [origin]
        while frontier:
            node_id = frontier.pop()
            for fid in flow_ids[node_id]:
                flow = self.flows[fid]
                neighbor = flow.target if flow_ids is self._out else flow.source
                if neighbor not in seen:
                    seen.add(neighbor)
                    frontier.append(neighbor)
        return seen


_END_PORT = object()  # stands in for the end event in split child lists


def _gateway(op: str, direction: str, seed: str) -> Gateway:
    cls = ExclusiveGateway if op == "xor" else ParallelGateway
    return cls(_hash_id(op, seed), direction)  # type: ignore[return-value]


def _build_chain(
    model: BpmnModel,
    anchor_id: str,
    tree: GatewayTree | None,
    terminal_port: bool,
    owner: str,
    direction: str,
) -> dict[object, str]:
    """Materialize one node's gateway chain; returns leaf label -> port id.

    direction Diverging builds the split side (flows run anchor -> gateways),
    Converging the join side (gateways -> anchor). The terminal port, when
    present, is one more exclusive alternative at the top level; its port is
    keyed by the _END_PORT marker.
    """
    side = "split" if direction == DIVERGING else "join"

    def connect(parent: str, child: str) -> None:
        if direction == DIVERGING:
            model.flow(parent, child)
        else:
            model.flow(child, parent)

    def attach(parent_id: str, children: list[GatewayTree], path: str, ports: dict) -> None:
        for index, child in enumerate(children):
            if child.op == "task":
                ports[child.label] = parent_id
            else:
                seed = f"{side}:{owner}:{path}.{index}:{child.op}"
                sub = model.add(_gateway(child.op, direction, seed))
                connect(parent_id, sub.id)
                attach(sub.id, list(child.children), f"{path}.{index}", ports)

    ports: dict[object, str] = {}
    leaf_count = len(tree.leaves()) if tree is not None else 0
    total = leaf_count + (1 if terminal_port else 0)
    if total == 0:
        return ports
    if total == 1:
        if terminal_port:
            ports[_END_PORT] = anchor_id
        else:
            ports[tree.label] = anchor_id  # type: ignore[union-attr]
        return ports

    if terminal_port or (tree is not None and tree.op == "xor"):
        top_op = "xor"
    else:
        top_op = tree.op if tree is not None and tree.op == "and" else "xor"
    top = model.add(_gateway(top_op, direction, f"{side}:{owner}:top:{top_op}"))
    connect(anchor_id, top.id)

    children: list[GatewayTree] = []
    if tree is not None:
        children = list(tree.children) if tree.op == top_op else [tree]
    attach(top.id, children, "0", ports)
    if terminal_port:
        ports[_END_PORT] = top.id
    return ports


def _effective_tree(
    trees: Mapping[Node, GatewayTree], node: Node, neighbors: list[str], side: str
) -> GatewayTree | None:
    tree = trees.get(node)
    if tree is None:
        if len(neighbors) > 1:
            raise InvariantViolation(f"no {side} tree for multi-degree node {node!r}")
        return leaf(neighbors[0]) if neighbors else None
    if sorted(tree.leaves()) != sorted(neighbors):
        raise InvariantViolation(
            f"{side} tree leaves {sorted(tree.leaves())} != neighbors of {node!r}"
        )
    return tree


def instantiate_gateways(
    dfg: DFG,
    split_trees: Mapping[Node, GatewayTree],
    join_trees: Mapping[Node, GatewayTree],
) -> BpmnModel:
    """Build the acyclic model skeleton: tasks plus split/join gateway chains.

    split_trees/join_trees group each node's activity successors and
    predecessors; nodes with a single neighbor need no entry. Every graph
    edge becomes exactly one flow between the source's split structure and
    the target's join structure. The graph must be loop-free (back edges
    already removed); tasks whose only continuation was a back edge are
    left dangling for weave_loops to finish.
    """
    model = BpmnModel()
    start = model.add(StartEvent(_hash_id("start", "start")))
    end = model.add(EndEvent(_hash_id("end", "end")))
    task_ids = {
        name: model.add(Task(_hash_id("task", f"task:{name}"), name)).id
        for name in sorted(dfg.activities)
    }

    out_port: dict[object, dict[object, str]] = {}
    in_port: dict[object, dict[object, str]] = {}

    for node in [START] + sorted(dfg.activities):
        successors = dfg.successors(node)
        if not successors:
            continue
        anchor = start.id if node is START else task_ids[node]
        owner = "START" if node is START else node
        tree = _effective_tree(
            split_trees, node, [s for s in successors if isinstance(s, str)], "split"
        )
        ports = _build_chain(model, anchor, tree, END in successors, owner, DIVERGING)
        out_port[node] = {(END if k is _END_PORT else k): v for k, v in ports.items()}

    for node in sorted(dfg.activities) + [END]:
        predecessors = dfg.predecessors(node)
        if not predecessors:
            continue
        anchor = end.id if node is END else task_ids[node]
        owner = "END" if node is END else node
        tree = _effective_tree(
            join_trees, node, [p for p in predecessors if isinstance(p, str)], "join"
        )
        ports = _build_chain(model, anchor, tree, START in predecessors, owner, CONVERGING)
        in_port[node] = {(START if k is _END_PORT else k): v for k, v in ports.items()}

    for edge in sorted(dfg.edges, key=edge_key):
        source, target = edge
        model.flow(out_port[source][target], in_port[target][source])

    model.validate(allow_dangling_tasks=True)
    return model


def _ancestor_flows(model: BpmnModel, task_id: str, label: str) -> list[str]:
    """Flow ids from the task's direct input up through diverging gateways.

    The chain stops below joins, tasks, and the start event: re-entering
    above a diverging gateway re-enables the whole alternative or parallel
    block, which is what repeated bodies need.
    """
    chain: list[str] = []
    current = task_id
    while True:
        incoming = model.incoming(current)
        if len(incoming) != 1:
            if not chain:
                raise EntryNotFound(f"loop entry {label!r} has no single input flow")
            return chain
        flow = incoming[0]
        chain.append(flow.id)
        source = model.nodes[flow.source]
        if isinstance(source, Gateway) and source.direction == DIVERGING:
            current = source.id
            continue
        return chain


def weave_loops(model: BpmnModel, blocks: list[LoopBlock]) -> BpmnModel:
    """Add the cyclic flows for each loop block, mutating the model.

    Entries anchor at an exclusive join inserted on the deepest flow common
    to all of the block's entries (their shared gateway ancestry), falling
    back to one join per entry when no common flow exists. Exits get an
    exclusive split inserted on their outgoing flow; an exit with no forward
    continuation connects straight to the join.
    """
    task_ids = {name: task.id for name, task in model.tasks().items()}
    created_joins: set[str] = set()
    back_targets: dict[str, set[str]] = {}

    for block in blocks:
        entries = sorted(block.entry_nodes)
        exits = sorted(block.exit_nodes)
        for name in entries + exits:
            if name not in task_ids:
                raise EntryNotFound(f"loop node {name!r} has no task in the model")
        chains = {e: _ancestor_flows(model, task_ids[e], e) for e in entries}
        if len(entries) == 1:
            anchors = [chains[entries[0]][0]]
        else:
            shared = set(chains[entries[0]])
            for entry in entries[1:]:
                shared &= set(chains[entry])
            if shared:
                anchors = [next(f for f in chains[entries[0]] if f in shared)]
            else:
                anchors = sorted({chains[e][0] for e in entries})

        join_ids = []
        for flow_id in anchors:
            flow = model.flows[flow_id]
            if flow.source in created_joins:
                join_ids.append(flow.source)
                continue
            join = _gateway("xor", CONVERGING, f"loopjoin:{flow.source}:{flow.target}")
            model.insert_on_flow(flow_id, join)
            created_joins.add(join.id)
            join_ids.append(join.id)
        for exit_name in exits:
            back_targets.setdefault(exit_name, set()).update(join_ids)

    for exit_name in sorted(back_targets):
        task_id = task_ids[exit_name]
        targets = sorted(back_targets[exit_name])
        outs = model.outgoing(task_id)
        if len(outs) > 1:
            raise InvariantViolation(f"task {exit_name!r} already has {len(outs)} outputs")
        if outs:
            split = _gateway("xor", DIVERGING, f"loopsplit:{exit_name}")
            model.insert_on_flow(outs[0].id, split)
            source = split.id
        elif len(targets) == 1:
            model.flow(task_id, targets[0])
            continue
        else:
            split = model.add(_gateway("xor", DIVERGING, f"loopsplit:{exit_name}"))
            model.flow(task_id, split.id)
            source = split.id
        for join_id in targets:
            if model.flow_between(source, join_id) is None:
                model.flow(source, join_id)
    return model


_BPMN_NS = "http://www.omg.org/spec/BPMN/20100524/MODEL"
_KIND_ORDER = {StartEvent: 0, EndEvent: 1, Task: 2, ExclusiveGateway: 3, ParallelGateway: 4}
_TAGS = {
    StartEvent: "startEvent",
    EndEvent: "endEvent",
    Task: "task",
    ExclusiveGateway: "exclusiveGateway",
    ParallelGateway: "parallelGateway",
}


def serialize_bpmn_xml(model: BpmnModel) -> bytes:
    """Render the model as BPMN 2.0 XML, byte-stable for equal models."""
    root = ET.Element("definitions")
    root.set("xmlns", _BPMN_NS)
    root.set("id", "definitions_1")
    root.set("targetNamespace", "http://loopminer.dev/bpmn")
    process = ET.SubElement(root, "process")
    process.set("id", "process_1")
    process.set("isExecutable", "false")
    for node_id in sorted(model.nodes):
        node = model.nodes[node_id]
        element = ET.SubElement(process, _TAGS[type(node)])
        element.set("id", node.id)
        if isinstance(node, Task):
            element.set("name", node.name)
        elif isinstance(node, (ExclusiveGateway, ParallelGateway)):
            element.set("gatewayDirection", node.direction)
    for flow in sorted(model.flows.values(), key=lambda f: (f.source, f.target)):
        element = ET.SubElement(process, "sequenceFlow")
        element.set("id", flow.id)
        element.set("sourceRef", flow.source)
        element.set("targetRef", flow.target)
    ET.indent(root, space="  ")
    return ET.tostring(root, encoding="utf-8", xml_declaration=True)


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def parse_bpmn_xml(data: bytes) -> BpmnModel:
    """Inverse of serialize_bpmn_xml; tolerates foreign namespaces.

    Gateways without a gatewayDirection attribute get their direction
    inferred from flow arity (more outputs than inputs means a split).
    """
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise MalformedXml(f"BPMN parse failed: {exc}") from exc
    process = next((e for e in root.iter() if _local(e.tag) == "process"), None)
    if process is None:
        raise MalformedXml("no process element")

    node_elements: list[tuple[str, str, ET.Element]] = []
    flow_refs: list[tuple[str, str, str]] = []
    for element in process:
        tag = _local(element.tag)
        if tag == "sequenceFlow":
            fid, source, target = (
                element.get("id"),
                element.get("sourceRef"),
                element.get("targetRef"),
            )
            if not fid or not source or not target:
                raise MalformedXml(f"sequenceFlow {fid or '?'} has missing endpoints")
            flow_refs.append((fid, source, target))
            continue
        if tag not in ("startEvent", "endEvent", "task", "exclusiveGateway", "parallelGateway"):
            continue
        node_id = element.get("id")
        if node_id is None:
            raise MalformedXml(f"{tag} element without id")
        node_elements.append((tag, node_id, element))

    out_count = {source: 0 for _, source, _ in flow_refs}
    in_count = {target: 0 for _, _, target in flow_refs}
    for _, source, target in flow_refs:
        out_count[source] += 1
        in_count[target] += 1

    model = BpmnModel()
    for tag, node_id, element in node_elements:
        if tag == "startEvent":
            model.add(StartEvent(node_id))
        elif tag == "endEvent":
            model.add(EndEvent(node_id))
        elif tag == "task":
            model.add(Task(node_id, element.get("name", node_id)))
        else:
            direction = element.get("gatewayDirection")
            if direction not in (DIVERGING, CONVERGING):
                outs = out_count.get(node_id, 0)
                ins = in_count.get(node_id, 0)
                if outs > 1 >= ins:
                    direction = DIVERGING
                elif ins > 1 >= outs:
                    direction = CONVERGING
                else:
                    raise MalformedXml(f"gateway {node_id} direction is undecidable")
            cls = ExclusiveGateway if tag == "exclusiveGateway" else ParallelGateway
            model.add(cls(node_id, direction))
    for fid, source, target in flow_refs:
        if source not in model.nodes or target not in model.nodes:
            raise MalformedXml(f"sequenceFlow {fid} references unknown nodes")
        model.flow(source, target, flow_id=fid)
    return model


def serialize_dot(model: BpmnModel) -> str:
    """Graphviz rendering: boxes for tasks, diamonds for gateways."""
    lines = ["digraph bpmn {", "  rankdir=LR;"]
    for node in sorted(model.nodes.values(), key=lambda n: (_KIND_ORDER[type(n)], n.id)):
        if isinstance(node, StartEvent):
            shape = 'shape=circle, label="start"'
        elif isinstance(node, EndEvent):
            shape = 'shape=doublecircle, label="end"'
        elif isinstance(node, Task):
            shape = f'shape=box, label="{node.name}"'
        elif isinstance(node, ExclusiveGateway):
            shape = 'shape=diamond, label="×"'
        else:
            shape = 'shape=diamond, label="+"'
        lines.append(f'  "{node.id}" [{shape}];')
    for flow_id in sorted(model.flows):
        flow = model.flows[flow_id]
        lines.append(f'  "{flow.source}" -> "{flow.target}";')
    lines.append("}")
    return "\n".join(lines) + "\n"
