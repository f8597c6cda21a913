"""Petri-net conversion and conformance metrics.

The BPMN model is mapped onto a labeled Petri net (tasks become visible
transitions, exclusive gateways become places, parallel gateways become
silent transitions) and measured by token replay: fitness from token
counts, precision from escaping edges over replay states, generalization
from transition execution frequencies. Size, control-flow complexity and
structuredness are computed on the BPMN model itself.
"""

from __future__ import annotations

import math
from collections import Counter, deque
from collections.abc import Callable
from dataclasses import dataclass
from xml.etree import ElementTree as ET

from .bpmn import (
    CONVERGING,
    DIVERGING,
    BpmnModel,
    EndEvent,
    ExclusiveGateway,
    ParallelGateway,
    StartEvent,
    Task,
)
from .errors import BothZero, InvariantViolation
from .eventlog import EventLog, Trace


@dataclass(frozen=True)
class Place:
    id: str


@dataclass(frozen=True)
class Transition:
    id: str
    label: str | None  # None marks a silent transition


class PetriNet:
    """Place/transition net with one initial and one final marking."""

    def __init__(self) -> None:
        self.places: dict[str, Place] = {}
        self.transitions: dict[str, Transition] = {}
        self.arcs: set[tuple[str, str]] = set()
        self.initial_marking: dict[str, int] = {}
        self.final_marking: dict[str, int] = {}
        self._pre: dict[str, list[str]] = {}
        self._post: dict[str, list[str]] = {}

    def add_place(self, place_id: str) -> str:
        self.places[place_id] = Place(place_id)
        return place_id

    def add_transition(self, transition_id: str, label: str | None) -> str:
        self.transitions[transition_id] = Transition(transition_id, label)
        self._pre[transition_id] = []
        self._post[transition_id] = []
        return transition_id

    def add_arc(self, source: str, target: str) -> None:
        source_is_place = source in self.places
        target_is_place = target in self.places
        if source_is_place == target_is_place:
            raise InvariantViolation(f"arc must join place and transition: {source}->{target}")
        if (source, target) in self.arcs:
            return
        self.arcs.add((source, target))
        if source_is_place:
            self._pre[target].append(source)
            self._pre[target].sort()
        else:
            self._post[source].append(target)
            self._post[source].sort()

    def preset(self, transition_id: str) -> list[str]:
        return self._pre[transition_id]

    def postset(self, transition_id: str) -> list[str]:
        return self._post[transition_id]

    def silent_ids(self) -> list[str]:
        return sorted(t for t, tr in self.transitions.items() if tr.label is None)

    def by_label(self) -> dict[str, str]:
        result: dict[str, str] = {}
        for transition_id in sorted(self.transitions):
            label = self.transitions[transition_id].label
            if label is not None:
                result.setdefault(label, transition_id)
        return result


def bpmn_to_petri(model: BpmnModel) -> PetriNet:
    """Map a sound model onto a Petri net preserving its trace semantics.

    Node map: start/end events and exclusive gateways become places, tasks
    become labeled transitions, parallel gateways become silent transitions.
    A flow between two places inserts a silent transition, between two
    transitions a place; mixed flows become plain arcs.
    """
    net = PetriNet()
    node_kind: dict[str, str] = {}
    for node_id in sorted(model.nodes):
        node = model.nodes[node_id]
        if isinstance(node, (StartEvent, EndEvent, ExclusiveGateway)):
            net.add_place(f"p_{node_id}")
            node_kind[node_id] = "place"
        elif isinstance(node, Task):
            net.add_transition(f"t_{node_id}", node.name)
            node_kind[node_id] = "transition"
        elif isinstance(node, ParallelGateway):
            net.add_transition(f"t_{node_id}", None)
            node_kind[node_id] = "transition"
    for flow in sorted(model.flows.values(), key=lambda f: (f.source, f.target)):
        source_kind, target_kind = node_kind[flow.source], node_kind[flow.target]
        source = f"p_{flow.source}" if source_kind == "place" else f"t_{flow.source}"
        target = f"p_{flow.target}" if target_kind == "place" else f"t_{flow.target}"
        if source_kind == target_kind == "place":
            bridge = net.add_transition(f"t_{flow.id}", None)
            net.add_arc(source, bridge)
            net.add_arc(bridge, target)
        elif source_kind == target_kind == "transition":
            bridge = net.add_place(f"p_{flow.id}")
            net.add_arc(source, bridge)
            net.add_arc(bridge, target)
        else:
            net.add_arc(source, target)
    net.initial_marking = {f"p_{model.start_event().id}": 1}
    net.final_marking = {f"p_{model.end_event().id}": 1}
    return net


def _enabled(net: PetriNet, marking: Counter, transition_id: str) -> bool:
    return all(marking[p] >= 1 for p in net.preset(transition_id))


def _marking_key(marking: Counter) -> tuple[tuple[str, int], ...]:
    return tuple(sorted((p, c) for p, c in marking.items() if c > 0))


def _silent_path(
    net: PetriNet,
    marking: Counter,
    goal: Callable[[Counter], bool],
    bound: int,
) -> list[str] | None:
    """Shortest sequence of silent firings to a marking satisfying goal."""
    if goal(marking):
        return []
    silents = net.silent_ids()
    start_key = _marking_key(marking)
    seen = {start_key}
    frontier: deque[tuple[Counter, list[str]]] = deque([(marking, [])])
    while frontier:
        current, path = frontier.popleft()
        if len(path) >= bound:
            continue
        for silent in silents:
            if not _enabled(net, current, silent):
                continue
            after = current.copy()
            for place in net.preset(silent):
                after[place] -= 1
            for place in net.postset(silent):
                after[place] += 1
            key = _marking_key(after)
            if key in seen:
                continue
            seen.add(key)
            if goal(after):
                return path + [silent]
            frontier.append((after, path + [silent]))
    return None


@dataclass
class ReplayResult:
    produced: int
    consumed: int
    missing: int
    remaining: int
    fired: Counter

    @property
    def trace_fitness(self) -> float:
        return 0.5 * (1 - self.missing / self.consumed) + 0.5 * (
            1 - self.remaining / self.produced
        )


def replay(net: PetriNet, trace: Trace) -> ReplayResult:
    """Token replay of one trace; never raises, shortfalls become counts.

    Tokens are produced for the initial marking and consumed for the final
    one, so an empty trace on a sound net scores 1.0 only if the final
    marking is silently reachable. Events without a matching transition
    count one missing and one consumed token.
    """
    marking = Counter(net.initial_marking)
    produced = sum(net.initial_marking.values())
    consumed = 0
    missing = 0
    fired: Counter = Counter()
    by_label = net.by_label()
    bound = 2 * len(net.transitions)

    def fire(transition_id: str) -> None:
        nonlocal produced, consumed, missing
        for place in net.preset(transition_id):
            if marking[place] >= 1:
                marking[place] -= 1
            else:
                missing += 1
            consumed += 1
        for place in net.postset(transition_id):
            marking[place] += 1
            produced += 1
        fired[transition_id] += 1

    for activity in trace:
        transition_id = by_label.get(activity)
        if transition_id is None:
            missing += 1
            consumed += 1
            continue
        if not _enabled(net, marking, transition_id):
            path = _silent_path(
                net, marking, lambda m, t=transition_id: _enabled(net, m, t), bound
            )
            for silent in path or []:
                fire(silent)
        fire(transition_id)

    def covers_final(m: Counter) -> bool:
        return all(m[p] >= n for p, n in net.final_marking.items())

    if not covers_final(marking):
        for silent in _silent_path(net, marking, covers_final, bound) or []:
            fire(silent)
    for place, needed in net.final_marking.items():
        available = min(marking[place], needed)
        missing += needed - available
        marking[place] -= available
        consumed += needed
    remaining = sum(marking.values())
    return ReplayResult(produced, consumed, missing, remaining, fired)


def replay_fitness(net: PetriNet, event_log: EventLog) -> float:
    """Token fitness aggregated over variants, weighted by multiplicity."""
    produced = consumed = missing = remaining = 0
    for trace, count in event_log.variants.items():
        result = replay(net, trace)
        produced += count * result.produced
        consumed += count * result.consumed
        missing += count * result.missing
        remaining += count * result.remaining
    return 0.5 * (1 - missing / consumed) + 0.5 * (1 - remaining / produced)


def _visible_closure(net: PetriNet, marking: Counter, bound: int) -> set[str]:
    """Labels enabled in any marking reachable through silent firings."""
    silents = net.silent_ids()
    visibles = [
        (t, net.transitions[t].label)
        for t in sorted(net.transitions)
        if net.transitions[t].label is not None
    ]
    allowed: set[str] = set()
    seen = {_marking_key(marking)}
    frontier: deque[tuple[Counter, int]] = deque([(marking, 0)])
    while frontier:
        current, depth = frontier.popleft()
        for transition_id, label in visibles:
            if _enabled(net, current, transition_id):
                allowed.add(label)
        if depth >= bound:
            continue
        for silent in silents:
            if not _enabled(net, current, silent):
                continue
            after = current.copy()
            for place in net.preset(silent):
                after[place] -= 1
            for place in net.postset(silent):
                after[place] += 1
            key = _marking_key(after)
            if key not in seen:
                seen.add(key)
                frontier.append((after, depth + 1))
    return allowed


def precision(net: PetriNet, event_log: EventLog) -> float:
    """Escaping-edges precision over the log's replayable prefix states.

    Each prefix a trace actually reaches is a state; the state's allowed
    set is every activity the net can fire next (after silent moves), the
    observed set is every activity the log continues with. Variants stop
    contributing at their first non-replayable event. States are weighted
    by visit frequency. A denominator of zero yields 1.0 vacuously.
    """
    by_label = net.by_label()
    bound = 2 * len(net.transitions)
    states: dict[Trace, dict] = {}

    for trace, count in event_log.variants.items():
        marking = Counter(net.initial_marking)
        for index in range(len(trace) + 1):
            prefix = trace[:index]
            state = states.get(prefix)
            if state is None:
                state = {
                    "weight": 0,
                    "observed": set(),
                    "allowed": _visible_closure(net, marking, bound),
                }
                states[prefix] = state
            state["weight"] += count
            if index == len(trace):
                break
            activity = trace[index]
            state["observed"].add(activity)
            transition_id = by_label.get(activity)
            if transition_id is None:
                break
            if not _enabled(net, marking, transition_id):
                path = _silent_path(
                    net, marking, lambda m, t=transition_id: _enabled(net, m, t), bound
                )
                if path is None:
                    break
                for silent in path:
                    for place in net.preset(silent):
                        marking[place] -= 1
                    for place in net.postset(silent):
                        marking[place] += 1
            for place in net.preset(transition_id):
                marking[place] -= 1
            for place in net.postset(transition_id):
                marking[place] += 1

    escaping_total = 0
    allowed_total = 0
    for state in states.values():
        escaping_total += state["weight"] * len(state["allowed"] - state["observed"])
        allowed_total += state["weight"] * len(state["allowed"])
    if allowed_total == 0:
        return 1.0
    return 1 - escaping_total / allowed_total


def generalization(net: PetriNet, event_log: EventLog) -> float:
    """Transition-frequency generalization of the replayed log.

    1 - mean over transitions of sqrt(1/executions); transitions the
    replay never fires contribute a full 1 to the mean.
    """
    executions: Counter = Counter()
    for trace, count in event_log.variants.items():
        result = replay(net, trace)
        for transition_id, times in result.fired.items():
            executions[transition_id] += count * times
    if not net.transitions:
        return 0.0
    penalty = 0.0
    for transition_id in net.transitions:
        times = executions.get(transition_id, 0)
        penalty += 1.0 if times == 0 else math.sqrt(1.0 / times)
    return 1 - penalty / len(net.transitions)


def f_score(fitness_value: float, precision_value: float) -> float:
    """Harmonic mean of fitness and precision."""
    if fitness_value == 0 and precision_value == 0:
        raise BothZero("fitness and precision are both zero")
    return 2 * fitness_value * precision_value / (fitness_value + precision_value)


def size(model: BpmnModel) -> int:
    return len(model.nodes) + len(model.flows)


def cfc(model: BpmnModel, include_joins: bool = False) -> int:
    """Control-flow complexity: XOR splits add their fan-out, AND splits 1.

    include_joins adds the mirror contribution of converging gateways
    (XOR join fan-in, AND join 1).
    """
    total = 0
    for node_id in sorted(model.nodes):
        node = model.nodes[node_id]
        if isinstance(node, ExclusiveGateway):
            if node.direction == DIVERGING:
                total += len(model.outgoing(node_id))
            elif include_joins:
                total += len(model.incoming(node_id))
        elif isinstance(node, ParallelGateway):
            if node.direction == DIVERGING or include_joins:
                total += 1
    return total


def _dominators(
    nodes: list[str], edges: dict[str, list[str]], root: str
) -> dict[str, set[str]]:
    predecessors: dict[str, list[str]] = {n: [] for n in nodes}
    for source in nodes:
        for target in edges.get(source, ()):
            predecessors[target].append(source)
    dom = {n: set(nodes) for n in nodes}
    dom[root] = {root}
    changed = True
    while changed:
        changed = False
        for node in nodes:
            if node == root:
                continue
            if not predecessors[node]:
                merged = {node}
            else:
                merged = set(nodes)
                for pred in predecessors[node]:
                    merged &= dom[pred]
                merged |= {node}
            if merged != dom[node]:
                dom[node] = merged
                changed = True
    return dom


def structuredness(model: BpmnModel) -> float:
    """Fraction of gateways in matched same-type split/join pairs.

    A split matches a join when the join is the split's nearest
    postdominating join of the same gateway type and the split is the
    join's nearest dominating split of that type (mutual nearest pairing).
    Gateway-free models are vacuously 1.0.
    """
    gateways = {
        node_id: node
        for node_id, node in model.nodes.items()
        if isinstance(node, (ExclusiveGateway, ParallelGateway))
    }
    if not gateways:
        return 1.0
    nodes = sorted(model.nodes)
    forward = {n: sorted(f.target for f in model.outgoing(n)) for n in nodes}
    backward = {n: sorted(f.source for f in model.incoming(n)) for n in nodes}
    dom = _dominators(nodes, forward, model.start_event().id)
    postdom = _dominators(nodes, backward, model.end_event().id)

    def nearest(candidates: list[str], depth: dict[str, set[str]]) -> str | None:
        if not candidates:
            return None
        return sorted(candidates, key=lambda g: (-len(depth[g]), g))[0]

    split_match: dict[str, str | None] = {}
    join_match: dict[str, str | None] = {}
    for gateway_id, gateway in gateways.items():
        if gateway.direction == DIVERGING:
            pool = [
                g
                for g in postdom[gateway_id]
                if g != gateway_id
                and g in gateways
                and gateways[g].direction == CONVERGING
                and type(gateways[g]) is type(gateway)
            ]
            split_match[gateway_id] = nearest(pool, postdom)
        else:
            pool = [
                g
                for g in dom[gateway_id]
                if g != gateway_id
                and g in gateways
                and gateways[g].direction == DIVERGING
                and type(gateways[g]) is type(gateway)
            ]
            join_match[gateway_id] = nearest(pool, dom)

    matched = 0
    for split_id, join_id in split_match.items():
        if join_id is not None and join_match.get(join_id) == split_id:
            matched += 2
    return matched / len(gateways)


def enumerate_language(
    net: PetriNet, max_length: int = 12, max_states: int = 100_000
) -> set[Trace]:
    """All visible firing words reaching exactly the final marking.

    Exhaustive breadth-first walk of the reachability graph, cut off at
    max_length visible events; intended for small fixture nets.
    """
    words: set[Trace] = set()
    initial = Counter(net.initial_marking)
    final = Counter(net.final_marking)
    seen = {(_marking_key(initial), ())}
    frontier: deque[tuple[Counter, Trace]] = deque([(initial, ())])
    explored = 0
    while frontier:
        marking, word = frontier.popleft()
        explored += 1
        if explored > max_states:
            raise InvariantViolation("state space exceeds enumeration budget")
        if _marking_key(marking) == _marking_key(final):
            words.add(word)
        for transition_id in sorted(net.transitions):
            if not _enabled(net, marking, transition_id):
                continue
            label = net.transitions[transition_id].label
            extended = word if label is None else word + (label,)
            if len(extended) > max_length:
                continue
            after = marking.copy()
            for place in net.preset(transition_id):
                after[place] -= 1
            for place in net.postset(transition_id):
                after[place] += 1
            key = (_marking_key(after), extended)
            if key not in seen:
                seen.add(key)
                frontier.append((after, extended))
    return words


@dataclass(frozen=True)
class MetricsReport:
    fitness: float
    precision: float
    f_score: float
    generalization: float
    size: int
    cfc: int
    structuredness: float
    discovery_time_seconds: float


def evaluate_model(
    model: BpmnModel,
    event_log: EventLog,
    include_joins: bool = False,
    discovery_time_seconds: float = 0.0,
) -> MetricsReport:
    """All metrics for one model/log pair; ratios on the Petri net,
    structure on the BPMN model."""
    net = bpmn_to_petri(model)
    fitness_value = replay_fitness(net, event_log)
    precision_value = precision(net, event_log)
    return MetricsReport(
        fitness=fitness_value,
        precision=precision_value,
        f_score=f_score(fitness_value, precision_value),
        generalization=generalization(net, event_log),
        size=size(model),
        cfc=cfc(model, include_joins=include_joins),
        structuredness=structuredness(model),
        discovery_time_seconds=discovery_time_seconds,
    )


def serialize_pnml(net: PetriNet) -> bytes:
    """PNML rendering with the common final-markings extension."""
    root = ET.Element("pnml")
    net_element = ET.SubElement(root, "net")
    net_element.set("id", "net_1")
    net_element.set("type", "http://www.pnml.org/version-2009/grammar/ptnet")
    page = ET.SubElement(net_element, "page")
    page.set("id", "page_1")
    for place_id in sorted(net.places):
        place = ET.SubElement(page, "place")
        place.set("id", place_id)
        if net.initial_marking.get(place_id):
            marking = ET.SubElement(place, "initialMarking")
            text = ET.SubElement(marking, "text")
            text.text = str(net.initial_marking[place_id])
    for transition_id in sorted(net.transitions):
        transition = ET.SubElement(page, "transition")
        transition.set("id", transition_id)
        label = net.transitions[transition_id].label
        if label is not None:
            name = ET.SubElement(transition, "name")
            text = ET.SubElement(name, "text")
            text.text = label
    for index, (source, target) in enumerate(sorted(net.arcs)):
        arc = ET.SubElement(page, "arc")
        arc.set("id", f"arc_{index}")
        arc.set("source", source)
        arc.set("target", target)
    finals = ET.SubElement(net_element, "finalmarkings")
    marking = ET.SubElement(finals, "marking")
    for place_id in sorted(net.final_marking):
        place = ET.SubElement(marking, "place")
        place.set("idref", place_id)
        text = ET.SubElement(place, "text")
        text.text = str(net.final_marking[place_id])
    ET.indent(root, space="  ")
    return ET.tostring(root, encoding="utf-8", xml_declaration=True)
