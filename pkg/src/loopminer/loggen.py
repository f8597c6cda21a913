"""Synthetic log generation from canonical loop-pattern models.

The four patterns share one layout idea: an exclusive loop-entry join in
front of the body, an exclusive loop split behind it, and a body that is
an XOR block, an AND block, or an XOR over both. Parallel bodies carry a
sequential tail task so consecutive iterations never blur into fake
interleaving evidence. simulate() plays the token game with a seeded RNG.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass

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
from .errors import InvariantViolation
from .eventlog import EventLog

PATTERNS = ("L1", "L2", "L3", "L4")


@dataclass(frozen=True)
class SimulationConfig:
    """Generator settings; pattern names a canonical model or a BPMN file."""

    pattern: str
    traces: int
    max_loop_iterations: int = 3
    loop_continue_probability: float = 0.3
    seed: int = 0

    def __post_init__(self) -> None:
        if self.traces < 1:
            raise ValueError("traces must be >= 1")
        if not 0.0 <= self.loop_continue_probability < 1.0:
            raise ValueError("loop_continue_probability must be in [0, 1)")
        if self.max_loop_iterations < 0:
            raise ValueError("max_loop_iterations must be >= 0")


def _scaffold(task_names: str) -> tuple[BpmnModel, dict[str, str]]:
    model = BpmnModel()
    ids = {
        "start": model.add(StartEvent("start_1")).id,
        "end": model.add(EndEvent("end_1")).id,
    }
    for name in task_names:
        ids[name] = model.add(Task(f"task_{name}", name)).id
    return model, ids


def _add_gateways(model: BpmnModel, ids: dict[str, str], spec: dict[str, tuple[str, str]]) -> None:
    for key, (kind, direction) in spec.items():
        cls = ExclusiveGateway if kind == "xor" else ParallelGateway
        ids[key] = model.add(cls(f"{kind}_{key}", direction)).id


def _wire(model: BpmnModel, ids: dict[str, str], pairs: list[tuple[str, str]]) -> None:
    for source, target in pairs:
        model.flow(ids[source], ids[target])


def _build_l1() -> BpmnModel:
    """Loop around XOR(AND(b,c);r, d;s), both branches loop or exit to e."""
    model, ids = _scaffold("abcdrse")
    _add_gateways(
        model,
        ids,
        {
            "j_loop": ("xor", CONVERGING),
            "x_body": ("xor", DIVERGING),
            "and_split": ("and", DIVERGING),
            "and_join": ("and", CONVERGING),
            "s_r": ("xor", DIVERGING),
            "s_s": ("xor", DIVERGING),
            "xj_exit": ("xor", CONVERGING),
        },
    )
    _wire(
        model,
        ids,
        [
            ("start", "a"),
            ("a", "j_loop"),
            ("j_loop", "x_body"),
            ("x_body", "and_split"),
            ("and_split", "b"),
            ("and_split", "c"),
            ("b", "and_join"),
            ("c", "and_join"),
            ("and_join", "r"),
            ("x_body", "d"),
            ("d", "s"),
            ("r", "s_r"),
            ("s_r", "j_loop"),
            ("s_r", "xj_exit"),
            ("s", "s_s"),
            ("s_s", "j_loop"),
            ("s_s", "xj_exit"),
            ("xj_exit", "e"),
            ("e", "end"),
        ],
    )
    return model


def _build_l2() -> BpmnModel:
    """Same body shape as L1 but both back flows converge on entry b."""
    model, ids = _scaffold("bpqcdfe")
    _add_gateways(
        model,
        ids,
        {
            "j_loop": ("xor", CONVERGING),
            "x_body": ("xor", DIVERGING),
            "and_split": ("and", DIVERGING),
            "and_join": ("and", CONVERGING),
            "s_c": ("xor", DIVERGING),
            "s_f": ("xor", DIVERGING),
            "xj_exit": ("xor", CONVERGING),
        },
    )
    _wire(
        model,
        ids,
        [
            ("start", "j_loop"),
            ("j_loop", "b"),
            ("b", "x_body"),
            ("x_body", "and_split"),
            ("and_split", "p"),
            ("and_split", "q"),
            ("p", "and_join"),
            ("q", "and_join"),
            ("and_join", "c"),
            ("x_body", "d"),
            ("d", "f"),
            ("c", "s_c"),
            ("s_c", "j_loop"),
            ("s_c", "xj_exit"),
            ("f", "s_f"),
            ("s_f", "j_loop"),
            ("s_f", "xj_exit"),
            ("xj_exit", "e"),
            ("e", "end"),
        ],
    )
    return model


def _build_l3() -> BpmnModel:
    """XOR(b,c) body; the loop exit feeds the XOR split over d and e."""
    model, ids = _scaffold("abcde")
    _add_gateways(
        model,
        ids,
        {
            "j_loop": ("xor", CONVERGING),
            "x_body": ("xor", DIVERGING),
            "xj_body": ("xor", CONVERGING),
            "s_loop": ("xor", DIVERGING),
            "x_exit": ("xor", DIVERGING),
            "xj_exit": ("xor", CONVERGING),
        },
    )
    _wire(
        model,
        ids,
        [
            ("start", "a"),
            ("a", "j_loop"),
            ("j_loop", "x_body"),
            ("x_body", "b"),
            ("x_body", "c"),
            ("b", "xj_body"),
            ("c", "xj_body"),
            ("xj_body", "s_loop"),
            ("s_loop", "j_loop"),
            ("s_loop", "x_exit"),
            ("x_exit", "d"),
            ("x_exit", "e"),
            ("d", "xj_exit"),
            ("e", "xj_exit"),
            ("xj_exit", "end"),
        ],
    )
    return model


def _build_l4() -> BpmnModel:
    """AND(b,c);r body; the loop exit feeds the XOR split over d and e."""
    model, ids = _scaffold("abcrde")
    _add_gateways(
        model,
        ids,
        {
            "j_loop": ("xor", CONVERGING),
            "and_split": ("and", DIVERGING),
            "and_join": ("and", CONVERGING),
            "s_loop": ("xor", DIVERGING),
            "x_exit": ("xor", DIVERGING),
            "xj_exit": ("xor", CONVERGING),
        },
    )
    _wire(
        model,
        ids,
        [
            ("start", "a"),
            ("a", "j_loop"),
            ("j_loop", "and_split"),
            ("and_split", "b"),
            ("and_split", "c"),
            ("b", "and_join"),
            ("c", "and_join"),
            ("and_join", "r"),
            ("r", "s_loop"),
            ("s_loop", "j_loop"),
            ("s_loop", "x_exit"),
            ("x_exit", "d"),
            ("x_exit", "e"),
            ("d", "xj_exit"),
            ("e", "xj_exit"),
            ("xj_exit", "end"),
        ],
    )
    return model


_BUILDERS = {"L1": _build_l1, "L2": _build_l2, "L3": _build_l3, "L4": _build_l4}


def canonical_pattern(pattern: str) -> BpmnModel:
    """The reference model for one of the loop patterns L1 through L4."""
    key = pattern.upper()
    if key not in _BUILDERS:
        raise ValueError(f"unknown pattern {pattern!r}, expected one of {PATTERNS}")
    model = _BUILDERS[key]()
    model.validate()
    return model


def back_flow_ids(model: BpmnModel) -> set[str]:
    """Flows that close a cycle: depth-first back edges from the start."""
    color: dict[str, int] = {}
    back: set[str] = set()

    def visit(node_id: str) -> None:
        color[node_id] = 1
        for flow in sorted(model.outgoing(node_id), key=lambda f: f.id):
            state = color.get(flow.target, 0)
            if state == 1:
                back.add(flow.id)
            elif state == 0:
                visit(flow.target)
        color[node_id] = 2

    visit(model.start_event().id)
    return back


def _enabled_nodes(model: BpmnModel, tokens: Counter) -> list[str]:
    enabled = []
    for node_id in sorted(model.nodes):
        node = model.nodes[node_id]
        incoming = model.incoming(node_id)
        if isinstance(node, StartEvent) or not incoming:
            continue
        if isinstance(node, (ExclusiveGateway, ParallelGateway)) and node.direction == CONVERGING:
            if isinstance(node, ParallelGateway):
                ready = all(tokens[f.id] >= 1 for f in incoming)
            else:
                ready = any(tokens[f.id] >= 1 for f in incoming)
        else:
            ready = tokens[incoming[0].id] >= 1
        if ready:
            enabled.append(node_id)
    return enabled


def _fire(
    model: BpmnModel,
    node_id: str,
    tokens: Counter,
    events: list[str],
    rng: random.Random,
    back_flows: set[str],
    taken: Counter,
    config: SimulationConfig,
) -> None:
    node = model.nodes[node_id]
    incoming = model.incoming(node_id)
    outgoing = sorted(model.outgoing(node_id), key=lambda f: f.id)
    if isinstance(node, ParallelGateway) and node.direction == CONVERGING:
        for flow in incoming:
            tokens[flow.id] -= 1
    elif isinstance(node, (ExclusiveGateway, ParallelGateway)) and node.direction == CONVERGING:
        holder = next(f for f in sorted(incoming, key=lambda f: f.id) if tokens[f.id] >= 1)
        tokens[holder.id] -= 1
    else:
        tokens[incoming[0].id] -= 1
    tokens += Counter()  # drop zero entries

    if isinstance(node, EndEvent):
        return
    if isinstance(node, Task):
        events.append(node.name)
    if isinstance(node, ExclusiveGateway) and node.direction == DIVERGING:
        back = [f for f in outgoing if f.id in back_flows]
        forward = [f for f in outgoing if f.id not in back_flows]
        if back and (
            not forward
            or (
                taken[node_id] < config.max_loop_iterations
                and rng.random() < config.loop_continue_probability
            )
        ):
            choice = back[0] if len(back) == 1 else rng.choice(back)
            taken[node_id] += 1
        else:
            choice = forward[0] if len(forward) == 1 else rng.choice(forward)
        tokens[choice.id] += 1
    elif isinstance(node, ParallelGateway) and node.direction == DIVERGING:
        for flow in outgoing:
            tokens[flow.id] += 1
    elif outgoing:
        tokens[outgoing[0].id] += 1


def _run_trace(
    model: BpmnModel, config: SimulationConfig, rng: random.Random, back_flows: set[str]
) -> tuple[str, ...] | None:
    """One token-game execution; None when aborted (guard or deadlock)."""
    tokens: Counter = Counter()
    tokens[model.outgoing(model.start_event().id)[0].id] = 1
    events: list[str] = []
    taken: Counter = Counter()
    limit = 10 * len(model.nodes)
    firings = 0
    while tokens:
        enabled = _enabled_nodes(model, tokens)
        if not enabled:
            return None
        node_id = enabled[0] if len(enabled) == 1 else rng.choice(enabled)
        _fire(model, node_id, tokens, events, rng, back_flows, taken, config)
        firings += 1
        if firings > limit:
            return None
    return tuple(events) or None


def simulate(model: BpmnModel, config: SimulationConfig) -> EventLog:
    """Play config.traces complete token games on the model.

    XOR choices are uniform, except that loop back flows are taken with
    loop_continue_probability up to max_loop_iterations takes per split
    and per trace. Concurrent branches interleave by uniformly random
    scheduling. Deterministic for a fixed seed.
    """
    rng = random.Random(config.seed)
    back_flows = back_flow_ids(model)
    traces: list[tuple[str, ...]] = []
    consecutive_aborts = 0
    while len(traces) < config.traces:
        trace = _run_trace(model, config, rng, back_flows)
        if trace is None:
            consecutive_aborts += 1
            if consecutive_aborts > 1000:
                raise InvariantViolation("simulation cannot complete a trace")
            continue
        consecutive_aborts = 0
        traces.append(trace)
    return EventLog.from_traces(traces)
