"""Loop-aware process discovery: XES event logs to BPMN 2.0 models."""

from .bpmn import (
    BpmnModel,
    EndEvent,
    ExclusiveGateway,
    Flow,
    ParallelGateway,
    StartEvent,
    Task,
    instantiate_gateways,
    parse_bpmn_xml,
    serialize_bpmn_xml,
    serialize_dot,
    weave_loops,
)
from .concurrency import (
    ConcurrencyRelation,
    discover_concurrency,
    prune_concurrent_edges,
    short_loop_witnesses,
)
from .dfg import DFG, END, START, build_dfg, dfg_to_dot, filter_dfg
from .discovery import DiscoveryResult, discover
from .errors import (
    AllTracesFiltered,
    AmbiguousPartition,
    BothZero,
    CyclicResidue,
    DiscoveryError,
    EmptyLog,
    EntryNotFound,
    InvariantViolation,
    MalformedXml,
)
from .eventlog import (
    EventLog,
    LogStats,
    filter_infrequent_traces,
    load_xes,
    log_stats,
    parse_xes,
    save_xes,
    write_xes,
)
from .loggen import SimulationConfig, canonical_pattern, simulate
from .loops import (
    LoopBlock,
    LoopKind,
    canonical_order,
    detect_loop_edges,
    group_loop_blocks,
)
from .petri import (
    MetricsReport,
    PetriNet,
    bpmn_to_petri,
    cfc,
    enumerate_language,
    evaluate_model,
    f_score,
    generalization,
    precision,
    replay,
    replay_fitness,
    serialize_pnml,
    size,
    structuredness,
)
from .synthesis import (
    GatewayTree,
    partition_predecessors,
    partition_successors,
    remove_transitive_successors,
)

__version__ = "0.1.0"

__all__ = [
    "AllTracesFiltered",
    "AmbiguousPartition",
    "BothZero",
    "BpmnModel",
    "ConcurrencyRelation",
    "CyclicResidue",
    "DFG",
    "DiscoveryError",
    "DiscoveryResult",
    "EmptyLog",
    "END",
    "EndEvent",
    "EntryNotFound",
    "EventLog",
    "ExclusiveGateway",
    "Flow",
    "GatewayTree",
    "InvariantViolation",
    "LogStats",
    "LoopBlock",
    "LoopKind",
    "MalformedXml",
    "MetricsReport",
    "ParallelGateway",
    "PetriNet",
    "SimulationConfig",
    "START",
    "StartEvent",
    "Task",
    "bpmn_to_petri",
    "build_dfg",
    "canonical_order",
    "canonical_pattern",
    "cfc",
    "detect_loop_edges",
    "dfg_to_dot",
    "discover",
    "discover_concurrency",
    "enumerate_language",
    "evaluate_model",
    "f_score",
    "filter_dfg",
    "filter_infrequent_traces",
    "generalization",
    "group_loop_blocks",
    "instantiate_gateways",
    "load_xes",
    "log_stats",
    "parse_bpmn_xml",
    "parse_xes",
    "partition_predecessors",
    "partition_successors",
    "precision",
    "prune_concurrent_edges",
    "remove_transitive_successors",
    "replay",
    "replay_fitness",
    "save_xes",
    "serialize_bpmn_xml",
    "serialize_dot",
    "serialize_pnml",
    "short_loop_witnesses",
    "simulate",
    "size",
    "structuredness",
    "weave_loops",
    "write_xes",
]
