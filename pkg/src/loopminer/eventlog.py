"""Event logs: XES parsing and writing, variant filtering, and summary stats.

An event log is stored as a multiset of trace *variants*: identical activity
sequences are merged and carry a multiplicity. Only the activity name
(``concept:name``) of each event is kept; timestamps, lifecycle transitions
and resources are out of scope for control-flow discovery.
"""

from __future__ import annotations

import gzip
import logging
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence
from xml.etree import ElementTree

from .errors import AllTracesFiltered, EmptyLog, MalformedXml

log = logging.getLogger(__name__)

# A trace is the sequence of activity names of one case.
Trace = tuple[str, ...]

_XES_NS = "http://www.xes-standard.org/"


def _local(tag: object) -> str:
    """Strip any XML namespace from a tag name."""
    if not isinstance(tag, str):
        return ""
    return tag.rsplit("}", 1)[-1]


@dataclass(frozen=True, eq=False)
class EventLog:
    """Immutable multiset of trace variants.

    variants maps each distinct activity sequence to the number of cases
    that produced it. All multiplicities are >= 1 and every trace has at
    least one event.
    """

    variants: Mapping[Trace, int]

    def __post_init__(self) -> None:
        if not self.variants:
            raise EmptyLog("event log has no traces")
        for trace, count in self.variants.items():
            if not trace:
                raise ValueError("traces must contain at least one event")
            if count < 1:
                raise ValueError(f"variant multiplicity must be >= 1, got {count}")
            if any(not activity for activity in trace):
                raise ValueError("activity names must be non-empty")

    @classmethod
    def from_traces(cls, traces: Iterable[Sequence[str]]) -> "EventLog":
        """Merge raw traces (one entry per case) into a variant multiset."""
        variants: dict[Trace, int] = {}
        for raw in traces:
            trace = tuple(raw)
            variants[trace] = variants.get(trace, 0) + 1
        return cls(variants)

    @property
    def alphabet(self) -> frozenset[str]:
        return frozenset(a for trace in self.variants for a in trace)

    @property
    def total_traces(self) -> int:
        return sum(self.variants.values())

    @property
    def total_events(self) -> int:
        return sum(len(trace) * count for trace, count in self.variants.items())

    def sorted_variants(self) -> list[tuple[Trace, int]]:
        """Variants in a canonical order: descending multiplicity, then trace."""
        return sorted(self.variants.items(), key=lambda item: (-item[1], item[0]))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EventLog):
            return NotImplemented
        return dict(self.variants) == dict(other.variants)

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return (
            f"EventLog(variants={len(self.variants)}, traces={self.total_traces}, "
            f"events={self.total_events})"
        )


@dataclass(frozen=True)
class LogStats:
    """Shape summary of one event log."""

    total_traces: int
    distinct_traces: int
    total_events: int
    distinct_events: int
    min_trace_length: int
    avg_trace_length: int
    max_trace_length: int


def parse_xes(data: bytes) -> EventLog:
    """Parse XES bytes into an EventLog.

    Events without a concept:name attribute are skipped (counted and logged
    as one warning); traces left with no events are dropped the same way.
    Raises MalformedXml for unparseable input and EmptyLog when no usable
    trace remains.
    """
    try:
        root = ElementTree.fromstring(data)
    except ElementTree.ParseError as exc:
        raise MalformedXml(f"not parseable as XES XML: {exc}") from exc
    if _local(root.tag) != "log":
        raise MalformedXml(f"expected a <log> document, got <{_local(root.tag)}>")

    traces: list[Trace] = []
    skipped_events = 0
    skipped_traces = 0
    for trace_elem in root:
        if _local(trace_elem.tag) != "trace":
            continue
        events: list[str] = []
        for event_elem in trace_elem:
            if _local(event_elem.tag) != "event":
                continue
            name = _event_name(event_elem)
            if name is None:
                skipped_events += 1
            else:
                events.append(name)
        if events:
            traces.append(tuple(events))
        else:
            skipped_traces += 1

    if skipped_events:
        log.warning("skipped %d event(s) without concept:name", skipped_events)
    if skipped_traces:
        log.warning("skipped %d trace(s) with no usable events", skipped_traces)
    if not traces:
        raise EmptyLog("log contains no usable traces")
    return EventLog.from_traces(traces)


def _event_name(event_elem: ElementTree.Element) -> str | None:
    for attr in event_elem:
        if _local(attr.tag) == "string" and attr.get("key") == "concept:name":
            value = attr.get("value")
            if value:
                return value
    return None


def load_xes(path: str) -> EventLog:
    """Read an event log from a .xes or .xes.gz file."""
    with open(path, "rb") as handle:
        data = handle.read()
    if data[:2] == b"\x1f\x8b":
        data = gzip.decompress(data)
    return parse_xes(data)


def write_xes(event_log: EventLog) -> bytes:
    """Serialize a log as XES, one <trace> element per case.

    The output is deterministic: variants are ordered by descending
    multiplicity then trace, and each variant is repeated once per case so
    parse_xes(write_xes(log)) reproduces the variant multiset exactly.
    """
    root = ElementTree.Element("log", {"xes.version": "1.0", "xmlns": _XES_NS})
    case = 0
    for trace, count in event_log.sorted_variants():
        for _ in range(count):
            case += 1
            trace_elem = ElementTree.SubElement(root, "trace")
            ElementTree.SubElement(
                trace_elem, "string", {"key": "concept:name", "value": f"case_{case}"}
            )
            for activity in trace:
                event_elem = ElementTree.SubElement(trace_elem, "event")
                ElementTree.SubElement(
                    event_elem, "string", {"key": "concept:name", "value": activity}
                )
    tree = ElementTree.ElementTree(root)
    ElementTree.indent(tree)
    return ElementTree.tostring(root, encoding="utf-8", xml_declaration=True)


def save_xes(event_log: EventLog, path: str) -> None:
    """Write a log to disk, gzip-compressed when the path ends in .gz."""
    data = write_xes(event_log)
    if path.endswith(".gz"):
        # mtime pinned so identical logs produce identical bytes
        data = gzip.compress(data, mtime=0)
    with open(path, "wb") as handle:
        handle.write(data)


def filter_infrequent_traces(event_log: EventLog, threshold: float = 0.05) -> EventLog:
    """Drop variants whose relative frequency falls below the threshold.

    A variant survives when multiplicity / total_traces >= threshold, with
    both counts taken from the input log (the comparison is inclusive, so
    a variant sitting exactly at the threshold is kept). threshold 0 keeps
    everything. Raises AllTracesFiltered when nothing survives.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must be in [0, 1], got {threshold}")
    total = event_log.total_traces
    kept = {
        trace: count
        for trace, count in event_log.variants.items()
        if count / total >= threshold
    }
    if not kept:
        raise AllTracesFiltered(
            f"threshold {threshold} removed all {len(event_log.variants)} variants"
        )
    return EventLog(kept)


def log_stats(event_log: EventLog) -> LogStats:
    """Compute the shape summary of a log.

    The average trace length is rounded half-up to an integer (2.5 -> 3).
    """
    lengths = [len(trace) for trace in event_log.variants]
    total_traces = event_log.total_traces
    total_events = event_log.total_events
    # floor(e/t + 1/2) in exact integer arithmetic: round-half-up
    avg = (2 * total_events + total_traces) // (2 * total_traces)
    return LogStats(
        total_traces=total_traces,
        distinct_traces=len(event_log.variants),
        total_events=total_events,
        distinct_events=len(event_log.alphabet),
        min_trace_length=min(lengths),
        avg_trace_length=avg,
        max_trace_length=max(lengths),
    )
