"""XES parsing/writing, variant filtering, and log statistics."""

from __future__ import annotations

import random

import pytest

from loopminer.errors import AllTracesFiltered, EmptyLog, MalformedXml
from loopminer.eventlog import (
    EventLog,
    LogStats,
    filter_infrequent_traces,
    load_xes,
    log_stats,
    parse_xes,
    save_xes,
    write_xes,
)

from oracles import random_log


def xes(*traces: str) -> bytes:
    """Tiny XES builder: each argument is one trace, one char per event."""
    parts = ['<?xml version="1.0"?>', '<log xes.version="1.0">']
    for trace in traces:
        parts.append("<trace>")
        for activity in trace:
            parts.append(f'<event><string key="concept:name" value="{activity}"/></event>')
        parts.append("</trace>")
    parts.append("</log>")
    return "\n".join(parts).encode()


def test_parse_merges_identical_traces():
    log = parse_xes(xes("ab", "ab", "ac"))
    assert dict(log.variants) == {("a", "b"): 2, ("a", "c"): 1}


def test_parse_singleton():
    log = parse_xes(xes("a"))
    assert dict(log.variants) == {("a",): 1}
    assert log.alphabet == {"a"}


def test_parse_zero_traces_raises():
    with pytest.raises(EmptyLog):
        parse_xes(b'<?xml version="1.0"?><log/>')


def test_parse_rejects_non_xml():
    with pytest.raises(MalformedXml):
        parse_xes(b"this is not xml")


def test_parse_rejects_wrong_root():
    with pytest.raises(MalformedXml):
        parse_xes(b"<notalog><trace/></notalog>")


def test_parse_accepts_xes_namespace():
    data = (
        b'<?xml version="1.0"?>'
        b'<log xmlns="http://www.xes-standard.org/">'
        b'<trace><event><string key="concept:name" value="a"/></event></trace>'
        b"</log>"
    )
    log = parse_xes(data)
    assert dict(log.variants) == {("a",): 1}


def test_parse_skips_nameless_events_and_empty_traces():
    data = (
        b"<log>"
        b"<trace>"
        b'<event><string key="concept:name" value="a"/></event>'
        b'<event><string key="other" value="x"/></event>'
        b"</trace>"
        b"<trace><event/></trace>"  # drops to zero events, skipped entirely
        b"</log>"
    )
    log = parse_xes(data)
    assert dict(log.variants) == {("a",): 1}


def test_parse_all_traces_unusable_raises():
    with pytest.raises(EmptyLog):
        parse_xes(b"<log><trace><event/></trace></log>")


def test_eventlog_validation():
    with pytest.raises(EmptyLog):
        EventLog({})
    with pytest.raises(ValueError):
        EventLog({(): 1})
    with pytest.raises(ValueError):
        EventLog({("a",): 0})
    with pytest.raises(ValueError):
        EventLog({("a", ""): 1})


def test_from_traces_merges():
    log = EventLog.from_traces([("a", "b"), ("a", "b"), ("c",)])
    assert dict(log.variants) == {("a", "b"): 2, ("c",): 1}
    assert log.total_traces == 3
    assert log.total_events == 5


def test_sorted_variants_order():
    log = EventLog({("b",): 2, ("a",): 2, ("c",): 5})
    assert log.sorted_variants() == [(("c",), 5), (("a",), 2), (("b",), 2)]


def test_write_parse_round_trip_random_logs():
    rng = random.Random(4711)
    for _ in range(20):
        log = random_log(rng)
        assert parse_xes(write_xes(log)) == log


def test_save_and_load_gzip(tmp_path):
    log = EventLog({("a", "b"): 3, ("c",): 1})
    path = tmp_path / "log.xes.gz"
    save_xes(log, str(path))
    assert path.read_bytes()[:2] == b"\x1f\x8b"
    assert load_xes(str(path)) == log
    # mtime is pinned, so a rewrite is byte-identical
    first = path.read_bytes()
    save_xes(log, str(path))
    assert path.read_bytes() == first


def test_save_and_load_plain(tmp_path):
    log = EventLog({("a",): 2})
    path = tmp_path / "log.xes"
    save_xes(log, str(path))
    assert path.read_bytes().startswith(b"<?xml")
    assert load_xes(str(path)) == log


def test_filter_keeps_boundary_variant():
    log = EventLog({("a",): 60, ("b",): 35, ("c",): 5})
    filtered = filter_infrequent_traces(log, 0.05)
    # 5/100 sits exactly at the threshold and the comparison is inclusive
    assert dict(filtered.variants) == dict(log.variants)


def test_filter_drops_rare_variant():
    log = EventLog({("a",): 96, ("b",): 4})
    filtered = filter_infrequent_traces(log, 0.05)
    assert dict(filtered.variants) == {("a",): 96}


def test_filter_zero_threshold_is_identity():
    log = EventLog({("a",): 1, ("b",): 999})
    assert filter_infrequent_traces(log, 0.0) == log


def test_filter_all_removed_raises():
    log = EventLog({("a",): 1, ("b",): 1})
    with pytest.raises(AllTracesFiltered):
        filter_infrequent_traces(log, 0.9)


def test_filter_threshold_validation():
    log = EventLog({("a",): 1})
    with pytest.raises(ValueError):
        filter_infrequent_traces(log, 1.5)
    with pytest.raises(ValueError):
        filter_infrequent_traces(log, -0.1)


def test_filter_idempotent():
    log = EventLog({("a",): 80, ("b",): 15, ("c",): 5})
    once = filter_infrequent_traces(log, 0.1)
    twice = filter_infrequent_traces(once, 0.1)
    assert once == twice


def test_log_stats_mixed():
    log = EventLog({("a", "b", "c"): 2, ("a",): 1})
    assert log_stats(log) == LogStats(
        total_traces=3,
        distinct_traces=2,
        total_events=7,
        distinct_events=3,
        min_trace_length=1,
        avg_trace_length=2,
        max_trace_length=3,
    )


def test_log_stats_singleton():
    stats = log_stats(EventLog({("a",): 1}))
    assert stats == LogStats(1, 1, 1, 1, 1, 1, 1)


def test_log_stats_rounds_half_up():
    # 5 events over 2 traces averages 2.5, reported as 3
    stats = log_stats(EventLog({("a", "b"): 1, ("a", "b", "c"): 1}))
    assert stats.avg_trace_length == 3
