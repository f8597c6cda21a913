"""Shared fixtures: the running-example log and generated pattern suites."""

from __future__ import annotations

import pytest

from loopminer.discovery import discover
from loopminer.eventlog import EventLog
from loopminer.loggen import PATTERNS, SimulationConfig, canonical_pattern, simulate

# Generator settings used across the suite; the acceptance checks re-derive
# their own runs with these same values so the numbers line up.
PATTERN_SETTINGS = {
    "traces": 500,
    "max_loop_iterations": 3,
    "loop_continue_probability": 0.3,
    "seed": 42,
}


@pytest.fixture
def running_log() -> EventLog:
    return EventLog(
        {
            ("a", "b", "c", "d"): 10,
            ("a", "c", "b", "d"): 10,
            ("a", "e", "d"): 5,
        }
    )


@pytest.fixture(scope="session")
def pattern_logs():
    """pattern -> (generating model, simulated 500-trace log)."""
    logs = {}
    for pattern in PATTERNS:
        model = canonical_pattern(pattern)
        config = SimulationConfig(pattern=pattern, **PATTERN_SETTINGS)
        logs[pattern] = (model, simulate(model, config))
    return logs


@pytest.fixture(scope="session")
def pattern_results(pattern_logs):
    """pattern -> (log, full discovery result for it)."""
    return {
        pattern: (log, discover(log))
        for pattern, (model, log) in pattern_logs.items()
    }
