"""Exception types raised across the mining pipeline.

Every error that a pipeline stage can signal deliberately derives from
DiscoveryError so callers (notably the CLI) can map whole failure classes
to exit codes without enumerating modules.
"""

from __future__ import annotations


class DiscoveryError(Exception):
    """Base class for all deliberate pipeline failures."""


class MalformedXml(DiscoveryError):
    """Input bytes could not be parsed as the expected XML dialect."""


class EmptyLog(DiscoveryError):
    """An event log contains no usable traces."""


class AllTracesFiltered(DiscoveryError):
    """A trace-frequency filter removed every variant."""


class CyclicResidue(DiscoveryError):
    """Back-edge removal left a cycle that no restoration can legalize."""


class AmbiguousPartition(DiscoveryError):
    """Successor grouping could not cover every successor deterministically."""


class InvariantViolation(DiscoveryError):
    """A constructed model breaks a structural well-formedness rule."""


class EntryNotFound(DiscoveryError):
    """A loop block references an entry or exit node absent from the model."""


class BothZero(DiscoveryError):
    """F-score is undefined because fitness and precision are both zero."""
