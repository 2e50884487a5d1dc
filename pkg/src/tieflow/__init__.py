"""Continuous-time tie-decay friendship networks from co-location events.

Pipeline: parse event logs, count co-occurrences, orient edges by degree,
evaluate tie-decay weights at any instant, rank nodes with PageRank, and
detect communities by simulated information flow. A synthetic generator
with planted communities supports end-to-end verification.
"""

from .cooccur import CooccurrenceGraph, build_cooccurrence_graph, cooccurrences_at_location
from .events import EventLog, EventRecord, TimeRange, filter_events, parse_events
from .ifs import (
    CommunityAssignment,
    FlowParams,
    OriginSet,
    detect_communities,
    propagation_probability,
    select_origins,
    sweep_epsilon,
)
from .metrics import (
    BehaviorProfile,
    PartitionReport,
    SlotScheme,
    behavior_profiles,
    modularity,
    partition_report,
    variance_comparison,
)
from .orient import DirectedTieGraph, node_degrees, orient_edges
from .pagerank import PageRankVector, WalkParams, pagerank, rank_nodes, transition_matrix
from .synth import SyntheticConfig, generate, nmi
from .tiedecay import (
    DecayParams,
    NetworkSnapshot,
    edge_weight_at,
    sample_snapshots,
    snapshot_at,
)

__version__ = "0.1.0"

__all__ = [
    "BehaviorProfile",
    "CommunityAssignment",
    "CooccurrenceGraph",
    "DecayParams",
    "DirectedTieGraph",
    "EventLog",
    "EventRecord",
    "FlowParams",
    "NetworkSnapshot",
    "OriginSet",
    "PageRankVector",
    "PartitionReport",
    "SlotScheme",
    "SyntheticConfig",
    "TimeRange",
    "WalkParams",
    "behavior_profiles",
    "build_cooccurrence_graph",
    "cooccurrences_at_location",
    "detect_communities",
    "edge_weight_at",
    "filter_events",
    "generate",
    "modularity",
    "nmi",
    "node_degrees",
    "orient_edges",
    "pagerank",
    "parse_events",
    "partition_report",
    "propagation_probability",
    "rank_nodes",
    "sample_snapshots",
    "select_origins",
    "snapshot_at",
    "sweep_epsilon",
    "transition_matrix",
    "variance_comparison",
]
