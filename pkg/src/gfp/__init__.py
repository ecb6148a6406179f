"""Neighbour-superiority (generalized friendship paradox) analytics for directed social graphs."""

from .activity import (
    ActivityLog,
    CascadeIndex,
    QualityTable,
    QualityVector,
    TweetRecord,
    compute_qualities,
    dedup,
    resolve_cascades,
)
from .errors import CascadeCycleError, EmptyGraphError, FeasibilityError, GFPError, ParseError, RankCouplingError
from .graph import DirectedGraph, Direction, IdMap, build_graph
from .superiority import (
    ALL_TYPES,
    Aggregate,
    AttributeKind,
    AttributeTable,
    SuperiorityReport,
    SuperiorityType,
    experiences,
    experiences_undirected,
    full_report,
    report,
)

__version__ = "0.1.0"

__all__ = [
    "ActivityLog",
    "CascadeIndex",
    "QualityTable",
    "QualityVector",
    "TweetRecord",
    "compute_qualities",
    "dedup",
    "resolve_cascades",
    "CascadeCycleError",
    "EmptyGraphError",
    "FeasibilityError",
    "GFPError",
    "ParseError",
    "RankCouplingError",
    "DirectedGraph",
    "Direction",
    "IdMap",
    "build_graph",
    "ALL_TYPES",
    "Aggregate",
    "AttributeKind",
    "AttributeTable",
    "SuperiorityReport",
    "SuperiorityType",
    "experiences",
    "experiences_undirected",
    "full_report",
    "report",
]
