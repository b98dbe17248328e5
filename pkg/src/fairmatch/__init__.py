"""Max-flow based re-ranking for aggregate diversity (FairMatch), with baselines and metrics."""

from .algorithm import (
    CandidateSet,
    FairMatchConfig,
    SubgraphRecord,
    WeightAssignment,
    fairmatch_iterate,
    fairmatch_rerank,
)
from .errors import FairMatchError, InputError, NetworkError, SolverError
from .ingest import RatingsTable, RecEntry, RecommendationTable, generate_synthetic, parse_ratings, parse_recs
from .maxflow import MaxFlowResult, max_flow_reference, run_push_relabel
from .metrics import MetricsReport, RecommendationBatch, evaluate
from .network import FlowNetwork, NodeKind, NodeRef, build_network, remove_items
from .rerankers import rerank_table

__all__ = [
    "CandidateSet",
    "FairMatchConfig",
    "FairMatchError",
    "FlowNetwork",
    "InputError",
    "MaxFlowResult",
    "MetricsReport",
    "NetworkError",
    "NodeKind",
    "NodeRef",
    "RatingsTable",
    "RecEntry",
    "RecommendationBatch",
    "RecommendationTable",
    "SolverError",
    "SubgraphRecord",
    "WeightAssignment",
    "build_network",
    "evaluate",
    "fairmatch_iterate",
    "fairmatch_rerank",
    "generate_synthetic",
    "max_flow_reference",
    "parse_ratings",
    "parse_recs",
    "remove_items",
    "rerank_table",
    "run_push_relabel",
]
