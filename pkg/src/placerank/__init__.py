"""placerank: coarse place retrieval with model-guided re-ranking.

Global descriptors shortlist candidate places; a multimodal model then
scores each (query, candidate) image pair through a chat-completions
endpoint, and sampled scores are calibrated by penalizing disagreement
(mean minus lambda times standard deviation). A deterministic mock
transport makes the full path runnable and testable offline.
"""

from .codec import ParseOutcome, ScoredResponse, extract_json_block, parse_scored_response
from .errors import PlacerankError
from .evaluation import EvalConfig, RecallReport, geo_distance, recall_at_k
from .gateway import HttpGateway, ModelConfig, PairContext, RawResponse
from .mock import MockConfig, MockGateway
from .pipeline import (
    PairCache,
    PairScore,
    PipelineConfig,
    Ranking,
    Telemetry,
    rerank_dataset,
    rerank_query,
    score_pair,
)
from .prompting import PromptTemplate, build_messages, load_template
from .retrieval import (
    CandidateList,
    DescriptorSet,
    PlaceRecord,
    gem_pool,
    load_embeddings,
    load_manifest,
    retrieve_top_n,
    similarity,
)
from .uasc import CalibrationConfig, UascResult, run_uasc

__version__ = "0.1.0"

__all__ = [
    "CalibrationConfig",
    "CandidateList",
    "DescriptorSet",
    "EvalConfig",
    "HttpGateway",
    "MockConfig",
    "MockGateway",
    "ModelConfig",
    "PairCache",
    "PairContext",
    "PairScore",
    "ParseOutcome",
    "PipelineConfig",
    "PlaceRecord",
    "PlacerankError",
    "PromptTemplate",
    "Ranking",
    "RawResponse",
    "RecallReport",
    "ScoredResponse",
    "Telemetry",
    "UascResult",
    "build_messages",
    "extract_json_block",
    "gem_pool",
    "geo_distance",
    "load_embeddings",
    "load_manifest",
    "load_template",
    "parse_scored_response",
    "recall_at_k",
    "rerank_dataset",
    "rerank_query",
    "retrieve_top_n",
    "run_uasc",
    "score_pair",
    "similarity",
    "__version__",
]
