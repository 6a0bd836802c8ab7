"""Time-aware passage retrieval.

Questions are decomposed into main content plus a temporal constraint;
passages flow through lexical retrieval, keyword filtering, semantic
reranking, sentence splitting with query-focused summarization, and a
hybrid semantic-times-temporal sentence ranking. The evaluation harness
scores runs with answer/evidence recall and EM/F1.
"""

from .config import EngineConfig, ProviderConfig, build_providers, load_engine_config
from .corpus import Corpus, Passage, Sentence, SentenceOrigin, load_corpus, split_sentences
from .errors import (
    ChronoragError,
    ConfigError,
    DataError,
    ProviderError,
    StaleIndexError,
    TransportError,
)
from .evaluation import (
    BenchmarkSample,
    MetricsReport,
    ReaderTemplate,
    answer_recall_at_k,
    evaluate_run,
    evidence_recall_at_k,
    exact_match,
    f1,
    generate_answer,
    load_benchmark,
    normalize_answer,
    sweep,
)
from .lexical import InvertedIndex, bm25_search, build_index, keyword_rank, load_or_build_index
from .pipeline import (
    PipelineConfig,
    PipelineResult,
    RankedPassage,
    ScoredSentence,
    hybrid_rank,
    run_pipeline,
    select_passages,
    summarize_qfs,
)
from .providers import ScorerMode, StubScorer
from .question import (
    DecomposedQuery,
    decompose_llm,
    decompose_rule_based,
    extract_keywords,
)
from .temporal import (
    ConstraintClass,
    ConstraintKind,
    CurveParams,
    TemporalConstraint,
    TimePoint,
    classify_constraint,
    parse_timepoints,
    temporal_score,
    to_fractional_year,
)

__version__ = "0.1.0"

__all__ = [
    "BenchmarkSample",
    "ChronoragError",
    "ConfigError",
    "ConstraintClass",
    "ConstraintKind",
    "Corpus",
    "CurveParams",
    "DataError",
    "DecomposedQuery",
    "EngineConfig",
    "InvertedIndex",
    "MetricsReport",
    "Passage",
    "PipelineConfig",
    "PipelineResult",
    "ProviderConfig",
    "ProviderError",
    "RankedPassage",
    "ReaderTemplate",
    "ScoredSentence",
    "ScorerMode",
    "Sentence",
    "SentenceOrigin",
    "StaleIndexError",
    "StubScorer",
    "TemporalConstraint",
    "TimePoint",
    "TransportError",
    "answer_recall_at_k",
    "bm25_search",
    "build_index",
    "build_providers",
    "classify_constraint",
    "decompose_llm",
    "decompose_rule_based",
    "evaluate_run",
    "evidence_recall_at_k",
    "exact_match",
    "extract_keywords",
    "f1",
    "generate_answer",
    "hybrid_rank",
    "keyword_rank",
    "load_benchmark",
    "load_corpus",
    "load_engine_config",
    "load_or_build_index",
    "normalize_answer",
    "parse_timepoints",
    "run_pipeline",
    "select_passages",
    "split_sentences",
    "summarize_qfs",
    "sweep",
    "temporal_score",
    "to_fractional_year",
]
