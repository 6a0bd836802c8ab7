"""Staged retrieval pipeline with semantic-temporal hybrid ranking.

Stages, in order: BM25 retrieval on the main content, passage keyword
ranking, passage semantic ranking, sentence splitting plus query-focused
summarization of the semantically top passages, sentence keyword ranking,
hybrid (semantic x temporal) sentence scoring, and passage selection.
Every stage narrows its candidate set; summaries are the one addition, and
only for passages already in the set. Each stage breaks ties by its input
order; the hybrid sort breaks ties by semantic score, then canonical
passage order.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from math import isfinite
from typing import Dict, List, Mapping, Optional, Sequence

from .corpus import SUMMARY_INDEX, Corpus, Passage, Sentence, SentenceOrigin, split_sentences
from .errors import ConfigError, ProviderError
from .lexical import InvertedIndex, bm25_search, keyword_rank
from .prompting import load_prompt, render_prompt
from .providers import Generator, ScorerMode, SemanticScorer
from .question import DecomposedQuery, decompose_llm, decompose_rule_based
from .temporal import CurveParams, classify_constraint, parse_timepoints, temporal_score

_log = logging.getLogger(__name__)

__all__ = [
    "PipelineConfig",
    "ScoredSentence",
    "RankedPassage",
    "StageTrace",
    "PipelineResult",
    "summarize_qfs",
    "hybrid_rank",
    "select_passages",
    "run_pipeline",
]


@dataclass(frozen=True)
class PipelineConfig:
    """Stage cardinalities and the temporal curve shape."""

    n_retrieve: int = 1000
    n_kw_passages: int = 100
    qfs_k: int = 5
    n_kw_sentences: int = 200
    top_out: int = 20
    curve: CurveParams = field(default_factory=CurveParams)

    def __post_init__(self) -> None:
        if self.top_out < 1:
            raise ConfigError("top_out must be at least 1")
        if self.n_kw_sentences < self.top_out:
            raise ConfigError("n_kw_sentences must be at least top_out")
        if self.n_kw_passages < 1:
            raise ConfigError("n_kw_passages must be at least 1")
        if self.n_retrieve < self.n_kw_passages:
            raise ConfigError("n_retrieve must be at least n_kw_passages")
        if self.qfs_k < 0:
            raise ConfigError("qfs_k must be non-negative")
        if self.qfs_k > self.n_kw_passages:
            raise ConfigError("qfs_k cannot exceed n_kw_passages")


@dataclass(frozen=True)
class ScoredSentence:
    """One sentence with its semantic, temporal, and product scores."""

    sentence: Sentence
    semantic: float
    temporal: float
    final: float

    def __post_init__(self) -> None:
        if not (isfinite(self.semantic) and isfinite(self.temporal) and isfinite(self.final)):
            raise ValueError("scores must be finite")
        if self.final != self.semantic * self.temporal:
            raise ValueError("final must be the exact product of semantic and temporal")


@dataclass(frozen=True)
class RankedPassage:
    """A selected passage, ranked by its best surviving sentence."""

    passage_id: str
    score: float
    semantic: float
    temporal: float
    best_sentence: Sentence

    @property
    def components(self) -> tuple:
        return (self.semantic, self.temporal)


@dataclass(frozen=True)
class StageTrace:
    """Ids (and scores where the stage has them) a stage emitted, in order."""

    stage: str
    ids: List[str]
    scores: Optional[List[float]] = None


@dataclass(frozen=True)
class PipelineResult:
    ranked: List[RankedPassage]
    trace: Optional[List[StageTrace]]
    query: DecomposedQuery


# ---------------------------------------------------------------------------
# Query-focused summarization
# ---------------------------------------------------------------------------

def summarize_qfs(
    passage: Passage,
    mc: str,
    generator: Generator,
    prompt_dir: Optional[str] = None,
) -> Optional[Sentence]:
    """Summarize one passage against the main content, or return None.

    A trimmed reply of "None" (any case) or an empty reply means the passage
    cannot answer the question; generator failures are treated the same way
    so the pipeline proceeds with split sentences only.
    """
    template = load_prompt("qfs", prompt_dir)
    prompt = render_prompt(
        template,
        {"title": passage.title, "text": passage.text, "normalized question": mc},
    )
    try:
        reply = generator.generate(prompt, max_tokens=256, stop=["</Summarization>"])
    except ProviderError as exc:
        _log.warning("summarization failed for passage %s: %s", passage.id, exc)
        return None
    body = re.sub(r"\s+", " ", reply.split("</Summarization>")[0]).strip()
    if not body or body.lower() == "none":
        return None
    return Sentence(passage.id, SUMMARY_INDEX, body, SentenceOrigin.SUMMARY)


# ---------------------------------------------------------------------------
# Hybrid ranking and selection
# ---------------------------------------------------------------------------

def hybrid_rank(
    sentences: Sequence[Sentence],
    dq: DecomposedQuery,
    scorer: SemanticScorer,
    params: CurveParams,
    passage_order: Optional[Mapping[str, int]] = None,
) -> List[ScoredSentence]:
    """Score sentences by semantic x temporal and sort.

    Semantic scores are normalized into [0, 1] in a way that preserves their
    order: bi-encoder cosines clamp negatives to 0, cross-encoder scores are
    min-max scaled over this candidate set (all equal scores 1). Without a
    constraint every temporal score is 1. Sort is final desc, ties by
    semantic desc, then passage order (canonical corpus position when given,
    else first appearance here), then input order.
    """
    sentences = list(sentences)
    if not sentences:
        return []
    if passage_order is None:
        order: Dict[str, int] = {}
        for s in sentences:
            order.setdefault(s.passage_id, len(order))
        passage_order = order

    raw = scorer.score_many(dq.main_content, [s.text for s in sentences])
    if scorer.mode is ScorerMode.CROSS_ENCODER:
        lo, hi = min(raw), max(raw)
        if hi > lo:
            semantic = [(v - lo) / (hi - lo) for v in raw]
        else:
            semantic = [1.0] * len(raw)
    else:
        semantic = [max(0.0, v) for v in raw]

    cls = classify_constraint(dq.constraint) if dq.constraint is not None else None
    scored: List[ScoredSentence] = []
    for sentence, sem in zip(sentences, semantic):
        if cls is None:
            temporal = 1.0
        else:
            temporal = temporal_score(cls, params, parse_timepoints(sentence.text))
        scored.append(ScoredSentence(sentence, sem, temporal, sem * temporal))

    scored.sort(
        key=lambda sc: (-sc.final, -sc.semantic, passage_order[sc.sentence.passage_id])
    )
    return scored


def select_passages(scored: Sequence[ScoredSentence], top_out: int) -> List[RankedPassage]:
    """Deduplicate a sorted sentence ranking by passage, keeping each max."""
    out: List[RankedPassage] = []
    seen: set[str] = set()
    for sc in scored:
        pid = sc.sentence.passage_id
        if pid in seen:
            continue
        seen.add(pid)
        out.append(RankedPassage(pid, sc.final, sc.semantic, sc.temporal, sc.sentence))
        if len(out) >= top_out:
            break
    return out


# ---------------------------------------------------------------------------
# Full pipeline
# ---------------------------------------------------------------------------

def _record(
    traces: Optional[List[StageTrace]],
    stage: str,
    ids: List[str],
    scores: Optional[List[float]] = None,
) -> None:
    if traces is not None:
        traces.append(StageTrace(stage, ids, scores))


def run_pipeline(
    question: str,
    corpus: Corpus,
    index: InvertedIndex,
    scorer: SemanticScorer,
    generator: Optional[Generator] = None,
    config: Optional[PipelineConfig] = None,
    *,
    decomposed: Optional[DecomposedQuery] = None,
    trace: bool = False,
    prompt_dir: Optional[str] = None,
) -> PipelineResult:
    """Run every stage for one question.

    With a generator, decomposition and summarization use it (each with its
    own rule-based/absent fallback); without one the pipeline is fully offline
    and deterministic. A pre-built ``decomposed`` query skips decomposition,
    which is how constraint-stripped baseline runs are expressed. Empty
    retrieval yields an empty result; scorer errors propagate as typed
    provider failures.
    """
    cfg = config if config is not None else PipelineConfig()
    dq = decomposed
    if dq is None:
        if generator is not None:
            dq = decompose_llm(question, generator, prompt_dir)
        else:
            dq = decompose_rule_based(question)

    traces: Optional[List[StageTrace]] = [] if trace else None

    retrieved = bm25_search(index, dq.main_content, cfg.n_retrieve)
    _record(traces, "retrieve", [pid for pid, _ in retrieved], [s for _, s in retrieved])
    if not retrieved:
        return PipelineResult([], traces, dq)

    kw_items = [(pid, corpus.by_id[pid].presentation()) for pid, _ in retrieved]
    survivors = keyword_rank(kw_items, dq.keywords, cfg.n_kw_passages)
    _record(
        traces,
        "keyword_passages",
        [pid for pid, _ in survivors],
        [float(cov) for _, cov in survivors],
    )

    surviving_ids = [pid for pid, _ in survivors]
    passage_sem = scorer.score_many(
        dq.main_content, [corpus.by_id[pid].presentation() for pid in surviving_ids]
    )
    sem_order = sorted(range(len(surviving_ids)), key=lambda i: (-passage_sem[i], i))
    ordered_pids = [surviving_ids[i] for i in sem_order]
    _record(traces, "semantic_passages", ordered_pids, [passage_sem[i] for i in sem_order])

    summaries: Dict[str, Sentence] = {}
    if generator is not None and cfg.qfs_k > 0:
        for pid in ordered_pids[: cfg.qfs_k]:
            summary = summarize_qfs(corpus.by_id[pid], dq.main_content, generator, prompt_dir)
            if summary is not None:
                summaries[pid] = summary

    pool: List[Sentence] = []
    for pid in ordered_pids:
        if pid in summaries:
            pool.append(summaries[pid])
        pool.extend(split_sentences(corpus.by_id[pid]))
    _record(traces, "sentence_pool", [s.uid for s in pool])

    by_uid = {s.uid: s for s in pool}
    kept = keyword_rank([(s.uid, s.text) for s in pool], dq.keywords, cfg.n_kw_sentences)
    _record(
        traces,
        "keyword_sentences",
        [uid for uid, _ in kept],
        [float(cov) for _, cov in kept],
    )

    scored = hybrid_rank(
        [by_uid[uid] for uid, _ in kept], dq, scorer, cfg.curve, passage_order=corpus.rank
    )
    _record(
        traces,
        "hybrid_sentences",
        [sc.sentence.uid for sc in scored],
        [sc.final for sc in scored],
    )

    ranked = select_passages(scored, cfg.top_out)
    _record(traces, "selected", [rp.passage_id for rp in ranked], [rp.score for rp in ranked])
    return PipelineResult(ranked, traces, dq)
