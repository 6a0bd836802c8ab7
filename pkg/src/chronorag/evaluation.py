"""Benchmark loading, retrieval and answer metrics, and scoring sweeps.

Retrieval quality is measured by answer recall (a normalized answer string
appears in a top-k passage) and evidence recall (a gold passage id appears
in the top k). Answer quality uses exact match and token-level F1 with
standard QA normalization, taking the best score over answer alternatives.
"""

import csv
import json
import logging
import re
import string
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, IO, List, Mapping, Optional, Sequence, Tuple, Union

from .corpus import Corpus
from .errors import DataError
from .pipeline import RankedPassage
from .prompting import load_prompt, render_prompt
from .providers import Generator, SemanticScorer
from .question import DecomposedQuery
from .temporal import ConstraintClass, CurveParams, TimePoint, temporal_score

logger = logging.getLogger(__name__)

DEFAULT_KS = (1, 5, 10, 20)


class SampleSource(Enum):
    TIMEQA = "timeqa"
    SITUATEDQA = "situatedqa"
    OTHER = "other"


@dataclass(frozen=True)
class BenchmarkSample:
    """One benchmark question with gold answers and optional gold evidence."""

    id: str
    question: str
    answers: Tuple[str, ...]
    gold_evidence: Tuple[str, ...] = ()
    source: SampleSource = SampleSource.OTHER
    perturbed: bool = False

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("sample id must be non-empty")
        if not self.question:
            raise ValueError("sample question must be non-empty")
        if not self.answers or not any(a.strip() for a in self.answers):
            raise ValueError("sample answers must be non-empty")
        if len(self.gold_evidence) > 2:
            raise ValueError("at most two gold evidence passages per sample")


@dataclass(frozen=True)
class BenchmarkLoad:
    """Loader result: valid samples plus skipped-record counts by reason."""

    samples: Tuple[BenchmarkSample, ...]
    skipped: Mapping[str, int] = field(default_factory=dict)

    @property
    def loaded(self) -> int:
        return len(self.samples) + sum(self.skipped.values())


def _parse_answers(raw: Any) -> Tuple[str, ...]:
    if isinstance(raw, str):
        return tuple(part.strip() for part in raw.split("|") if part.strip())
    if isinstance(raw, list):
        return tuple(str(part).strip() for part in raw if str(part).strip())
    raise ValueError("answers must be a list or a '|'-joined string")


def _parse_source(raw: Any) -> SampleSource:
    try:
        return SampleSource(str(raw).strip().lower())
    except ValueError:
        return SampleSource.OTHER


def load_benchmark(path: Union[str, Path]) -> BenchmarkLoad:
    """Read benchmark samples from JSONL, skipping invalid records.

    Skipped records are tallied by reason so reports can itemize them.
    Raises DataError only when the file itself cannot be read.
    """
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DataError(f"cannot read benchmark file {path}: {exc}") from exc

    samples: List[BenchmarkSample] = []
    seen = set()
    skipped: Counter = Counter()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError:
            logger.warning("%s:%d: invalid JSON, skipping", path, lineno)
            skipped["invalid_json"] += 1
            continue
        if not isinstance(record, dict):
            skipped["invalid_json"] += 1
            continue
        try:
            sample = BenchmarkSample(
                id=str(record.get("id", "")),
                question=str(record.get("question", "")),
                answers=_parse_answers(record.get("answers", [])),
                gold_evidence=tuple(str(g) for g in record.get("gold_evidence", []) or ()),
                source=_parse_source(record.get("source", "other")),
                perturbed=bool(record.get("perturbed", False)),
            )
        except ValueError as exc:
            logger.warning("%s:%d: %s, skipping", path, lineno, exc)
            skipped["invalid_record"] += 1
            continue
        if sample.id in seen:
            logger.warning("%s:%d: duplicate id %s, skipping", path, lineno, sample.id)
            skipped["duplicate_id"] += 1
            continue
        seen.add(sample.id)
        samples.append(sample)
    return BenchmarkLoad(tuple(samples), dict(skipped))


# ---------------------------------------------------------------------------
# Normalization and answer metrics
# ---------------------------------------------------------------------------

_PUNCT_TABLE = str.maketrans({c: " " for c in string.punctuation})
_ARTICLES = frozenset({"a", "an", "the"})


def normalize_answer(text: str) -> str:
    """Lowercase, map punctuation to spaces, drop articles, collapse spaces."""
    tokens = text.lower().translate(_PUNCT_TABLE).split()
    return " ".join(t for t in tokens if t not in _ARTICLES)


def exact_match(pred: str, answers: Sequence[str]) -> int:
    """1 iff the normalized prediction equals any normalized alternative."""
    if not answers:
        raise ValueError("answers must be non-empty")
    norm = normalize_answer(pred)
    return int(any(norm == normalize_answer(a) for a in answers))


def _f1_tokens(pred: List[str], gold: List[str]) -> float:
    if not pred or not gold:
        return float(pred == gold)
    overlap = sum((Counter(pred) & Counter(gold)).values())
    if overlap == 0:
        return 0.0
    precision = overlap / len(pred)
    recall = overlap / len(gold)
    return 2 * precision * recall / (precision + recall)


def f1(pred: str, answers: Sequence[str]) -> float:
    """Best token-level F1 between the prediction and any alternative."""
    if not answers:
        raise ValueError("answers must be non-empty")
    pred_tokens = normalize_answer(pred).split()
    return max(_f1_tokens(pred_tokens, normalize_answer(a).split()) for a in answers)


# ---------------------------------------------------------------------------
# Retrieval metrics
# ---------------------------------------------------------------------------

Run = Mapping[str, Sequence[str]]


def _require_ids(run: Run, samples: Sequence[BenchmarkSample]) -> None:
    missing = [s.id for s in samples if s.id not in run]
    if missing:
        raise DataError(f"run is missing query ids: {', '.join(missing[:5])}")


def answer_recall_at_k(
    run: Run, samples: Sequence[BenchmarkSample], corpus: Corpus, ks: Sequence[int] = DEFAULT_KS
) -> Dict[int, float]:
    """Fraction of samples whose answer text appears in a top-k passage.

    Containment is normalized-substring over the passage presentation, so
    alternatives like "1" and "one" must be listed separately in the data.
    """
    _require_ids(run, samples)
    if not samples:
        raise ValueError("samples must be non-empty")
    ks = sorted(set(ks))
    hits = {k: 0 for k in ks}
    for sample in samples:
        alternatives = [normalize_answer(a) for a in sample.answers]
        rank_of_hit = None
        for rank, pid in enumerate(run[sample.id][: max(ks)], start=1):
            passage = corpus.get(pid)
            if passage is None:
                raise DataError(f"run references unknown passage id {pid!r}")
            haystack = normalize_answer(passage.presentation())
            if any(alt and alt in haystack for alt in alternatives):
                rank_of_hit = rank
                break
        if rank_of_hit is not None:
            for k in ks:
                if rank_of_hit <= k:
                    hits[k] += 1
    return {k: hits[k] / len(samples) for k in ks}


def evidence_recall_at_k(
    run: Run, samples: Sequence[BenchmarkSample], ks: Sequence[int] = DEFAULT_KS
) -> Dict[int, float]:
    """Fraction of evidence-bearing samples with a gold id in the top k."""
    _require_ids(run, samples)
    eligible = [s for s in samples if s.gold_evidence]
    if not eligible:
        raise ValueError("no sample carries gold evidence")
    ks = sorted(set(ks))
    hits = {k: 0 for k in ks}
    for sample in eligible:
        gold = set(sample.gold_evidence)
        rank_of_hit = None
        for rank, pid in enumerate(run[sample.id][: max(ks)], start=1):
            if pid in gold:
                rank_of_hit = rank
                break
        if rank_of_hit is not None:
            for k in ks:
                if rank_of_hit <= k:
                    hits[k] += 1
    return {k: hits[k] / len(eligible) for k in ks}


# ---------------------------------------------------------------------------
# Answer generation
# ---------------------------------------------------------------------------

class ReaderTemplate(Enum):
    DIRECT = "direct"
    COT = "cot"
    RAG_CONCAT = "rag_concat"
    SELF_RAG = "self_rag"


@dataclass(frozen=True)
class AnswerResult:
    text: str


_CLOSE_ANSWER = "</Answer>"
_OPEN_ANSWER = "<Answer>"


def _extract_answer(reply: str) -> str:
    if _OPEN_ANSWER in reply:
        reply = reply.split(_OPEN_ANSWER, 1)[1]
    return reply.split(_CLOSE_ANSWER, 1)[0].strip()


def _evidence_block(rp: RankedPassage, corpus: Optional[Corpus]) -> str:
    passage = corpus.get(rp.passage_id) if corpus is not None else None
    if passage is None:
        return rp.best_sentence.text
    return f"{passage.title} | {rp.best_sentence.text}"


def generate_answer(
    dq: DecomposedQuery,
    passages: Sequence[RankedPassage],
    generator: Generator,
    template: ReaderTemplate,
    corpus: Optional[Corpus] = None,
    prompt_dir: Optional[Union[str, Path]] = None,
) -> AnswerResult:
    """Produce an answer string with the named reading strategy.

    Retrieval-based strategies read each passage's best sentence, prefixed
    with the passage title when a corpus is supplied. Provider failures
    propagate as ProviderError; callers mark such samples unanswered.
    """
    if template in (ReaderTemplate.RAG_CONCAT, ReaderTemplate.SELF_RAG) and not passages:
        raise ValueError(f"{template.value} needs at least one passage")

    if template is ReaderTemplate.DIRECT:
        prompt = render_prompt(
            load_prompt("reader_direct", prompt_dir), {"question": dq.original}
        )
        reply = generator.generate(prompt, max_tokens=64, stop=[_CLOSE_ANSWER])
        return AnswerResult(_extract_answer(reply))

    if template is ReaderTemplate.COT:
        prompt = render_prompt(
            load_prompt("reader_cot", prompt_dir), {"question": dq.original}
        )
        reply = generator.generate(prompt, max_tokens=512, stop=[_CLOSE_ANSWER])
        return AnswerResult(_extract_answer(reply))

    if template is ReaderTemplate.RAG_CONCAT:
        texts = "\n\n".join(_evidence_block(rp, corpus) for rp in passages)
        prompt = render_prompt(
            load_prompt("reader_rag_concat", prompt_dir),
            {"question": dq.original, "texts": texts},
        )
        reply = generator.generate(prompt, max_tokens=64, stop=[_CLOSE_ANSWER])
        return AnswerResult(_extract_answer(reply))

    # Self-contained reading: summarize each passage against the main
    # content, then answer over the combined summaries.
    independent = load_prompt("independent_reading", prompt_dir)
    question_core = dq.main_content.rstrip("?").strip()
    generations: List[str] = []
    for rp in passages:
        prompt = render_prompt(
            independent,
            {"document": _evidence_block(rp, corpus), "normalized question": question_core},
        )
        reply = generator.generate(prompt, max_tokens=256, stop=["</Summarization>"])
        body = re.sub(r"\s+", " ", reply.split("</Summarization>")[0]).strip()
        if body and body.lower() != "none":
            generations.append(body)
    combined = render_prompt(
        load_prompt("combined_reading", prompt_dir),
        {"generations": "\n\n".join(generations) or "None", "question": dq.original},
    )
    reply = generator.generate(combined, max_tokens=512, stop=[_CLOSE_ANSWER])
    return AnswerResult(_extract_answer(reply))


# ---------------------------------------------------------------------------
# Report assembly
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MetricsReport:
    """Aggregated retrieval and answer metrics for one evaluation run."""

    answer_recall: Dict[int, float]
    evidence_recall: Optional[Dict[int, float]]
    em: Optional[float]
    f1: Optional[float]
    counts: Dict[str, Any]
    config: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name, table in (("AR", self.answer_recall), ("ER", self.evidence_recall)):
            if table is None:
                continue
            previous = 0.0
            for k in sorted(table):
                value = table[k]
                if not 0.0 <= value <= 1.0:
                    raise ValueError(f"{name}@{k} out of range: {value}")
                if value < previous:
                    raise ValueError(f"{name} must be nondecreasing in k")
                previous = value
        for name, value in (("em", self.em), ("f1", self.f1)):
            if value is not None and not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} out of range: {value}")
        expected = self.counts.get("samples_loaded", 0) - sum(
            self.counts.get("skips", {}).values()
        )
        if self.counts.get("samples_evaluated") != expected:
            raise ValueError("samples_evaluated must equal loaded minus skipped")

    def to_dict(self) -> Dict[str, Any]:
        def table(metrics: Optional[Dict[int, float]]) -> Optional[Dict[str, float]]:
            if metrics is None:
                return None
            return {str(k): metrics[k] for k in sorted(metrics)}

        return {
            "answer_recall": table(self.answer_recall),
            "evidence_recall": table(self.evidence_recall),
            "em": self.em,
            "f1": self.f1,
            "counts": self.counts,
            "config": self.config,
        }


def evaluate_run(
    run: Run,
    samples: Sequence[BenchmarkSample],
    corpus: Corpus,
    *,
    ks: Sequence[int] = DEFAULT_KS,
    predictions: Optional[Mapping[str, str]] = None,
    skipped: Optional[Mapping[str, int]] = None,
    config: Optional[Dict[str, Any]] = None,
) -> MetricsReport:
    """Score a retrieval run (and optional predictions) against samples.

    Samples without gold evidence are excluded from ER only. Missing or
    empty predictions score EM = F1 = 0 and are counted as unanswered.
    """
    if not samples:
        raise DataError("no samples to evaluate")
    skips = dict(skipped or {})
    ar = answer_recall_at_k(run, samples, corpus, ks)
    er_eligible = sum(1 for s in samples if s.gold_evidence)
    er = evidence_recall_at_k(run, samples, ks) if er_eligible else None

    em_value: Optional[float] = None
    f1_value: Optional[float] = None
    unanswered = 0
    if predictions is not None:
        em_total = 0.0
        f1_total = 0.0
        for sample in samples:
            pred = predictions.get(sample.id, "")
            if not pred.strip():
                unanswered += 1
                continue
            em_total += exact_match(pred, sample.answers)
            f1_total += f1(pred, sample.answers)
        em_value = em_total / len(samples)
        f1_value = f1_total / len(samples)

    counts = {
        "samples_loaded": len(samples) + sum(skips.values()),
        "samples_evaluated": len(samples),
        "skips": skips,
        "er_eligible": er_eligible,
    }
    if predictions is not None:
        counts["unanswered"] = unanswered
    return MetricsReport(ar, er, em_value, f1_value, counts, dict(config or {}))


# ---------------------------------------------------------------------------
# Controlled sweeps
# ---------------------------------------------------------------------------

SWEEP_HEADER = ("class", "anchor1", "anchor2", "date", "temporal_score")


@dataclass(frozen=True)
class SweepRow:
    cls: ConstraintClass
    date: TimePoint
    temporal: float
    semantic: Optional[float] = None


def sweep(
    cls: ConstraintClass,
    params: CurveParams,
    grid: Sequence[TimePoint],
    *,
    scorer: Optional[SemanticScorer] = None,
    query: Optional[str] = None,
    doc_template: str = "The event took place in {date}.",
) -> List[SweepRow]:
    """Score every grid date against one constraint class.

    With a scorer and query, each row also carries the semantic score of a
    templated document mentioning the date.
    """
    if not grid:
        raise ValueError("sweep grid must be non-empty")
    if scorer is not None and not query:
        raise ValueError("semantic sweep needs a query")
    rows = []
    for date in grid:
        semantic = None
        if scorer is not None:
            semantic = scorer.score(query, doc_template.replace("{date}", str(date)))
        rows.append(SweepRow(cls, date, temporal_score(cls, params, [date]), semantic))
    return rows


def write_sweep_csv(rows: Sequence[SweepRow], out: IO[str]) -> None:
    """Write sweep rows as CSV; the semantic column appears only if present."""
    if not rows:
        raise ValueError("no sweep rows to write")
    with_semantic = any(r.semantic is not None for r in rows)
    header = SWEEP_HEADER + (("semantic_score",) if with_semantic else ())
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        record = [
            row.cls.kind.value,
            repr(row.cls.a1),
            "" if row.cls.a2 is None else repr(row.cls.a2),
            str(row.date),
            repr(row.temporal),
        ]
        if with_semantic:
            record.append("" if row.semantic is None else repr(row.semantic))
        writer.writerow(record)
