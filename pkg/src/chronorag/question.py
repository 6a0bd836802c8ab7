"""Question decomposition: main content, temporal constraint, keywords.

A time-sensitive question splits into its main content (what is asked) and a
temporal constraint (when it must hold). The rule-based decomposer anchors on
date expressions: a constraint exists only where a relation surface form
("before", "as of", "between ... and ...", a "from X to Y" range, ...) sits
directly on a date. The LLM decomposer delegates phrasing to a generator but
re-parses the returned constraint text with the same rules, falling back to
the pure rule-based path whenever the reply is unusable.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

from .errors import ProviderError
from .prompting import load_prompt, render_prompt
from .providers import Generator
from .temporal import (
    ImplicitCondition,
    TemporalConstraint,
    TemporalRelation,
    TimePoint,
    parse_timepoints_with_spans,
    to_fractional_year,
)

__all__ = [
    "DecomposedQuery",
    "decompose_rule_based",
    "decompose_llm",
    "extract_keywords",
]


@dataclass(frozen=True)
class DecomposedQuery:
    """A question split into main content and an optional temporal constraint."""

    original: str
    main_content: str
    constraint: Optional[TemporalConstraint] = None
    keywords: List[str] = field(default_factory=list)
    used_fallback: bool = False

    def __post_init__(self) -> None:
        if not self.original.strip():
            raise ValueError("empty question")
        if not self.main_content.strip():
            raise ValueError("empty main content")
        if self.constraint is not None and self.constraint.raw_text:
            if self.constraint.raw_text not in self.original:
                raise ValueError("constraint text is not a substring of the question")


# ---------------------------------------------------------------------------
# Rule-based decomposition
# ---------------------------------------------------------------------------

_CONDITION_RE = re.compile(r"\b(first|earliest|last|latest)\b", re.IGNORECASE)
_ARTICLE_TAIL_RE = re.compile(r"\b(?:the|an|a)\s+$", re.IGNORECASE)
_BETWEEN_RE = re.compile(r"\bbetween\b", re.IGNORECASE)

# Single-point relation markers searched immediately before a date span.
# "between" needs its two-date pattern and "from ... to ..." is captured as
# part of the date span itself, so neither appears here.
_RELATION_TAIL_RE = re.compile(
    r"\b(as\s+of|since|until|before|after|around|by|in|on)\s*$", re.IGNORECASE
)
_RELATION_BY_SURFACE = {
    "as of": TemporalRelation.AS_OF,
    "since": TemporalRelation.SINCE,
    "until": TemporalRelation.UNTIL,
    "before": TemporalRelation.BEFORE,
    "after": TemporalRelation.AFTER,
    "around": TemporalRelation.AROUND,
    "by": TemporalRelation.BY,
    "in": TemporalRelation.IN,
    "on": TemporalRelation.ON,
}

_Candidate = Tuple[int, int, TemporalRelation, TimePoint, Optional[TimePoint]]


def _grouped_spans(text: str) -> List[Tuple[Tuple[int, int], List[TimePoint]]]:
    """Date spans in position order; a range span carries both its points."""
    groups: List[Tuple[Tuple[int, int], List[TimePoint]]] = []
    for point, span in parse_timepoints_with_spans(text):
        if groups and groups[-1][0] == span:
            groups[-1][1].append(point)
        else:
            groups.append((span, [point]))
    return groups


def _sorted_pair(p1: TimePoint, p2: TimePoint) -> Tuple[TimePoint, TimePoint]:
    if to_fractional_year(p1) <= to_fractional_year(p2):
        return p1, p2
    return p2, p1


def _locate_tc(text: str) -> Optional[_Candidate]:
    """Find the last relation-marker-plus-date span in ``text``.

    Returns (start, end, relation, t1, t2) or None when no relation surface
    form sits directly on a date expression.
    """
    groups = _grouped_spans(text)
    if not groups:
        return None
    candidates: List[_Candidate] = []
    consumed: set[int] = set()

    for m in _BETWEEN_RE.finditer(text):
        gi = next((i for i, (span, _) in enumerate(groups) if span[0] >= m.end()), None)
        if gi is None or gi + 1 >= len(groups):
            continue
        (s1, e1), pts1 = groups[gi]
        (s2, e2), pts2 = groups[gi + 1]
        if text[m.end():s1].strip():
            continue
        if text[e1:s2].strip().lower() != "and":
            continue
        lo, hi = _sorted_pair(pts1[0], pts2[0])
        candidates.append((m.start(), e2, TemporalRelation.BETWEEN, lo, hi))
        consumed.update((gi, gi + 1))

    for idx, ((start, end), points) in enumerate(groups):
        if idx in consumed:
            continue
        if len(points) >= 2:
            lo, hi = _sorted_pair(points[0], points[1])
            if text[start:end].lower().startswith("from"):
                candidates.append((start, end, TemporalRelation.FROM_TO, lo, hi))
            else:
                m = _RELATION_TAIL_RE.search(text, 0, start)
                if m:
                    candidates.append((m.start(1), end, TemporalRelation.FROM_TO, lo, hi))
            continue
        m = _RELATION_TAIL_RE.search(text, 0, start)
        if m:
            surface = re.sub(r"\s+", " ", m.group(1).lower())
            candidates.append((m.start(1), end, _RELATION_BY_SURFACE[surface], points[0], None))

    if not candidates:
        return None
    # The trailing constraint wins when several relation+date matches exist.
    return max(candidates, key=lambda c: (c[0], c[1]))


def _find_condition(text: str) -> Tuple[ImplicitCondition, Optional[Tuple[int, int]]]:
    m = _CONDITION_RE.search(text)
    if m is None:
        return ImplicitCondition.NONE, None
    return ImplicitCondition(m.group(1).lower()), m.span(1)


def _excise(text: str, spans: List[Tuple[int, int]]) -> str:
    pieces: List[str] = []
    prev = 0
    for start, end in sorted(spans):
        pieces.append(text[prev:start])
        prev = max(prev, end)
    pieces.append(text[prev:])
    return "".join(pieces)


_DANGLING_TAIL_RE = re.compile(r"(?:^|\s)(?:in|as)$", re.IGNORECASE)


def _clean_main_content(raw: str, original: str) -> str:
    """Normalize the question remainder after removing constraint spans."""
    mc = re.sub(r"\s+", " ", raw).strip()
    had_mark = mc.endswith("?")
    if had_mark:
        mc = mc[:-1]
    mc = mc.strip(" ,")
    while True:
        trimmed = _DANGLING_TAIL_RE.sub("", mc).strip(" ,")
        if trimmed == mc:
            break
        mc = trimmed
    if mc and (had_mark or original.rstrip().endswith("?")):
        mc += "?"
    return mc if mc else original


def decompose_rule_based(question: str) -> DecomposedQuery:
    """Split a question into main content and temporal constraint by rules.

    The constraint is the last relation marker sitting directly on a date
    expression, extended over an adjacent leading condition word. The main
    content is the question with that span (and any standalone condition word
    plus its article) removed and the terminal question mark restored. With no
    relation+date match the constraint is absent and the main content is the
    question itself.
    """
    if not question.strip():
        raise ValueError("empty question")
    located = _locate_tc(question)
    if located is None:
        return DecomposedQuery(question, question, None, extract_keywords(question))

    start, end, relation, t1, t2 = located
    condition, cond_span = _find_condition(question)
    removals: List[Tuple[int, int]] = []
    if cond_span is not None:
        cs, ce = cond_span
        rm_start = cs
        article = _ARTICLE_TAIL_RE.search(question, 0, cs)
        if article:
            rm_start = article.start()
        if ce <= start and not question[ce:start].strip():
            # Condition word directly prefixes the constraint: fold it in.
            start = rm_start
        else:
            removals.append((rm_start, ce))
    removals.append((start, end))

    constraint = TemporalConstraint(condition, relation, t1, t2, raw_text=question[start:end])
    mc = _clean_main_content(_excise(question, removals), question)
    return DecomposedQuery(question, mc, constraint, extract_keywords(mc))


# ---------------------------------------------------------------------------
# LLM-backed decomposition
# ---------------------------------------------------------------------------

def _parse_decompose_reply(reply: str) -> Optional[Tuple[str, str]]:
    mc: Optional[str] = None
    tc: Optional[str] = None
    for line in reply.splitlines():
        line = line.strip()
        if mc is None and line[:3].upper() == "MC:":
            mc = line[3:].strip()
        elif tc is None and line[:3].upper() == "TC:":
            tc = line[3:].strip()
    if not mc or tc is None:
        return None
    return mc, tc


def decompose_llm(
    question: str, generator: Generator, prompt_dir: Optional[str] = None
) -> DecomposedQuery:
    """Decompose via a generator prompt; never raises.

    The reply must carry an "MC:" line and a "TC:" line whose constraint text
    is either "None" or a verbatim substring of the question that the
    rule-based parser can classify. Anything else, including transport errors,
    falls back to decompose_rule_based with the fallback flag set.
    """
    if not question.strip():
        raise ValueError("empty question")

    def fallback() -> DecomposedQuery:
        return replace(decompose_rule_based(question), used_fallback=True)

    template = load_prompt("decompose", prompt_dir)
    prompt = render_prompt(template, {"question": question})
    try:
        reply = generator.generate(prompt, max_tokens=128)
    except ProviderError:
        return fallback()

    parsed = _parse_decompose_reply(reply)
    if parsed is None:
        return fallback()
    mc, tc_text = parsed
    mc = re.sub(r"\s+", " ", mc).strip()

    constraint: Optional[TemporalConstraint] = None
    if tc_text.lower() != "none":
        if tc_text not in question:
            return fallback()
        located = _locate_tc(tc_text)
        if located is None:
            return fallback()
        _, _, relation, t1, t2 = located
        condition, _ = _find_condition(question)
        constraint = TemporalConstraint(condition, relation, t1, t2, raw_text=tc_text)

    return DecomposedQuery(question, mc, constraint, extract_keywords(mc, generator, prompt_dir))


# ---------------------------------------------------------------------------
# Keyword extraction
# ---------------------------------------------------------------------------

_WORD_RE = re.compile(r"[A-Za-z0-9]+(?:['’\-][A-Za-z0-9]+)*")

_STOPWORDS = frozenset("""
    a an the
    who whom whose what which when where why how
    am is are was were be been being do does did
    will would shall should can could may might must has have had
    i you he she it we they me him her us them
    my your his its our their this that these those there here
    of in on at by to from with for about as into over under
    between during until before after around since and or but nor not no
    first earliest last latest time times year years
""".split())

# Lowercase connectives that may join two capitalized words inside one name.
_BRIDGE_WORDS = frozenset({"and", "of", "the"})


def _rule_based_keywords(mc: str) -> List[str]:
    tokens = _WORD_RE.findall(mc)

    def is_content(tok: str) -> bool:
        return tok.lower() not in _STOPWORDS

    def is_cap(tok: str) -> bool:
        return tok[:1].isupper()

    out: List[str] = []
    i, n = 0, len(tokens)
    while i < n:
        tok = tokens[i]
        if not is_content(tok):
            i += 1
            continue
        if is_cap(tok):
            j = i
            while True:
                if j + 1 < n and is_content(tokens[j + 1]) and is_cap(tokens[j + 1]):
                    j += 1
                    continue
                if (
                    j + 2 < n
                    and tokens[j + 1].lower() in _BRIDGE_WORDS
                    and is_content(tokens[j + 2])
                    and is_cap(tokens[j + 2])
                ):
                    j += 2
                    continue
                break
            out.append(" ".join(tokens[i : j + 1]))
            i = j + 1
        else:
            out.append(tok)
            i += 1

    deduped: List[str] = []
    for keyword in out:
        if keyword not in deduped:
            deduped.append(keyword)
    return deduped


def _parse_keyword_reply(reply: str) -> Optional[List[str]]:
    body = reply.split("</Keywords>")[0]
    start = body.find("[")
    end = body.find("]", start)
    if start < 0 or end < 0:
        return None
    try:
        parsed = json.loads(body[start : end + 1])
    except json.JSONDecodeError:
        return None
    if not isinstance(parsed, list) or not all(isinstance(item, str) for item in parsed):
        return None
    keywords: List[str] = []
    for item in parsed:
        item = item.strip()
        if item and item not in keywords:
            keywords.append(item)
    return keywords or None


def extract_keywords(
    mc: str, generator: Optional[Generator] = None, prompt_dir: Optional[str] = None
) -> List[str]:
    """Extract retrieval keywords from the main content.

    Without a generator: content tokens minus stopwords, with runs of
    capitalized words (optionally joined by a lowercase connective) merged
    into one multi-word keyword. With a generator: the keyword prompt, its
    reply parsed as a JSON list of strings; unusable replies or provider
    errors fall back to the rule-based path. Output is deduplicated and
    order-preserving either way.
    """
    if not mc.strip():
        raise ValueError("empty main content")
    if generator is None:
        return _rule_based_keywords(mc)
    template = load_prompt("keyword_extraction", prompt_dir)
    prompt = render_prompt(template, {"normalized question": mc})
    try:
        reply = generator.generate(prompt, max_tokens=128, stop=["</Keywords>"])
    except ProviderError:
        return _rule_based_keywords(mc)
    parsed = _parse_keyword_reply(reply)
    if parsed is None:
        return _rule_based_keywords(mc)
    return parsed
