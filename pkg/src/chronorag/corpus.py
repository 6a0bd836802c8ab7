"""Passage corpus: JSONL loading and rule-based sentence splitting.

Corpus files are JSON Lines, one object per line with string fields
``id``, ``title``, ``text``. Unknown fields are ignored with a warning;
structural problems raise DataError with the offending line number.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Dict, Iterator, List, Optional

from .errors import DataError

_log = logging.getLogger(__name__)

__all__ = [
    "Passage",
    "Sentence",
    "SentenceOrigin",
    "Corpus",
    "load_corpus",
    "split_sentences",
    "SUMMARY_INDEX",
]

# Reserved sentence index for query-focused summaries (one per passage).
SUMMARY_INDEX = -1


@dataclass(frozen=True)
class Passage:
    id: str
    title: str
    text: str

    def presentation(self) -> str:
        """The passage as shown to scorers and prompts: ``title | text``."""
        return f"{self.title} | {self.text}"


class SentenceOrigin(Enum):
    ORIGINAL_SPLIT = "original_split"
    SUMMARY = "summary"


@dataclass(frozen=True)
class Sentence:
    """One scoring unit: either an original sentence split or a summary."""

    passage_id: str
    index: int
    text: str
    origin: SentenceOrigin

    def __post_init__(self) -> None:
        if self.origin is SentenceOrigin.SUMMARY and self.index != SUMMARY_INDEX:
            raise ValueError("summaries must use the reserved sentinel index")
        if self.origin is SentenceOrigin.ORIGINAL_SPLIT and self.index < 0:
            raise ValueError("split sentences use non-negative indices")

    @property
    def uid(self) -> str:
        return f"{self.passage_id}::{self.index}"


class Corpus:
    """An ordered passage collection with id lookup.

    List position is the canonical passage order used for deterministic
    tie-breaking everywhere downstream.
    """

    def __init__(self, passages: List[Passage]):
        self.passages = passages
        self.by_id: Dict[str, Passage] = {}
        self.rank: Dict[str, int] = {}
        for pos, p in enumerate(passages):
            if p.id in self.by_id:
                raise DataError(f"duplicate passage id: {p.id!r}")
            self.by_id[p.id] = p
            self.rank[p.id] = pos

    def __len__(self) -> int:
        return len(self.passages)

    def __iter__(self) -> Iterator[Passage]:
        return iter(self.passages)

    def get(self, passage_id: str) -> Optional[Passage]:
        return self.by_id.get(passage_id)


_REQUIRED_FIELDS = ("id", "title", "text")


def load_corpus(path: str | Path) -> Corpus:
    """Load a JSONL corpus file, validating every record."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"corpus file not found: {path}")
    passages: List[Passage] = []
    warned_fields: set[str] = set()
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(record, dict):
                raise DataError(f"{path}:{lineno}: record is not an object")
            for field in _REQUIRED_FIELDS:
                if field not in record:
                    raise DataError(f"{path}:{lineno}: missing field {field!r}")
                if not isinstance(record[field], str):
                    raise DataError(f"{path}:{lineno}: field {field!r} must be a string")
            for field in record:
                if field not in _REQUIRED_FIELDS and field not in warned_fields:
                    warned_fields.add(field)
                    _log.warning("%s:%d: ignoring unknown field %r", path, lineno, field)
            if not record["id"]:
                raise DataError(f"{path}:{lineno}: empty passage id")
            if not record["text"]:
                raise DataError(f"{path}:{lineno}: empty passage text")
            passages.append(Passage(record["id"], record["title"], record["text"]))
    if not passages:
        raise DataError(f"{path}: corpus file contains no records")
    try:
        return Corpus(passages)
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Sentence splitting
# ---------------------------------------------------------------------------

# Tokens (lowercased, terminator included) that never end a sentence.
_ABBREVIATIONS = frozenset(
    {"mr.", "dr.", "no.", "u.s."}
    | {m + "." for m in ("jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec")}
)

_TERMINATOR_RE = re.compile(r"[.!?]")


def _is_initial(chunk: str) -> bool:
    return len(chunk) == 2 and chunk[0].isalpha() and chunk[0].isupper() and chunk[1] == "."


def split_sentences(passage: Passage) -> List[Sentence]:
    """Split a passage into sentences with a deterministic rule set.

    A terminator (. ! ?) ends a sentence when followed by whitespace and an
    uppercase letter or digit, unless the token it closes is a protected
    abbreviation or a single-letter initial. Decimal numbers survive because
    their dot is not followed by whitespace. Concatenating the returned texts
    reconstructs the passage text modulo whitespace.
    """
    text = passage.text
    cuts: List[tuple[int, int]] = []
    for m in _TERMINATOR_RE.finditer(text):
        i = m.start()
        j = i + 1
        if j >= len(text) or not text[j].isspace():
            continue
        k = j
        while k < len(text) and text[k].isspace():
            k += 1
        if k >= len(text):
            continue
        if not (text[k].isupper() or text[k].isdigit()):
            continue
        start = i
        while start > 0 and not text[start - 1].isspace():
            start -= 1
        chunk = text[start : i + 1]
        if chunk.lower() in _ABBREVIATIONS or _is_initial(chunk):
            continue
        cuts.append((i + 1, k))

    pieces: List[str] = []
    prev = 0
    for end, nxt in cuts:
        piece = text[prev:end].strip()
        if piece:
            pieces.append(piece)
        prev = nxt
    tail = text[prev:].strip()
    if tail:
        pieces.append(tail)

    return [
        Sentence(passage.id, idx, piece, SentenceOrigin.ORIGINAL_SPLIT)
        for idx, piece in enumerate(pieces)
    ]
