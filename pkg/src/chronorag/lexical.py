"""Lexical retrieval: tokenizer, BM25 inverted index, keyword coverage ranking.

The same tokenizer drives indexing, search, and keyword matching: lowercase,
split on any non-alphanumeric run, digits kept as ordinary tokens.
"""

from __future__ import annotations

import gzip
import hashlib
import json
import math
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .corpus import Corpus, Passage
from .errors import DataError, StaleIndexError

__all__ = [
    "tokenize",
    "InvertedIndex",
    "build_index",
    "bm25_search",
    "keyword_rank",
    "save_index",
    "load_index",
    "load_or_build_index",
]

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> List[str]:
    """Lowercase and split on non-alphanumeric runs, keeping digits.

    tokenize("NBA Finals, 1995!") == ["nba", "finals", "1995"]
    """
    return _TOKEN_RE.findall(text.lower())


@dataclass
class InvertedIndex:
    """Postings over passage presentations (``title | text``).

    `order` is the canonical passage position used for deterministic
    tie-breaking; `doc_len` is in tokens.
    """

    k1: float
    b: float
    n_docs: int
    avgdl: float
    postings: Dict[str, Dict[str, int]]
    doc_len: Dict[str, int]
    order: Dict[str, int]
    corpus_digest: str = ""

    def idf(self, term: str) -> float:
        df = len(self.postings.get(term, ()))
        return math.log(1.0 + (self.n_docs - df + 0.5) / (df + 0.5))


def _corpus_digest(passages: Iterable[Passage]) -> str:
    h = hashlib.sha256()
    for p in passages:
        h.update(p.id.encode("utf-8"))
        h.update(b"\x00")
        h.update(p.presentation().encode("utf-8"))
        h.update(b"\x00")
    return h.hexdigest()


def build_index(corpus: Corpus, k1: float = 1.2, b: float = 0.75) -> InvertedIndex:
    """Build a BM25 inverted index over a corpus. Empty corpus is an error."""
    if len(corpus) == 0:
        raise DataError("cannot index an empty corpus")
    postings: Dict[str, Dict[str, int]] = {}
    doc_len: Dict[str, int] = {}
    order: Dict[str, int] = {}
    for pos, passage in enumerate(corpus):
        tokens = tokenize(passage.presentation())
        doc_len[passage.id] = len(tokens)
        order[passage.id] = pos
        for tok in tokens:
            postings.setdefault(tok, {}).setdefault(passage.id, 0)
            postings[tok][passage.id] += 1
    avgdl = sum(doc_len.values()) / len(doc_len)
    return InvertedIndex(
        k1=k1,
        b=b,
        n_docs=len(corpus),
        avgdl=avgdl,
        postings=postings,
        doc_len=doc_len,
        order=order,
        corpus_digest=_corpus_digest(corpus),
    )


def bm25_search(index: InvertedIndex, query: str, k: int) -> List[Tuple[str, float]]:
    """Top-k passages by BM25, ties broken by canonical passage order.

    Only passages sharing at least one query token appear. Per-passage sums
    accumulate in query-token order so reruns are bit-identical.
    """
    if k <= 0:
        return []
    q_tokens = tokenize(query)
    scores: Dict[str, float] = {}
    for term in q_tokens:
        plist = index.postings.get(term)
        if not plist:
            continue
        idf = index.idf(term)
        for pid, tf in plist.items():
            denom = tf + index.k1 * (1.0 - index.b + index.b * index.doc_len[pid] / index.avgdl)
            scores[pid] = scores.get(pid, 0.0) + idf * tf * (index.k1 + 1.0) / denom
    ranked = sorted(scores.items(), key=lambda item: (-item[1], index.order[item[0]]))
    return ranked[:k]


# ---------------------------------------------------------------------------
# Keyword coverage ranking
# ---------------------------------------------------------------------------

def _contains_phrase(tokens: Sequence[str], phrase: Sequence[str]) -> bool:
    n = len(phrase)
    if n == 1:
        return phrase[0] in tokens
    return any(list(tokens[i : i + n]) == list(phrase) for i in range(len(tokens) - n + 1))


def keyword_rank(
    items: Sequence[Tuple[str, str]],
    keywords: Sequence[str],
    m: int,
    prior: Optional[Dict[str, int]] = None,
) -> List[Tuple[str, int]]:
    """Rank items by distinct-keyword coverage, truncated to m.

    Coverage counts distinct keywords found in the item text; a multi-word
    keyword only matches as a contiguous token phrase (case-insensitive).
    Ties keep the prior order, which defaults to the input list order. With
    no keywords every coverage is 0, so the result is the prior head.
    """
    if prior is None:
        prior = {unit_id: pos for pos, (unit_id, _) in enumerate(items)}
    phrases = [tokenize(kw) for kw in dict.fromkeys(keywords)]
    phrases = [p for p in phrases if p]
    scored = []
    for unit_id, text in items:
        tokens = tokenize(text)
        coverage = sum(1 for p in phrases if _contains_phrase(tokens, p))
        scored.append((unit_id, coverage))
    scored.sort(key=lambda item: (-item[1], prior[item[0]]))
    return scored[:m]


# ---------------------------------------------------------------------------
# Index cache
# ---------------------------------------------------------------------------

# Bump when the on-disk layout changes; stale caches are rebuilt by callers.
_CACHE_HEADER = b"chronorag-index 1\n"


def save_index(index: InvertedIndex, path: str | Path) -> None:
    """Write the index as a versioned header plus gzip-compressed JSON."""
    payload = {
        "k1": index.k1,
        "b": index.b,
        "n_docs": index.n_docs,
        "avgdl": index.avgdl,
        "postings": index.postings,
        "doc_len": index.doc_len,
        "order": index.order,
        "corpus_digest": index.corpus_digest,
    }
    blob = _CACHE_HEADER + gzip.compress(json.dumps(payload).encode("utf-8"))
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(blob)
    os.replace(tmp, path)


def load_index(path: str | Path) -> InvertedIndex:
    """Load a cached index; raises StaleIndexError on version mismatch or
    corruption so callers can rebuild."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"index cache not found: {path}")
    blob = path.read_bytes()
    if not blob.startswith(_CACHE_HEADER):
        raise StaleIndexError(f"{path}: unrecognized index cache header")
    try:
        payload = json.loads(gzip.decompress(blob[len(_CACHE_HEADER):]))
        return InvertedIndex(
            k1=payload["k1"],
            b=payload["b"],
            n_docs=payload["n_docs"],
            avgdl=payload["avgdl"],
            postings=payload["postings"],
            doc_len=payload["doc_len"],
            order=payload["order"],
            corpus_digest=payload["corpus_digest"],
        )
    except (OSError, EOFError, ValueError, KeyError) as exc:
        raise StaleIndexError(f"{path}: corrupt index cache ({exc})") from exc


def load_or_build_index(
    corpus: Corpus, cache_path: Optional[str | Path], k1: float = 1.2, b: float = 0.75
) -> InvertedIndex:
    """Load a fresh cache when possible, else build (and cache) anew.

    A cache is fresh when its header version matches, its BM25 parameters
    equal the requested ones, and its corpus digest matches the corpus.
    """
    if cache_path is not None and Path(cache_path).exists():
        try:
            index = load_index(cache_path)
            if (
                index.corpus_digest == _corpus_digest(corpus)
                and index.k1 == k1
                and index.b == b
            ):
                return index
        except StaleIndexError:
            pass
    index = build_index(corpus, k1=k1, b=b)
    if cache_path is not None:
        save_index(index, cache_path)
    return index
