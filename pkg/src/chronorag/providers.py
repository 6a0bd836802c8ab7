"""Semantic scoring providers: contracts, offline stub, disk cache.

Two scorer shapes exist. Bi-encoders embed query and text separately and
score by cosine; cross-encoders score the joint pair. The stub provider is a
deterministic offline bi-encoder: hashed bag-of-words over FNV-1a 32-bit
buckets, L2-normalized. It exists so the whole pipeline runs (and stays
byte-reproducible) without any model or network.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import uuid
from enum import Enum
from pathlib import Path
from typing import Callable, Dict, List, Optional, Protocol, Sequence, Tuple, runtime_checkable

import numpy as np

from .lexical import tokenize

_log = logging.getLogger(__name__)

__all__ = [
    "ScorerMode",
    "SemanticScorer",
    "Generator",
    "StubScorer",
    "stub_embed",
    "fnv1a_32",
    "cosine",
    "DiskCache",
    "CachedScorer",
    "CachedGenerator",
]


class ScorerMode(Enum):
    BI_ENCODER = "bi_encoder"
    CROSS_ENCODER = "cross_encoder"


@runtime_checkable
class SemanticScorer(Protocol):
    """Scores query/text relevance. Bi-encoders also expose embed()."""

    provider_id: str
    mode: ScorerMode

    def score(self, query: str, text: str) -> float: ...

    def score_many(self, query: str, texts: Sequence[str]) -> List[float]: ...


@runtime_checkable
class Generator(Protocol):
    """Text generation provider used for decomposition, QFS, and readers."""

    provider_id: str

    def generate(
        self, prompt: str, max_tokens: int = 256, stop: Optional[Sequence[str]] = None
    ) -> str: ...


# ---------------------------------------------------------------------------
# Stub bi-encoder
# ---------------------------------------------------------------------------

_FNV_OFFSET = 0x811C9DC5
_FNV_PRIME = 0x01000193


def fnv1a_32(data: bytes) -> int:
    """FNV-1a 32-bit hash. Stable across platforms and processes, unlike the
    interpreter's salted builtin hash."""
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & 0xFFFFFFFF
    return h


def stub_embed(text: str, dim: int = 256) -> np.ndarray:
    """Hashed bag-of-words embedding: token -> FNV-1a bucket, then L2 norm.

    Returns a float64 vector of shape (dim,), unit-norm for any text with at
    least one token; tokenless text embeds to the zero vector.
    """
    vec = np.zeros(dim, dtype=np.float64)
    for token in tokenize(text):
        vec[fnv1a_32(token.encode("utf-8")) % dim] += 1.0
    norm = float(np.linalg.norm(vec))
    if norm > 0.0:
        vec /= norm
    return vec


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity; zero vectors score 0. Clamped to [-1, 1]."""
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


class StubScorer:
    """Deterministic offline bi-encoder over hashed bag-of-words vectors."""

    mode = ScorerMode.BI_ENCODER

    def __init__(self, dim: int = 256):
        self.dim = dim
        self.provider_id = f"stub-bow-{dim}"
        self._memo: Dict[str, np.ndarray] = {}

    def embed(self, text: str) -> np.ndarray:
        # Re-embedding is idempotent, so racing writers are harmless.
        vec = self._memo.get(text)
        if vec is None:
            vec = stub_embed(text, self.dim)
            self._memo[text] = vec
        return vec

    def score(self, query: str, text: str) -> float:
        return cosine(self.embed(query), self.embed(text))

    def score_many(self, query: str, texts: Sequence[str]) -> List[float]:
        q = self.embed(query)
        return [cosine(q, self.embed(t)) for t in texts]


# ---------------------------------------------------------------------------
# Content-addressed disk cache
# ---------------------------------------------------------------------------

class DiskCache:
    """One JSON file per key under a root directory.

    Keys are sha256 over the canonicalized (provider, operation, payload)
    triple; values are JSON-serializable. Corrupt entries are treated as
    misses with a warning and are overwritten on the next put.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    @staticmethod
    def key(provider_id: str, op: str, payload) -> str:
        material = json.dumps(
            {"provider": provider_id, "op": op, "payload": payload},
            sort_keys=True,
            separators=(",", ":"),
            ensure_ascii=False,
        )
        return hashlib.sha256(material.encode("utf-8")).hexdigest()

    def _path(self, key: str) -> Path:
        return self.root / key

    def get(self, key: str) -> Tuple[bool, object]:
        path = self._path(key)
        if not path.exists():
            return False, None
        try:
            envelope = json.loads(path.read_text(encoding="utf-8"))
            return True, envelope["value"]
        except (OSError, ValueError, KeyError) as exc:
            _log.warning("cache entry %s unreadable (%s); treating as miss", path.name, exc)
            return False, None

    def put(self, key: str, value) -> None:
        path = self._path(key)
        tmp = path.with_name(f".{path.name}.{uuid.uuid4().hex}.tmp")
        tmp.write_text(json.dumps({"value": value}, ensure_ascii=False), encoding="utf-8")
        os.replace(tmp, path)

    def get_or(self, provider_id: str, op: str, payload, compute: Callable[[], object]):
        key = self.key(provider_id, op, payload)
        hit, value = self.get(key)
        if hit:
            return value
        value = compute()
        self.put(key, value)
        return value


class CachedScorer:
    """Wraps a scorer with a DiskCache; equal results, fewer provider calls."""

    def __init__(self, inner, cache: DiskCache):
        self.inner = inner
        self.cache = cache
        self.provider_id = inner.provider_id
        self.mode = inner.mode

    def score(self, query: str, text: str) -> float:
        return float(
            self.cache.get_or(
                self.provider_id, "score", {"query": query, "text": text},
                lambda: self.inner.score(query, text),
            )
        )

    def score_many(self, query: str, texts: Sequence[str]) -> List[float]:
        return [self.score(query, t) for t in texts]

    def embed(self, text: str) -> np.ndarray:
        values = self.cache.get_or(
            self.provider_id, "embed", {"text": text},
            lambda: [float(x) for x in self.inner.embed(text)],
        )
        return np.asarray(values, dtype=np.float64)


class CachedGenerator:
    """Wraps a generator with a DiskCache keyed on the full request."""

    def __init__(self, inner, cache: DiskCache):
        self.inner = inner
        self.cache = cache
        self.provider_id = inner.provider_id

    def generate(
        self, prompt: str, max_tokens: int = 256, stop: Optional[Sequence[str]] = None
    ) -> str:
        payload = {"prompt": prompt, "max_tokens": max_tokens, "stop": list(stop) if stop else None}
        return str(
            self.cache.get_or(
                self.provider_id, "generate", payload,
                lambda: self.inner.generate(prompt, max_tokens=max_tokens, stop=stop),
            )
        )
