"""HTTP client for the model sidecar protocol.

The sidecar exposes POST endpoints under /v1: health, embed, score, generate.
All calls are JSON in / JSON out, with bounded retries and exponential
backoff on transient failures (connection errors, timeouts, 5xx). Client
errors (4xx) and schema violations are not retried.
"""

from __future__ import annotations

import math
import threading
import time
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import requests

from .errors import (
    DimensionMismatchError,
    MalformedResponseError,
    RemoteStatusError,
    RequestTimeoutError,
    TransportError,
)
from .providers import ScorerMode, cosine

__all__ = [
    "RemoteConfig",
    "SidecarClient",
    "RemoteBiEncoder",
    "RemoteCrossEncoder",
    "RemoteGenerator",
]


@dataclass
class RemoteConfig:
    base_url: str
    timeout_s: float = 30.0
    retries: int = 3
    backoff_s: float = 0.5
    max_in_flight: int = 8


class SidecarClient:
    """Thin protocol client with retries and schema validation."""

    def __init__(self, config: RemoteConfig, session: Optional[requests.Session] = None):
        self.config = config
        self.base_url = config.base_url.rstrip("/")
        self._session = session or requests.Session()
        self._gate = threading.BoundedSemaphore(config.max_in_flight)
        self._dim: Optional[int] = None
        self._dim_lock = threading.Lock()

    def _post(self, path: str, payload: dict) -> dict:
        url = f"{self.base_url}{path}"
        last_error: Exception = TransportError(f"no attempts made for {url}")
        for attempt in range(self.config.retries):
            if attempt > 0:
                time.sleep(self.config.backoff_s * (2 ** (attempt - 1)))
            try:
                with self._gate:
                    response = self._session.post(
                        url, json=payload, timeout=self.config.timeout_s
                    )
            except requests.Timeout as exc:
                last_error = RequestTimeoutError(f"{url}: timed out after {self.config.timeout_s}s")
                last_error.__cause__ = exc
                continue
            except requests.RequestException as exc:
                last_error = TransportError(f"{url}: {exc}")
                last_error.__cause__ = exc
                continue
            if response.status_code >= 500:
                last_error = RemoteStatusError(response.status_code, response.text[:200])
                continue
            if response.status_code >= 400:
                raise RemoteStatusError(response.status_code, response.text[:200])
            try:
                body = response.json()
            except ValueError as exc:
                raise MalformedResponseError(f"{url}: reply is not JSON") from exc
            if not isinstance(body, dict):
                raise MalformedResponseError(f"{url}: reply is not a JSON object")
            return body
        raise last_error

    # -- protocol operations -------------------------------------------------

    def health(self) -> dict:
        body = self._post("/v1/health", {})
        if "status" not in body:
            raise MalformedResponseError("/v1/health: missing status")
        return body

    def embed(self, texts: Sequence[str]) -> List[np.ndarray]:
        body = self._post("/v1/embed", {"texts": list(texts)})
        vectors = body.get("vectors")
        dim = body.get("dim")
        if not isinstance(vectors, list) or not isinstance(dim, int):
            raise MalformedResponseError("/v1/embed: expected vectors list and integer dim")
        if len(vectors) != len(texts):
            raise MalformedResponseError(
                f"/v1/embed: {len(texts)} texts but {len(vectors)} vectors"
            )
        out = []
        for vec in vectors:
            if not isinstance(vec, list) or len(vec) != dim:
                raise MalformedResponseError("/v1/embed: vector length disagrees with dim")
            arr = np.asarray(vec, dtype=np.float64)
            if not np.all(np.isfinite(arr)):
                raise MalformedResponseError("/v1/embed: non-finite vector component")
            out.append(arr)
        with self._dim_lock:
            if self._dim is None:
                self._dim = dim
            elif self._dim != dim:
                raise DimensionMismatchError(
                    f"/v1/embed: dim changed from {self._dim} to {dim}"
                )
        return out

    def score(self, query: str, candidates: Sequence[str]) -> List[float]:
        body = self._post("/v1/score", {"query": query, "candidates": list(candidates)})
        scores = body.get("scores")
        if not isinstance(scores, list) or len(scores) != len(candidates):
            raise MalformedResponseError(
                f"/v1/score: expected {len(candidates)} scores, got "
                f"{len(scores) if isinstance(scores, list) else type(scores).__name__}"
            )
        values = []
        for s in scores:
            if not isinstance(s, (int, float)) or not math.isfinite(s):
                raise MalformedResponseError(f"/v1/score: non-finite score {s!r}")
            values.append(float(s))
        return values

    def generate(
        self, prompt: str, max_tokens: int = 256, stop: Optional[Sequence[str]] = None
    ) -> str:
        payload = {"prompt": prompt, "max_tokens": max_tokens, "stop": list(stop or [])}
        body = self._post("/v1/generate", payload)
        text = body.get("text")
        if not isinstance(text, str):
            raise MalformedResponseError("/v1/generate: missing text field")
        return text


# ---------------------------------------------------------------------------
# Provider adapters
# ---------------------------------------------------------------------------

class RemoteBiEncoder:
    """Bi-encoder over the sidecar /v1/embed endpoint; cosine scored locally."""

    mode = ScorerMode.BI_ENCODER

    def __init__(self, client: SidecarClient, provider_id: Optional[str] = None):
        self.client = client
        self.provider_id = provider_id or f"remote-bi:{client.base_url}"

    def embed(self, text: str) -> np.ndarray:
        return self.client.embed([text])[0]

    def score(self, query: str, text: str) -> float:
        q, t = self.client.embed([query, text])
        return cosine(q, t)

    def score_many(self, query: str, texts: Sequence[str]) -> List[float]:
        vectors = self.client.embed([query, *texts])
        q = vectors[0]
        return [cosine(q, v) for v in vectors[1:]]


class RemoteCrossEncoder:
    """Cross-encoder over the sidecar /v1/score endpoint."""

    mode = ScorerMode.CROSS_ENCODER

    def __init__(self, client: SidecarClient, provider_id: Optional[str] = None):
        self.client = client
        self.provider_id = provider_id or f"remote-cross:{client.base_url}"

    def score(self, query: str, text: str) -> float:
        return self.client.score(query, [text])[0]

    def score_many(self, query: str, texts: Sequence[str]) -> List[float]:
        if not texts:
            return []
        return self.client.score(query, texts)


class RemoteGenerator:
    """Generator over the sidecar /v1/generate endpoint."""

    def __init__(self, client: SidecarClient, provider_id: Optional[str] = None):
        self.client = client
        self.provider_id = provider_id or f"remote-gen:{client.base_url}"

    def generate(
        self, prompt: str, max_tokens: int = 256, stop: Optional[Sequence[str]] = None
    ) -> str:
        return self.client.generate(prompt, max_tokens=max_tokens, stop=stop)
