"""Engine configuration: one JSON manifest, environment overrides, providers.

The manifest holds everything a command needs to reproduce a run: corpus
and index paths, pipeline stage widths, curve parameters, the provider
section, prompt directory, and metric cutoffs. Command-line flags override
individual fields; the sidecar base URL can also come from the environment.
"""

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

from .errors import ConfigError
from .pipeline import PipelineConfig
from .providers import CachedGenerator, CachedScorer, DiskCache, StubScorer
from .temporal import CurveParams

SIDECAR_URL_ENV = "CHRONORAG_SIDECAR_URL"

_PROVIDER_KINDS = ("stub", "remote")
_SCORER_FLAVORS = ("bi", "cross")


@dataclass(frozen=True)
class ProviderConfig:
    """Provider selection: a deterministic stub or the remote sidecar."""

    kind: str = "stub"
    base_url: Optional[str] = None
    timeout_s: float = 30.0
    retries: int = 3
    backoff_s: float = 0.5
    max_in_flight: int = 8
    cache_dir: Optional[str] = None
    scorer: str = "bi"
    generator: bool = False
    stub_dim: int = 256

    def __post_init__(self) -> None:
        if self.kind not in _PROVIDER_KINDS:
            raise ConfigError(f"provider.kind must be one of {_PROVIDER_KINDS}")
        if self.scorer not in _SCORER_FLAVORS:
            raise ConfigError(f"provider.scorer must be one of {_SCORER_FLAVORS}")
        if self.timeout_s <= 0 or self.retries < 1 or self.backoff_s < 0:
            raise ConfigError("provider timing fields out of range")
        if self.max_in_flight < 1:
            raise ConfigError("provider.max_in_flight must be at least 1")
        if self.stub_dim < 8:
            raise ConfigError("provider.stub_dim must be at least 8")


@dataclass(frozen=True)
class EngineConfig:
    """Full manifest for one experiment."""

    corpus: Optional[str] = None
    index_cache: Optional[str] = None
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    prompt_dir: Optional[str] = None
    metric_ks: Tuple[int, ...] = (1, 5, 10, 20)
    trace: bool = False

    def __post_init__(self) -> None:
        if not self.metric_ks:
            raise ConfigError("metric_ks must be non-empty")
        if any(not isinstance(k, int) or k < 1 for k in self.metric_ks):
            raise ConfigError("metric_ks entries must be positive integers")


def _build_section(cls, raw: Dict[str, Any], label: str):
    allowed = {f.name for f in dataclasses.fields(cls)}
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(f"unknown {label} keys: {', '.join(sorted(unknown))}")
    try:
        return cls(**raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {label} section: {exc}") from exc


def parse_engine_config(raw: Dict[str, Any]) -> EngineConfig:
    """Build an EngineConfig from a parsed JSON object."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    raw = dict(raw)
    pipeline_raw = raw.pop("pipeline", {})
    if not isinstance(pipeline_raw, dict):
        raise ConfigError("pipeline section must be an object")
    pipeline_raw = dict(pipeline_raw)
    curve_raw = pipeline_raw.pop("curve", {})
    if not isinstance(curve_raw, dict):
        raise ConfigError("pipeline.curve section must be an object")
    curve = _build_section(CurveParams, curve_raw, "pipeline.curve")
    pipeline = _build_section(PipelineConfig, {**pipeline_raw, "curve": curve}, "pipeline")

    provider_raw = raw.pop("provider", {})
    if not isinstance(provider_raw, dict):
        raise ConfigError("provider section must be an object")
    provider = _build_section(ProviderConfig, provider_raw, "provider")

    metric_ks = raw.pop("metric_ks", (1, 5, 10, 20))
    if isinstance(metric_ks, list):
        metric_ks = tuple(metric_ks)
    engine_raw = {
        "pipeline": pipeline,
        "provider": provider,
        "metric_ks": metric_ks,
        **raw,
    }
    return _build_section(EngineConfig, engine_raw, "config")


def load_engine_config(path: Union[str, Path]) -> EngineConfig:
    """Read and validate a JSON config manifest."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_engine_config(raw)


def resolve_base_url(provider: ProviderConfig) -> Optional[str]:
    """Sidecar base URL: the environment override wins over the manifest."""
    return os.environ.get(SIDECAR_URL_ENV) or provider.base_url


def build_providers(provider: ProviderConfig):
    """Instantiate (scorer, generator-or-None) for the configured provider.

    The stub provider has no generator, so stub runs use rule-based
    decomposition and skip summarization. Remote providers are wrapped in
    the disk cache when cache_dir is set.
    """
    if provider.kind == "stub":
        return StubScorer(provider.stub_dim), None

    from .remote import (
        RemoteBiEncoder,
        RemoteConfig,
        RemoteCrossEncoder,
        RemoteGenerator,
        SidecarClient,
    )

    base_url = resolve_base_url(provider)
    if not base_url:
        raise ConfigError(
            f"remote provider needs provider.base_url or {SIDECAR_URL_ENV}"
        )
    client = SidecarClient(RemoteConfig(
        base_url=base_url,
        timeout_s=provider.timeout_s,
        retries=provider.retries,
        backoff_s=provider.backoff_s,
        max_in_flight=provider.max_in_flight,
    ))
    scorer = RemoteBiEncoder(client) if provider.scorer == "bi" else RemoteCrossEncoder(client)
    generator = RemoteGenerator(client) if provider.generator else None
    if provider.cache_dir:
        cache = DiskCache(provider.cache_dir)
        scorer = CachedScorer(scorer, cache)
        if generator is not None:
            generator = CachedGenerator(generator, cache)
    return scorer, generator
