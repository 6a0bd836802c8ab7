"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2,
ProviderError (and subclasses) -> 3.
"""

from __future__ import annotations


class ChronoragError(Exception):
    """Base class for all package errors."""


class ConfigError(ChronoragError):
    """Invalid configuration file, flag combination, or parameter value."""


class DataError(ChronoragError):
    """Malformed or missing input data (corpus, queries, run files, caches)."""


class StaleIndexError(DataError):
    """Index cache written by an incompatible format version."""


class ProviderError(ChronoragError):
    """Base class for scorer/generator provider failures."""


class TransportError(ProviderError):
    """Connection-level failure talking to a remote provider."""


class RequestTimeoutError(TransportError):
    """Remote provider did not answer within the configured timeout."""


class RemoteStatusError(ProviderError):
    """Remote provider answered with a non-success HTTP status."""

    def __init__(self, status_code: int, detail: str = ""):
        self.status_code = status_code
        super().__init__(f"provider returned status {status_code}: {detail}")


class MalformedResponseError(ProviderError):
    """Remote provider reply does not match the protocol schema."""


class DimensionMismatchError(ProviderError):
    """Embedding vectors disagree on dimensionality."""
