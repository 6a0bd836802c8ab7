"""Prompt template assets and filling.

Templates live under ``chronorag/prompts/`` as plain text with
``{placeholder}`` slots. Placeholder names may contain spaces, so filling
is literal substring replacement rather than str.format.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path
from typing import Mapping, Optional

from .errors import ConfigError

__all__ = ["PROMPT_NAMES", "load_prompt", "render_prompt"]

PROMPT_NAMES = (
    "combined_reading",
    "decompose",
    "independent_reading",
    "keyword_extraction",
    "qfs",
    "reader_cot",
    "reader_direct",
    "reader_rag_concat",
    "relevance_check",
)


def load_prompt(name: str, prompt_dir: Optional[str | Path] = None) -> str:
    """Return the template text for ``name``.

    ``prompt_dir`` overrides packaged templates one file at a time: when
    the directory holds ``<name>.txt`` that file wins, otherwise the
    packaged asset is used.
    """
    if name not in PROMPT_NAMES:
        raise ConfigError(f"unknown prompt template: {name!r}")
    filename = f"{name}.txt"
    if prompt_dir is not None:
        candidate = Path(prompt_dir) / filename
        if candidate.exists():
            return candidate.read_text(encoding="utf-8")
    ref = resources.files(__package__).joinpath("prompts").joinpath(filename)
    return ref.read_text(encoding="utf-8")


def render_prompt(template: str, values: Mapping[str, str]) -> str:
    """Fill every ``{name}`` slot named in ``values`` by literal replacement."""
    out = template
    for key, value in values.items():
        out = out.replace("{" + key + "}", value)
    return out
