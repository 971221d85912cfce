"""Versioned prompt assets.

Templates use {placeholder} markers but are substituted with str.replace so
literal braces inside the asset bodies (JSON examples) stay untouched.
"""

from __future__ import annotations

from functools import lru_cache
from importlib import resources

REASK_SUFFIX = "\n\nReturn only the requested JSON structure, with no extra text."


@lru_cache(maxsize=None)
def load_asset(name: str) -> str:
    return (resources.files("saneval.assets") / name).read_text(encoding="utf-8")


def render(name: str, **placeholders: str) -> str:
    text = load_asset(name)
    for key, value in placeholders.items():
        marker = "{" + key + "}"
        if marker not in text:
            raise KeyError(f"asset {name} has no placeholder {marker}")
        text = text.replace(marker, value)
    return text
