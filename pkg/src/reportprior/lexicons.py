"""Word lists used by the text pipeline.

Four lexicons drive sentence filtering and widget lookup: stopwords,
action verbs, bug-cue words, and a word -> widget-type mapping. Bundled
defaults live in the package data directory; each can be replaced by a
user-supplied file of the same shape.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping

import json

from .errors import LexiconError

# Action verbs whose objects are typed text rather than widgets get the
# next quoted string from the sentence as their supplement.
TYPING_ACTIONS = frozenset({"type", "input", "enter"})


@dataclass(frozen=True)
class Lexicons:
    stopwords: frozenset[str]
    actions: frozenset[str]
    bug_cues: frozenset[str]
    type_lexicon: Mapping[str, frozenset[str]]


def load_token_file(path: str | Path) -> frozenset[str]:
    """Read one lowercase token per line; blank lines and # comments skipped."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise LexiconError(f"cannot read lexicon {path}: {exc}") from exc
    tokens = set()
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            tokens.add(line.lower())
    return frozenset(tokens)


def load_type_lexicon(path: str | Path) -> dict[str, frozenset[str]]:
    """Read a JSON object mapping words to lists of widget-type codes."""
    from .vision import WidgetType  # deferred: vision imports nlp

    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise LexiconError(f"cannot read type lexicon {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise LexiconError(f"type lexicon {path} must be a JSON object")
    valid = {t.name for t in WidgetType}
    table: dict[str, frozenset[str]] = {}
    for word, codes in raw.items():
        if not isinstance(codes, list) or not codes:
            raise LexiconError(f"type lexicon {path}: {word!r} needs a list of codes")
        for code in codes:
            if code not in valid:
                raise LexiconError(f"type lexicon {path}: unknown widget type {code!r}")
        table[word.lower()] = frozenset(codes)
    return table


def _data_path(name: str) -> Path:
    return Path(str(resources.files("reportprior") / "data" / name))


def default_lexicons(
    stopwords: str | Path | None = None,
    actions: str | Path | None = None,
    bug_cues: str | Path | None = None,
    type_lexicon: str | Path | None = None,
) -> Lexicons:
    """Bundled lexicons, with any subset overridden by explicit paths."""
    return Lexicons(
        stopwords=load_token_file(stopwords or _data_path("stopwords.txt")),
        actions=load_token_file(actions or _data_path("actions.txt")),
        bug_cues=load_token_file(bug_cues or _data_path("bug_cues.txt")),
        type_lexicon=load_type_lexicon(type_lexicon or _data_path("type_lexicon.json")),
    )
