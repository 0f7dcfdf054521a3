"""Sentence segmentation, tokenization, sentence classification, text
embedding, and action-object sequence extraction.

The sentence classifier is multinomial naive Bayes with add-one smoothing;
the embedder is signed feature hashing into 100 buckets. Both are
deterministic and replaceable via per-report sidecar files.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .config import EMBEDDING_DIM
from .errors import EmptyClass, MalformedModel
from .lexicons import TYPING_ACTIONS, Lexicons


class SentenceClass(Enum):
    BUG_DESCRIPTION = "bug_description"
    REPRODUCTION_STEP = "reproduction_step"


class EmptySentence(ValueError):
    """Sentence tokenized to nothing; cannot be classified."""


@dataclass(frozen=True)
class SentenceModel:
    priors: dict[str, float]
    log_probs: dict[str, dict[str, float]]
    vocab: tuple[str, ...]
    version: int = 1


@dataclass(frozen=True)
class ActionObjectPair:
    action: str
    objects: tuple[str, ...] = ()
    supplement: str | None = None


ActionObjectSequence = tuple[ActionObjectPair, ...]

_SENTENCE_DELIMITERS = re.compile(r"[.!?;\n。！？；]")
_QUOTED = re.compile(r'"([^"]*)"|“([^”]*)”')

# CJK ideographs become single-character tokens (the tokenizer is
# script-agnostic; there is no word segmentation).
_CJK_RANGES = (
    (0x4E00, 0x9FFF),
    (0x3400, 0x4DBF),
    (0xF900, 0xFAFF),
)


def _is_cjk(ch: str) -> bool:
    code = ord(ch)
    return any(lo <= code <= hi for lo, hi in _CJK_RANGES)


def split_sentences(text: str) -> list[str]:
    """Split on sentence punctuation (ASCII and fullwidth), drop empties."""
    parts = _SENTENCE_DELIMITERS.split(text)
    return [p.strip() for p in parts if p.strip()]


def tokenize(sentence: str, stopwords: frozenset[str]) -> list[str]:
    """Lowercase, split on anything non-alphanumeric, drop stopwords."""
    tokens: list[str] = []
    current: list[str] = []
    for ch in sentence.lower():
        if _is_cjk(ch):
            if current:
                tokens.append("".join(current))
                current = []
            tokens.append(ch)
        elif ch.isalnum():
            current.append(ch)
        elif current:
            tokens.append("".join(current))
            current = []
    if current:
        tokens.append("".join(current))
    return [t for t in tokens if t not in stopwords]


def train_sentence_classifier(
    samples: list[tuple[str, SentenceClass]],
    stopwords: frozenset[str],
) -> SentenceModel:
    """Multinomial naive Bayes with add-one smoothing over token counts."""
    class_names = [c.value for c in SentenceClass]
    counts: dict[str, dict[str, int]] = {name: {} for name in class_names}
    sample_counts = {name: 0 for name in class_names}
    for sentence, label in samples:
        name = label.value
        sample_counts[name] += 1
        for token in tokenize(sentence, stopwords):
            counts[name][token] = counts[name].get(token, 0) + 1
    for name in class_names:
        if sample_counts[name] == 0:
            raise EmptyClass(name)
    vocab = tuple(sorted(set().union(*[set(c) for c in counts.values()])))
    total_samples = sum(sample_counts.values())
    priors = {name: sample_counts[name] / total_samples for name in class_names}
    log_probs: dict[str, dict[str, float]] = {}
    for name in class_names:
        total_tokens = sum(counts[name].values())
        denom = total_tokens + len(vocab)
        log_probs[name] = {
            token: math.log((counts[name].get(token, 0) + 1) / denom) for token in vocab
        }
    return SentenceModel(priors=priors, log_probs=log_probs, vocab=vocab)


def classify_sentence(
    sentence: str,
    model: SentenceModel,
    stopwords: frozenset[str],
) -> SentenceClass:
    """Argmax log-posterior; unseen tokens are skipped; tie favors bug."""
    tokens = tokenize(sentence, stopwords)
    if not tokens:
        raise EmptySentence(sentence)
    scores = {}
    for name in (SentenceClass.BUG_DESCRIPTION.value, SentenceClass.REPRODUCTION_STEP.value):
        score = math.log(model.priors[name])
        table = model.log_probs[name]
        for token in tokens:
            if token in table:
                score += table[token]
        scores[name] = score
    if scores[SentenceClass.BUG_DESCRIPTION.value] >= scores[SentenceClass.REPRODUCTION_STEP.value]:
        return SentenceClass.BUG_DESCRIPTION
    return SentenceClass.REPRODUCTION_STEP


def classify_report_text(
    report_text: str,
    model: SentenceModel,
    stopwords: frozenset[str],
) -> tuple[list[str], list[str]]:
    """Partition sentences into (bug descriptions, reproduction steps)."""
    bug: list[str] = []
    step: list[str] = []
    for sentence in split_sentences(report_text):
        try:
            label = classify_sentence(sentence, model, stopwords)
        except EmptySentence:
            continue
        (bug if label is SentenceClass.BUG_DESCRIPTION else step).append(sentence)
    return bug, step


def _hash_token(token: str) -> int:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def embed_text(tokens: list[str]) -> np.ndarray:
    """Signed feature hashing into 100 buckets, L2-normalized."""
    vec = np.zeros(EMBEDDING_DIM, dtype=np.float64)
    for token in tokens:
        h = _hash_token(token)
        sign = 1.0 if (h >> 63) & 1 == 0 else -1.0
        vec[h % EMBEDDING_DIM] += sign
    norm = np.linalg.norm(vec)
    if norm > 0.0:
        vec /= norm
    return vec


def extract_problem_phrase(bug_sentences: list[str], lexicons: Lexicons) -> list[str]:
    """Tokens of the bug sentences minus action verbs and bug-cue words."""
    drop = lexicons.actions | lexicons.bug_cues
    phrase: list[str] = []
    for sentence in bug_sentences:
        phrase.extend(t for t in tokenize(sentence, lexicons.stopwords) if t not in drop)
    return phrase


def extract_action_object_sequence(
    step_sentences: list[str],
    lexicons: Lexicons,
) -> ActionObjectSequence:
    """Scan each sentence for action verbs; following tokens are objects.

    Quoted strings are removed from the token stream first and handed out,
    in order, as supplements of the typing actions (type/input/enter).
    """
    pairs: list[ActionObjectPair] = []
    for sentence in step_sentences:
        quoted = [m.group(1) if m.group(1) is not None else m.group(2) for m in _QUOTED.finditer(sentence)]
        stripped = _QUOTED.sub(" ", sentence)
        tokens = tokenize(stripped, lexicons.stopwords)
        sentence_pairs: list[list] = []  # [action, [objects]]
        for token in tokens:
            if token in lexicons.actions:
                sentence_pairs.append([token, []])
            elif sentence_pairs:
                sentence_pairs[-1][1].append(token)
        supplements = iter(quoted)
        for action, objects in sentence_pairs:
            supplement = None
            if action in TYPING_ACTIONS:
                supplement = next(supplements, None)
            pairs.append(
                ActionObjectPair(action=action, objects=tuple(objects), supplement=supplement)
            )
    return tuple(pairs)


def save_sentence_model(model: SentenceModel, path: str | Path) -> None:
    doc = {
        "version": model.version,
        "priors": model.priors,
        "log_probs": model.log_probs,
        "vocab": list(model.vocab),
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_sentence_model(path: str | Path) -> SentenceModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedModel(f"cannot read sentence model {path}: {exc}") from exc
    try:
        if doc["version"] != 1:
            raise MalformedModel(f"unsupported sentence model version {doc['version']!r}")
        priors = {str(k): float(v) for k, v in doc["priors"].items()}
        log_probs = {
            str(k): {str(t): float(p) for t, p in table.items()}
            for k, table in doc["log_probs"].items()
        }
        vocab = tuple(str(t) for t in doc["vocab"])
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise MalformedModel(f"malformed sentence model {path}: {exc}") from exc
    expected = {c.value for c in SentenceClass}
    if set(priors) != expected or set(log_probs) != expected:
        raise MalformedModel(f"sentence model {path} must cover both classes")
    if abs(sum(priors.values()) - 1.0) > 1e-9:
        raise MalformedModel(f"sentence model {path} priors must sum to 1")
    return SentenceModel(priors=priors, log_probs=log_probs, vocab=vocab)


def load_training_sentences(path: str | Path) -> list[tuple[str, SentenceClass]]:
    """Read labeled sentences from a JSON fixture.

    Accepts either a flat list of [sentence, class] pairs or an object
    with "train"/"heldout" arrays (the bundled shape); only "train" is
    used for fitting.
    """
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedModel(f"cannot read sentence data {path}: {exc}") from exc
    rows = doc.get("train") if isinstance(doc, dict) else doc
    if not isinstance(rows, list):
        raise MalformedModel(f"sentence data {path} must be a list or contain 'train'")
    out = []
    for row in rows:
        if not (isinstance(row, list) and len(row) == 2):
            raise MalformedModel(f"sentence data {path}: rows must be [sentence, class]")
        try:
            out.append((str(row[0]), SentenceClass(row[1])))
        except ValueError as exc:
            raise MalformedModel(f"sentence data {path}: unknown class {row[1]!r}") from exc
    return out
