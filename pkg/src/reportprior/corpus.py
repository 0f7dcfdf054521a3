"""Load and validate report corpora, labels, and corpus statistics.

On-disk layout:
    manifest.json                     {"app_id": ..., "reports": [...], "format_version": 1}
    reports/<id>/report.json          {"id", "text", "screenshot", "annotations"?}
    reports/<id>/screenshot.png       8-bit RGB or RGBA (alpha dropped)
    reports/<id>/nlp.json             optional sidecar with pre-classified sentences
    labels.json                       {"<report_id>": "<bug_category>", ...}

Unknown JSON keys are ignored everywhere. All loads are deterministic.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .config import EMBEDDING_DIM, NULL_REPORT_ID
from .errors import (
    EmptyLabels,
    MalformedLabels,
    MalformedReport,
    MissingManifest,
    UnknownReportId,
    UnreadableImage,
)

LabelMap = dict[str, str]


@dataclass(frozen=True)
class WidgetAnnotation:
    """Ground-truth widget box with optional OCR text and type code."""

    bbox: tuple[int, int, int, int]
    text: str | None = None
    widget_type: str | None = None


@dataclass(frozen=True)
class NlpSidecar:
    """Optional per-report override of the built-in text pipeline."""

    bug_sentences: tuple[str, ...]
    step_sentences: tuple[str, ...]
    embedding: np.ndarray | None = None


@dataclass(frozen=True)
class Report:
    id: str
    app_id: str
    text: str
    screenshot: np.ndarray
    annotations: tuple[WidgetAnnotation, ...] | None = None
    nlp_sidecar: NlpSidecar | None = None


@dataclass(frozen=True)
class Corpus:
    app_id: str
    reports: tuple[Report, ...]
    root: Path

    def __len__(self) -> int:
        return len(self.reports)

    def report_ids(self) -> tuple[str, ...]:
        return tuple(r.id for r in self.reports)

    def get(self, report_id: str) -> Report:
        for r in self.reports:
            if r.id == report_id:
                return r
        raise KeyError(report_id)


@dataclass(frozen=True)
class CorpusStats:
    report_count: int
    bug_category_count: int | None
    mean_widget_crop_size: tuple[int, int]


def _read_json(path: Path, report_id: str) -> object:
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise MalformedReport(report_id, f"cannot read {path.name}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise MalformedReport(report_id, f"invalid JSON in {path.name}: {exc}") from exc


def _load_screenshot(path: Path, report_id: str) -> np.ndarray:
    try:
        with Image.open(path) as img:
            if img.format != "PNG":
                raise UnreadableImage(report_id, f"screenshot is {img.format}, not PNG")
            if img.mode not in ("RGB", "RGBA"):
                raise UnreadableImage(report_id, f"unsupported PNG mode {img.mode}")
            arr = np.asarray(img.convert("RGB"), dtype=np.uint8)
    except FileNotFoundError as exc:
        raise UnreadableImage(report_id, "screenshot.png missing") from exc
    except UnidentifiedImageError as exc:
        raise UnreadableImage(report_id) from exc
    except OSError as exc:
        raise UnreadableImage(report_id, str(exc)) from exc
    if arr.ndim != 3 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise UnreadableImage(report_id, "empty image")
    return arr


def _parse_annotations(raw: object, report_id: str, shape: tuple[int, ...]) -> tuple[WidgetAnnotation, ...]:
    from .vision import WidgetType  # local import: vision depends on corpus types

    if not isinstance(raw, list):
        raise MalformedReport(report_id, "annotations must be a list")
    height, width = shape[0], shape[1]
    valid_types = {t.name for t in WidgetType}
    parsed = []
    for entry in raw:
        if not isinstance(entry, dict) or "bbox" not in entry:
            raise MalformedReport(report_id, "annotation missing bbox")
        bbox = entry["bbox"]
        if not (isinstance(bbox, list) and len(bbox) == 4 and all(isinstance(v, int) for v in bbox)):
            raise MalformedReport(report_id, "bbox must be [x, y, w, h] integers")
        x, y, w, h = bbox
        if w < 1 or h < 1 or x < 0 or y < 0 or x + w > width or y + h > height:
            raise MalformedReport(report_id, "bbox out of bounds")
        text = entry.get("text")
        if text is not None and not isinstance(text, str):
            raise MalformedReport(report_id, "annotation text must be a string")
        wtype = entry.get("type")
        if wtype is not None and wtype not in valid_types:
            raise MalformedReport(report_id, f"unknown widget type {wtype!r}")
        parsed.append(WidgetAnnotation(bbox=(x, y, w, h), text=text, widget_type=wtype))
    return tuple(parsed)


def _parse_sidecar(path: Path, report_id: str) -> NlpSidecar | None:
    if not path.is_file():
        return None
    raw = _read_json(path, report_id)
    if not isinstance(raw, dict):
        raise MalformedReport(report_id, "nlp.json must be an object")
    bug = raw.get("bug_sentences", [])
    step = raw.get("step_sentences", [])
    if not (isinstance(bug, list) and isinstance(step, list)):
        raise MalformedReport(report_id, "nlp.json sentence lists malformed")
    embedding = None
    if raw.get("embedding") is not None:
        vec = raw["embedding"]
        if not (isinstance(vec, list) and len(vec) == EMBEDDING_DIM):
            raise MalformedReport(report_id, f"sidecar embedding must have length {EMBEDDING_DIM}")
        embedding = np.asarray(vec, dtype=np.float64)
    return NlpSidecar(
        bug_sentences=tuple(str(s) for s in bug),
        step_sentences=tuple(str(s) for s in step),
        embedding=embedding,
    )


def load_corpus(path: str | Path) -> Corpus:
    """Load every report listed in the manifest, in manifest order."""
    root = Path(path)
    manifest_path = root / "manifest.json"
    if not manifest_path.is_file():
        raise MissingManifest(str(manifest_path))
    manifest = _read_json(manifest_path, "")
    if not isinstance(manifest, dict):
        raise MalformedReport("", "manifest must be a JSON object")
    if manifest.get("format_version") != 1:
        raise MalformedReport("", f"unsupported format_version {manifest.get('format_version')!r}")
    app_id = manifest.get("app_id")
    if not isinstance(app_id, str) or not app_id:
        raise MalformedReport("", "manifest app_id missing")
    ids = manifest.get("reports")
    if not isinstance(ids, list) or not ids:
        raise MalformedReport("", "no reports")

    seen: set[str] = set()
    reports = []
    for report_id in ids:
        if not isinstance(report_id, str) or not report_id:
            raise MalformedReport("", "empty report id in manifest")
        if report_id == NULL_REPORT_ID:
            raise MalformedReport(report_id, f"reserved id {NULL_REPORT_ID} not allowed")
        if report_id in seen:
            raise MalformedReport(report_id, "duplicate report id")
        seen.add(report_id)

        report_dir = root / "reports" / report_id
        doc = _read_json(report_dir / "report.json", report_id)
        if not isinstance(doc, dict):
            raise MalformedReport(report_id, "report.json must be an object")
        if doc.get("id") != report_id:
            raise MalformedReport(report_id, f"report.json id {doc.get('id')!r} mismatches manifest")
        text = doc.get("text")
        if not isinstance(text, str):
            raise MalformedReport(report_id, "text must be a string")
        screenshot_name = doc.get("screenshot", "screenshot.png")
        if not isinstance(screenshot_name, str):
            raise MalformedReport(report_id, "screenshot must be a file name")
        screenshot = _load_screenshot(report_dir / screenshot_name, report_id)

        annotations = None
        if doc.get("annotations") is not None:
            annotations = _parse_annotations(doc["annotations"], report_id, screenshot.shape)

        reports.append(
            Report(
                id=report_id,
                app_id=app_id,
                text=text,
                screenshot=screenshot,
                annotations=annotations,
                nlp_sidecar=_parse_sidecar(report_dir / "nlp.json", report_id),
            )
        )
    return Corpus(app_id=app_id, reports=tuple(reports), root=root)


def load_labels(path: str | Path, corpus: Corpus | None = None) -> LabelMap:
    """Load id -> bug-category labels; with a corpus, unknown ids are an error."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise MalformedLabels(f"cannot read labels: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise MalformedLabels(f"invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise MalformedLabels("labels must be a JSON object")
    if not raw:
        raise MalformedLabels("empty mapping")
    labels: LabelMap = {}
    for key, value in raw.items():
        if not isinstance(value, str) or not value:
            raise MalformedLabels(f"label for {key!r} must be a non-empty string")
        labels[key] = value
    if corpus is not None:
        known = set(corpus.report_ids())
        for key in labels:
            if key not in known:
                raise UnknownReportId(key)
    return labels


def category_count(labels: LabelMap) -> int:
    count = len(set(labels.values()))
    if count < 1:
        raise EmptyLabels()
    return count


def corpus_stats(corpus: Corpus, labels: LabelMap | None = None) -> CorpusStats:
    """Report count, category count, and mean widget-crop size.

    Widget sizes come from annotations when present, else from the built-in
    detector. Reports with zero widgets contribute nothing; an entirely
    widget-free corpus falls back to (1, 1).
    """
    from .vision import extract_widgets  # local import avoids a module cycle

    widths: list[int] = []
    heights: list[int] = []
    for report in corpus.reports:
        for widget in extract_widgets(report):
            widths.append(widget.bbox[2])
            heights.append(widget.bbox[3])
    if widths:
        mean_w = max(1, math.floor(sum(widths) / len(widths) + 0.5))
        mean_h = max(1, math.floor(sum(heights) / len(heights) + 0.5))
    else:
        mean_w, mean_h = 1, 1
    return CorpusStats(
        report_count=len(corpus.reports),
        bug_category_count=category_count(labels) if labels is not None else None,
        mean_widget_crop_size=(mean_w, mean_h),
    )
