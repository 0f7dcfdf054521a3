"""Per-report feature bundles: problem-widget keypoints, description
embedding, context-widget histogram, and action-object sequence.

The NULL report's bundle is all-empty/all-zero and carries the reserved
id "<NULL>"; it seeds the prioritization pool.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import DESCRIPTOR_DIM, EMBEDDING_DIM, HISTOGRAM_DIM, NULL_REPORT_ID
from .corpus import CorpusStats, Report
from .errors import MalformedFeatures
from .lexicons import Lexicons
from .nlp import (
    ActionObjectPair,
    ActionObjectSequence,
    SentenceModel,
    classify_report_text,
    embed_text,
    extract_action_object_sequence,
    extract_problem_phrase,
    tokenize,
)
from .vision import (
    KeypointSet,
    WidgetTypeModel,
    classify_all,
    extract_keypoints,
    extract_widgets,
    locate_problem_widget,
    widget_type_histogram,
)


@dataclass(frozen=True)
class ReportFeature:
    report_id: str
    problem_keypoints: KeypointSet
    description_embedding: np.ndarray   # (100,)
    context_histogram: np.ndarray       # (14,) int
    action_sequence: ActionObjectSequence

    @property
    def is_null(self) -> bool:
        return self.report_id == NULL_REPORT_ID


def build_report_feature(
    report: Report,
    widget_model: WidgetTypeModel,
    sentence_model: SentenceModel,
    lexicons: Lexicons,
) -> ReportFeature:
    """Run the full extraction pipeline for one report.

    A report whose screenshot yields no widgets stays usable: empty
    keypoints and a zero histogram.
    """
    sidecar = report.nlp_sidecar
    if sidecar is not None:
        bug_sentences = list(sidecar.bug_sentences)
        step_sentences = list(sidecar.step_sentences)
    else:
        bug_sentences, step_sentences = classify_report_text(
            report.text, sentence_model, lexicons.stopwords
        )

    problem_phrase = extract_problem_phrase(bug_sentences, lexicons)

    widgets = classify_all(extract_widgets(report), widget_model)
    if widgets:
        problem, context = locate_problem_widget(widgets, problem_phrase, lexicons.type_lexicon)
        keypoints = extract_keypoints(problem.crop)
        histogram = widget_type_histogram(context, widget_model)
    else:
        keypoints = KeypointSet.empty()
        histogram = np.zeros(HISTOGRAM_DIM, dtype=np.int64)

    if sidecar is not None and sidecar.embedding is not None:
        embedding = sidecar.embedding.copy()
    else:
        bug_tokens = [t for s in bug_sentences for t in tokenize(s, lexicons.stopwords)]
        embedding = embed_text(bug_tokens)

    sequence = extract_action_object_sequence(step_sentences, lexicons)
    return ReportFeature(
        report_id=report.id,
        problem_keypoints=keypoints,
        description_embedding=embedding,
        context_histogram=histogram,
        action_sequence=sequence,
    )


def null_report_feature(stats: CorpusStats) -> ReportFeature:
    """All-empty bundle for the reserved NULL report.

    The all-black problem image is actually rendered at the corpus mean
    widget-crop size and run through the extractor, which provably yields
    an empty keypoint set.
    """
    width, height = stats.mean_widget_crop_size
    black = np.zeros((height, width, 3), dtype=np.uint8)
    return ReportFeature(
        report_id=NULL_REPORT_ID,
        problem_keypoints=extract_keypoints(black),
        description_embedding=np.zeros(EMBEDDING_DIM, dtype=np.float64),
        context_histogram=np.zeros(HISTOGRAM_DIM, dtype=np.int64),
        action_sequence=(),
    )


def _feature_to_doc(feature: ReportFeature) -> dict:
    keypoints = [
        [int(x), int(y), [float(v) for v in desc]]
        for (x, y), desc in zip(feature.problem_keypoints.locations, feature.problem_keypoints.descriptors)
    ]
    sequence = []
    for pair in feature.action_sequence:
        entry: dict = {"action": pair.action, "object": list(pair.objects)}
        if pair.supplement is not None:
            entry["supplement"] = pair.supplement
        sequence.append(entry)
    return {
        "report_id": feature.report_id,
        "keypoints": keypoints,
        "embedding": [float(v) for v in feature.description_embedding],
        "histogram": [int(v) for v in feature.context_histogram],
        "sequence": sequence,
    }


def save_features(features: list[ReportFeature], path: str | Path) -> None:
    doc = {"version": 1, "features": [_feature_to_doc(f) for f in features]}
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _doc_to_feature(entry: dict) -> ReportFeature:
    report_id = entry.get("report_id")
    if not isinstance(report_id, str) or not report_id:
        raise MalformedFeatures("feature entry missing report_id")
    raw_kp = entry.get("keypoints", [])
    locations = []
    descriptors = []
    for kp in raw_kp:
        if not (isinstance(kp, list) and len(kp) == 3 and isinstance(kp[2], list)):
            raise MalformedFeatures(f"{report_id}: keypoint rows must be [x, y, descriptor]")
        if len(kp[2]) != DESCRIPTOR_DIM:
            raise MalformedFeatures(f"{report_id}: descriptor must have length {DESCRIPTOR_DIM}")
        locations.append((int(kp[0]), int(kp[1])))
        descriptors.append([float(v) for v in kp[2]])
    if locations:
        keypoints = KeypointSet(
            locations=np.asarray(locations, dtype=np.int64),
            descriptors=np.asarray(descriptors, dtype=np.float64),
        )
    else:
        keypoints = KeypointSet.empty()
    embedding = entry.get("embedding")
    if not (isinstance(embedding, list) and len(embedding) == EMBEDDING_DIM):
        raise MalformedFeatures(f"{report_id}: embedding must have length {EMBEDDING_DIM}")
    histogram = entry.get("histogram")
    if not (isinstance(histogram, list) and len(histogram) == HISTOGRAM_DIM):
        raise MalformedFeatures(f"{report_id}: histogram must have length {HISTOGRAM_DIM}")
    sequence = []
    for item in entry.get("sequence", []):
        if not isinstance(item, dict) or not item.get("action"):
            raise MalformedFeatures(f"{report_id}: sequence entries need an action")
        sequence.append(
            ActionObjectPair(
                action=str(item["action"]),
                objects=tuple(str(o) for o in item.get("object", [])),
                supplement=item.get("supplement"),
            )
        )
    return ReportFeature(
        report_id=report_id,
        problem_keypoints=keypoints,
        description_embedding=np.asarray(embedding, dtype=np.float64),
        context_histogram=np.asarray(histogram, dtype=np.int64),
        action_sequence=tuple(sequence),
    )


def load_features(path: str | Path) -> list[ReportFeature]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedFeatures(f"cannot read features {path}: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("version") != 1:
        raise MalformedFeatures(f"features {path} must be a version-1 document")
    entries = doc.get("features")
    if not isinstance(entries, list):
        raise MalformedFeatures(f"features {path} missing 'features' list")
    return [_doc_to_feature(e) for e in entries]
