"""Widget extraction, type classification, problem-widget location, and
keypoint descriptors for widget crops.

The widget-type classifier is a nearest-centroid model over 8 cheap image
statistics; annotated types always pass through untouched. Keypoints come
from a Harris-corner reference detector with a 4x4-grid gradient descriptor.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import IntEnum
from pathlib import Path

import numpy as np
from scipy import ndimage

from .config import (
    DESCRIPTOR_DIM,
    DESCRIPTOR_GRID,
    DESCRIPTOR_PATCH,
    DETECTOR_MAX_AREA_FRAC,
    DETECTOR_MIN_AREA_FRAC,
    HARRIS_K,
    HARRIS_SIGMA,
    MAX_KEYPOINTS,
    NMS_RADIUS,
    RESPONSE_FLOOR_FRAC,
    TEXT_MATCH_THRESHOLD,
)
from .corpus import Report
from .errors import EmptyClass, MalformedModel


class WidgetType(IntEnum):
    """The 14 widget type codes, ordinals fixed by declaration order."""

    BTN = 0   # push button
    CHB = 1   # checkbox
    CTV = 2   # checked text view
    EDT = 3   # edit text
    IMB = 4   # image button
    IMV = 5   # image view
    PBH = 6   # progress bar, horizontal
    PBV = 7   # progress bar, vertical
    RBU = 8   # radio button
    RBA = 9   # rating bar
    SKB = 10  # seek bar
    SWC = 11  # switch
    SPN = 12  # spinner
    TXV = 13  # text view


@dataclass(frozen=True)
class Widget:
    bbox: tuple[int, int, int, int]
    crop: np.ndarray
    text: str | None = None
    widget_type: WidgetType | None = None
    type_confidence: float | None = None

    @property
    def area(self) -> int:
        return self.bbox[2] * self.bbox[3]


@dataclass(frozen=True)
class KeypointSet:
    """Corner locations plus unit-norm descriptors, row-aligned."""

    locations: np.ndarray   # (N, 2) int: x, y
    descriptors: np.ndarray  # (N, 32) float

    def __len__(self) -> int:
        return int(self.locations.shape[0])

    @classmethod
    def empty(cls) -> "KeypointSet":
        return cls(
            locations=np.zeros((0, 2), dtype=np.int64),
            descriptors=np.zeros((0, DESCRIPTOR_DIM), dtype=np.float64),
        )


@dataclass(frozen=True)
class WidgetTypeModel:
    classes: tuple[WidgetType, ...]
    centroids: np.ndarray      # (C, 8) normalized feature space
    feature_min: np.ndarray    # (8,)
    feature_max: np.ndarray    # (8,)
    version: int = 1


def grayscale(image: np.ndarray) -> np.ndarray:
    """Luma conversion with the 0.299/0.587/0.114 weights, float64 output."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim == 2:
        return img
    return img[..., 0] * 0.299 + img[..., 1] * 0.587 + img[..., 2] * 0.114


def _gradients(gray: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    gx = ndimage.sobel(gray, axis=1, mode="reflect")
    gy = ndimage.sobel(gray, axis=0, mode="reflect")
    return gx, gy


def gradient_magnitude(gray: np.ndarray) -> np.ndarray:
    gx, gy = _gradients(gray)
    return np.hypot(gx, gy)


def otsu_threshold(values: np.ndarray) -> float:
    """Otsu's between-class-variance threshold over a 256-bin histogram.

    Returns a value in the input's range; inputs strictly above it are
    foreground. A constant input returns that constant (empty foreground).
    """
    flat = np.asarray(values, dtype=np.float64).ravel()
    vmin = float(flat.min())
    vmax = float(flat.max())
    if vmax <= vmin:
        return vmax
    hist, edges = np.histogram(flat, bins=256, range=(vmin, vmax))
    total = flat.size
    prob = hist.astype(np.float64) / total
    mids = (edges[:-1] + edges[1:]) / 2.0
    weight_bg = np.cumsum(prob)
    mean_bg_sum = np.cumsum(prob * mids)
    mean_total = mean_bg_sum[-1]
    weight_fg = 1.0 - weight_bg
    # between-class variance for a cut after each bin
    with np.errstate(divide="ignore", invalid="ignore"):
        mean_bg = mean_bg_sum / weight_bg
        mean_fg = (mean_total - mean_bg_sum) / weight_fg
        between = weight_bg * weight_fg * (mean_bg - mean_fg) ** 2
    between = np.nan_to_num(between, nan=-1.0)
    best = int(np.argmax(between))
    return float(edges[best + 1])


def extract_widgets(report: Report) -> list[Widget]:
    """Annotation pass-through, or the edge/connected-component detector.

    An annotations list (even an empty one) is authoritative; only reports
    without annotations run the detector. Detected boxes keep between 0.05%
    and 90% of the screenshot area and come back sorted by (y, x).
    """
    image = report.screenshot
    if report.annotations is not None:
        widgets = []
        for ann in report.annotations:
            x, y, w, h = ann.bbox
            crop = image[y : y + h, x : x + w]
            wtype = WidgetType[ann.widget_type] if ann.widget_type is not None else None
            widgets.append(Widget(bbox=ann.bbox, crop=crop, text=ann.text, widget_type=wtype))
        return widgets

    gray = grayscale(image)
    magnitude = gradient_magnitude(gray)
    mask = magnitude > otsu_threshold(magnitude)
    labeled, count = ndimage.label(mask, structure=np.ones((3, 3), dtype=np.int32))
    if count == 0:
        return []
    total_area = image.shape[0] * image.shape[1]
    boxes = []
    for sl in ndimage.find_objects(labeled):
        if sl is None:
            continue
        y, x = sl[0].start, sl[1].start
        h = sl[0].stop - sl[0].start
        w = sl[1].stop - sl[1].start
        area = w * h
        if area < DETECTOR_MIN_AREA_FRAC * total_area or area > DETECTOR_MAX_AREA_FRAC * total_area:
            continue
        boxes.append((y, x, w, h))
    boxes.sort()
    return [
        Widget(bbox=(x, y, w, h), crop=image[y : y + h, x : x + w])
        for (y, x, w, h) in boxes
    ]


def widget_features(crop: np.ndarray, text_present: bool) -> np.ndarray:
    """8 statistics: aspect, log-area, RGB means, gray std, edge fraction, text flag."""
    h, w = crop.shape[0], crop.shape[1]
    rgb = np.asarray(crop, dtype=np.float64)
    if rgb.ndim == 2:
        rgb = np.stack([rgb, rgb, rgb], axis=-1)
    gray = grayscale(rgb)
    magnitude = gradient_magnitude(gray)
    edge_fraction = float(np.mean(magnitude > otsu_threshold(magnitude)))
    return np.array(
        [
            w / h,
            np.log(w * h),
            float(rgb[..., 0].mean()) / 255.0,
            float(rgb[..., 1].mean()) / 255.0,
            float(rgb[..., 2].mean()) / 255.0,
            float(gray.std()) / 255.0,
            edge_fraction,
            1.0 if text_present else 0.0,
        ],
        dtype=np.float64,
    )


def train_widget_classifier(
    samples: list[tuple[np.ndarray, bool, WidgetType]],
    classes: tuple[WidgetType, ...] | None = None,
) -> WidgetTypeModel:
    """Fit per-dimension min-max scaling, then one centroid per class.

    `classes` defaults to all 14 types; every declared class needs at
    least one sample.
    """
    declared = tuple(sorted(classes or tuple(WidgetType), key=int))
    by_class: dict[WidgetType, list[np.ndarray]] = {c: [] for c in declared}
    vectors = []
    for crop, text_present, wtype in samples:
        vec = widget_features(crop, text_present)
        vectors.append(vec)
        if wtype in by_class:
            by_class[wtype].append(vec)
    for wtype in declared:
        if not by_class[wtype]:
            raise EmptyClass(wtype.name)
    matrix = np.vstack(vectors)
    fmin = matrix.min(axis=0)
    fmax = matrix.max(axis=0)
    centroids = np.vstack(
        [np.mean([_normalize_features(v, fmin, fmax) for v in by_class[c]], axis=0) for c in declared]
    )
    return WidgetTypeModel(classes=declared, centroids=centroids, feature_min=fmin, feature_max=fmax)


def _normalize_features(vec: np.ndarray, fmin: np.ndarray, fmax: np.ndarray) -> np.ndarray:
    span = fmax - fmin
    out = np.zeros_like(vec)
    nonzero = span > 0
    out[nonzero] = (vec[nonzero] - fmin[nonzero]) / span[nonzero]
    return out


def classify_widget_type(widget: Widget, model: WidgetTypeModel) -> tuple[WidgetType, float]:
    """Annotated type with confidence 1, else nearest centroid (tie: lowest ordinal)."""
    if widget.widget_type is not None:
        return widget.widget_type, 1.0
    text_present = widget.text is not None and widget.text.strip() != ""
    vec = _normalize_features(widget_features(widget.crop, text_present), model.feature_min, model.feature_max)
    distances = np.linalg.norm(model.centroids - vec, axis=1)
    best = int(np.argmin(distances))  # classes sorted by ordinal, argmin takes first
    return model.classes[best], 1.0 / (1.0 + float(distances[best]))


def locate_problem_widget(
    widgets: list[Widget],
    problem_phrase: list[str],
    type_lexicon: dict[str, frozenset[str]] | None = None,
) -> tuple[Widget, list[Widget]]:
    """Pick the widget the bug description points at; the rest is context.

    Strategy 1: token overlap between widget text and the problem phrase
    (score >= 0.5 accepts). Strategy 2: phrase words mapped to widget types
    via the type lexicon, first extraction-order hit wins. Fallback:
    largest bbox area.
    """
    from .nlp import tokenize  # local import: nlp has no vision dependency

    if not widgets:
        raise ValueError("locate_problem_widget needs at least one widget")

    chosen = None
    if problem_phrase:
        phrase_set = set(problem_phrase)
        best_score = 0.0
        for widget in widgets:
            if widget.text is None or not widget.text.strip():
                continue
            overlap = set(tokenize(widget.text, frozenset())) & phrase_set
            score = len(overlap) / len(problem_phrase)
            if score > best_score:
                best_score = score
                chosen = widget
        if best_score < TEXT_MATCH_THRESHOLD:
            chosen = None

    if chosen is None and problem_phrase and type_lexicon:
        mapped: set[str] = set()
        for token in problem_phrase:
            mapped |= type_lexicon.get(token, frozenset())
        if mapped:
            for widget in widgets:
                if widget.widget_type is not None and widget.widget_type.name in mapped:
                    chosen = widget
                    break

    if chosen is None:
        chosen = max(widgets, key=lambda w: w.area)  # first max wins on ties

    context = [w for w in widgets if w is not chosen]
    return chosen, context


def extract_keypoints(crop: np.ndarray) -> KeypointSet:
    """Harris corners with NMS, grid gradient descriptors, strongest first."""
    gray = grayscale(np.asarray(crop, dtype=np.float64))
    if gray.size == 0:
        return KeypointSet.empty()
    gx, gy = _gradients(gray)
    ixx = ndimage.gaussian_filter(gx * gx, sigma=HARRIS_SIGMA)
    iyy = ndimage.gaussian_filter(gy * gy, sigma=HARRIS_SIGMA)
    ixy = ndimage.gaussian_filter(gx * gy, sigma=HARRIS_SIGMA)
    response = ixx * iyy - ixy * ixy - HARRIS_K * (ixx + iyy) ** 2
    max_response = float(response.max())
    if max_response <= 0.0:
        return KeypointSet.empty()

    size = 2 * NMS_RADIUS + 1
    local_max = response == ndimage.maximum_filter(response, size=size, mode="constant", cval=-np.inf)
    keep = local_max & (response > RESPONSE_FLOOR_FRAC * max_response)
    ys, xs = np.nonzero(keep)
    if ys.size == 0:
        return KeypointSet.empty()
    strengths = response[ys, xs]
    # strongest first; ties resolved by (y, x) for determinism
    order = np.lexsort((xs, ys, -strengths))[:MAX_KEYPOINTS]
    ys, xs = ys[order], xs[order]

    magnitude = np.hypot(gx, gy)
    height, width = gray.shape
    half = DESCRIPTOR_PATCH // 2
    cell = DESCRIPTOR_PATCH // DESCRIPTOR_GRID
    locations = []
    descriptors = []
    for x, y in zip(xs, ys):
        rows = np.clip(np.arange(y - half, y + half), 0, height - 1)
        cols = np.clip(np.arange(x - half, x + half), 0, width - 1)
        patch_mag = magnitude[np.ix_(rows, cols)]
        patch_gx = gx[np.ix_(rows, cols)]
        patch_gy = gy[np.ix_(rows, cols)]
        desc = np.empty(DESCRIPTOR_DIM, dtype=np.float64)
        idx = 0
        for gy_cell in range(DESCRIPTOR_GRID):
            for gx_cell in range(DESCRIPTOR_GRID):
                r = slice(gy_cell * cell, (gy_cell + 1) * cell)
                c = slice(gx_cell * cell, (gx_cell + 1) * cell)
                desc[idx] = patch_mag[r, c].mean()
                desc[idx + 1] = np.arctan2(patch_gy[r, c].sum(), patch_gx[r, c].sum()) / np.pi
                idx += 2
        norm = np.linalg.norm(desc)
        if norm == 0.0:
            continue
        locations.append((int(x), int(y)))
        descriptors.append(desc / norm)
    if not locations:
        return KeypointSet.empty()
    return KeypointSet(
        locations=np.asarray(locations, dtype=np.int64),
        descriptors=np.vstack(descriptors),
    )


def widget_type_histogram(context: list[Widget], model: WidgetTypeModel) -> np.ndarray:
    """Count context widgets per type ordinal; length-14 integer vector."""
    histogram = np.zeros(len(WidgetType), dtype=np.int64)
    for widget in context:
        wtype, _ = classify_widget_type(widget, model)
        histogram[int(wtype)] += 1
    return histogram


def classify_all(widgets: list[Widget], model: WidgetTypeModel) -> list[Widget]:
    """Fill widget_type/type_confidence on every widget via the model."""
    out = []
    for widget in widgets:
        wtype, confidence = classify_widget_type(widget, model)
        out.append(replace(widget, widget_type=wtype, type_confidence=confidence))
    return out


def save_widget_model(model: WidgetTypeModel, path: str | Path) -> None:
    doc = {
        "version": model.version,
        "classes": [c.name for c in model.classes],
        "centroids": [[float(v) for v in row] for row in model.centroids],
        "feature_min": [float(v) for v in model.feature_min],
        "feature_max": [float(v) for v in model.feature_max],
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_widget_model(path: str | Path) -> WidgetTypeModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedModel(f"cannot read widget model {path}: {exc}") from exc
    try:
        if doc["version"] != 1:
            raise MalformedModel(f"unsupported widget model version {doc['version']!r}")
        classes = tuple(WidgetType[name] for name in doc["classes"])
        centroids = np.asarray(doc["centroids"], dtype=np.float64)
        fmin = np.asarray(doc["feature_min"], dtype=np.float64)
        fmax = np.asarray(doc["feature_max"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedModel(f"malformed widget model {path}: {exc}") from exc
    if len(classes) < 1 or centroids.shape != (len(classes), fmin.shape[0]):
        raise MalformedModel(f"inconsistent widget model {path}")
    return WidgetTypeModel(classes=classes, centroids=centroids, feature_min=fmin, feature_max=fmax)
