"""Component similarities and their weighted composition for all report
pairs, NULL included.

Composition (weights alpha/beta/gamma, all defaulting to 0.5):

    sim_bug     = alpha * sim_wp + (1 - alpha) * sim_p
    sim_context = beta  * sim_wc + (1 - beta)  * sim_r
    deep        = gamma * sim_bug + (1 - gamma) * sim_context

sim_wp matches keypoint descriptors (mutual best + ratio test), sim_p and
sim_wc are min-max-normalized Euclidean distances inverted to similarities
(normalization spans every unordered pair of the corpus, so these two are
corpus-dependent), sim_r is 1 minus a normalized DTW cost.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial.distance import cdist, pdist, squareform

from .config import LOWE_RATIO, NULL_REPORT_ID
from .errors import (
    DuplicateNull,
    MalformedFeatures,
    MissingNull,
    TooFewReports,
    WeightOutOfRange,
)
from .features import ReportFeature
from .nlp import ActionObjectPair, ActionObjectSequence
from .vision import KeypointSet

COMPONENT_KEYS = ("wp", "p", "wc", "r")


def _check_weight(name: str, value: float) -> float:
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise WeightOutOfRange(name, value) from None
    if not np.isfinite(value) or not 0.0 <= value <= 1.0:
        raise WeightOutOfRange(name, value)
    return value


@dataclass(frozen=True)
class SimilarityWeights:
    alpha: float = 0.5
    beta: float = 0.5
    gamma: float = 0.5

    def __post_init__(self) -> None:
        _check_weight("alpha", self.alpha)
        _check_weight("beta", self.beta)
        _check_weight("gamma", self.gamma)


@dataclass(frozen=True)
class SimilarityMatrix:
    ids: tuple[str, ...]
    values: np.ndarray                     # (n, n) composed similarity
    components: dict[str, np.ndarray]      # keys "wp", "p", "wc", "r"
    weights: SimilarityWeights

    def index_of(self, report_id: str) -> int:
        return self.ids.index(report_id)


def _directional_matches(a: np.ndarray, b: np.ndarray) -> dict[int, int]:
    """Nearest-neighbor matches a -> b passing the Lowe ratio test.

    A lone candidate in b is always accepted; nearest-distance ties go to
    the lowest b index (stable sort).
    """
    distances = cdist(a, b)
    order = np.argsort(distances, axis=1, kind="stable")
    matches: dict[int, int] = {}
    for i in range(a.shape[0]):
        nearest = int(order[i, 0])
        if b.shape[0] == 1:
            matches[i] = nearest
            continue
        second = int(order[i, 1])
        if distances[i, nearest] < LOWE_RATIO * distances[i, second]:
            matches[i] = nearest
    return matches


def sim_problem_widget(a: KeypointSet, b: KeypointSet) -> float:
    """Fraction of mutual-best ratio-test matches over min(|a|, |b|)."""
    if len(a) == 0 and len(b) == 0:
        return 1.0
    if len(a) == 0 or len(b) == 0:
        return 0.0
    forward = _directional_matches(a.descriptors, b.descriptors)
    backward = _directional_matches(b.descriptors, a.descriptors)
    mutual = sum(1 for i, j in forward.items() if backward.get(j) == i)
    return mutual / min(len(a), len(b))


def pairwise_distances_then_normalize(vectors: np.ndarray) -> np.ndarray:
    """Euclidean distances over all unordered pairs, min-max normalized and
    inverted to similarities. Degenerate spread (max == min) gives all 1."""
    vectors = np.asarray(vectors, dtype=np.float64)
    n = vectors.shape[0]
    if n < 2:
        raise TooFewReports(n)
    condensed = pdist(vectors)
    dmin = float(condensed.min())
    dmax = float(condensed.max())
    if dmax == dmin:
        sims = np.ones((n, n), dtype=np.float64)
    else:
        normalized = (squareform(condensed) - dmin) / (dmax - dmin)
        sims = np.clip(1.0 - normalized, 0.0, 1.0)
    np.fill_diagonal(sims, 1.0)
    return sims


def sim_context_widget_matrix(histograms: np.ndarray) -> np.ndarray:
    return pairwise_distances_then_normalize(np.asarray(histograms, dtype=np.float64))


def _pair_cost(p: ActionObjectPair, q: ActionObjectPair) -> float:
    action_eq = p.action == q.action
    object_eq = sorted(p.objects) == sorted(q.objects) and p.supplement == q.supplement
    if action_eq and object_eq:
        return 0.0
    if action_eq or object_eq:
        return 0.5
    return 1.0


def dtw_cost(a: ActionObjectSequence, b: ActionObjectSequence) -> float:
    """DTW alignment cost, normalized by |a| + |b|; border gaps cost 1 each."""
    la, lb = len(a), len(b)
    if la == 0 and lb == 0:
        return 0.0
    if la == 0 or lb == 0:
        return 1.0
    table = np.empty((la + 1, lb + 1), dtype=np.float64)
    table[0, :] = np.arange(lb + 1)
    table[:, 0] = np.arange(la + 1)
    for i in range(1, la + 1):
        for j in range(1, lb + 1):
            cost = _pair_cost(a[i - 1], b[j - 1])
            table[i, j] = cost + min(table[i - 1, j], table[i, j - 1], table[i - 1, j - 1])
    return float(table[la, lb]) / (la + lb)


def sim_reproduction_step(a: ActionObjectSequence, b: ActionObjectSequence) -> float:
    return 1.0 - dtw_cost(a, b)


def compose(sim_wp: float, sim_p: float, sim_wc: float, sim_r: float, weights: SimilarityWeights) -> float:
    """Two-level convex combination of the four component similarities."""
    sim_bug = weights.alpha * sim_wp + (1.0 - weights.alpha) * sim_p
    sim_context = weights.beta * sim_wc + (1.0 - weights.beta) * sim_r
    return weights.gamma * sim_bug + (1.0 - weights.gamma) * sim_context


def _symmetric_component(
    features: list[ReportFeature],
    pair_fn,
) -> np.ndarray:
    n = len(features)
    matrix = np.ones((n, n), dtype=np.float64)
    for i in range(n):
        for j in range(i + 1, n):
            value = pair_fn(features[i], features[j])
            matrix[i, j] = value
            matrix[j, i] = value
    return matrix


def build_similarity_matrix(
    features: list[ReportFeature],
    weights: SimilarityWeights | None = None,
) -> SimilarityMatrix:
    """Assemble the composed similarity matrix over all features."""
    weights = weights or SimilarityWeights()
    n = len(features)
    if n < 2:
        raise TooFewReports(n)
    null_count = sum(1 for f in features if f.report_id == NULL_REPORT_ID)
    if null_count == 0:
        raise MissingNull()
    if null_count > 1:
        raise DuplicateNull()
    ids = [f.report_id for f in features]
    if len(set(ids)) != n:
        raise MalformedFeatures("duplicate report ids in feature list")

    wp = _symmetric_component(
        features, lambda f, g: sim_problem_widget(f.problem_keypoints, g.problem_keypoints)
    )
    p = pairwise_distances_then_normalize(
        np.vstack([f.description_embedding for f in features])
    )
    wc = sim_context_widget_matrix(np.vstack([f.context_histogram for f in features]))
    r = _symmetric_component(
        features, lambda f, g: sim_reproduction_step(f.action_sequence, g.action_sequence)
    )

    deep = (
        weights.gamma * (weights.alpha * wp + (1.0 - weights.alpha) * p)
        + (1.0 - weights.gamma) * (weights.beta * wc + (1.0 - weights.beta) * r)
    )
    deep = np.clip(deep, 0.0, 1.0)
    np.fill_diagonal(deep, 1.0)
    return SimilarityMatrix(
        ids=tuple(ids),
        values=deep,
        components={"wp": wp, "p": p, "wc": wc, "r": r},
        weights=weights,
    )


def build_image_similarity_matrix(
    features: list[ReportFeature],
    weights: SimilarityWeights | None = None,
) -> SimilarityMatrix:
    """Image-only composition: gamma * sim_wp + (1 - gamma) * sim_wc."""
    weights = weights or SimilarityWeights()
    full = build_similarity_matrix(features, weights)
    deep = weights.gamma * full.components["wp"] + (1.0 - weights.gamma) * full.components["wc"]
    deep = np.clip(deep, 0.0, 1.0)
    np.fill_diagonal(deep, 1.0)
    return SimilarityMatrix(
        ids=full.ids,
        values=deep,
        components=full.components,
        weights=weights,
    )


def save_matrix(matrix: SimilarityMatrix, path: str | Path) -> None:
    doc = {
        "version": 1,
        "ids": list(matrix.ids),
        "deep": [[float(v) for v in row] for row in matrix.values],
        "components": {
            key: [[float(v) for v in row] for row in matrix.components[key]]
            for key in COMPONENT_KEYS
        },
        "weights": {
            "alpha": matrix.weights.alpha,
            "beta": matrix.weights.beta,
            "gamma": matrix.weights.gamma,
        },
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_matrix(path: str | Path) -> SimilarityMatrix:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedFeatures(f"cannot read matrix {path}: {exc}") from exc
    try:
        if doc["version"] != 1:
            raise MalformedFeatures(f"unsupported matrix version {doc['version']!r}")
        ids = tuple(str(i) for i in doc["ids"])
        values = np.asarray(doc["deep"], dtype=np.float64)
        components = {
            key: np.asarray(doc["components"][key], dtype=np.float64) for key in COMPONENT_KEYS
        }
        w = doc["weights"]
        weights = SimilarityWeights(alpha=w["alpha"], beta=w["beta"], gamma=w["gamma"])
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedFeatures(f"malformed matrix {path}: {exc}") from exc
    n = len(ids)
    if values.shape != (n, n):
        raise MalformedFeatures(f"matrix {path}: shape mismatch")
    return SimilarityMatrix(ids=ids, values=values, components=components, weights=weights)
