"""Acceptance gate: nine checks covering the full pipeline.

Each test prints one [PASS]/[FAIL] line directly to the real stdout so the
gate's verdict stays visible regardless of pytest capture settings.
"""

from __future__ import annotations

import functools
import itertools
import json
import sys
import time

import numpy as np
import pytest

from reportprior import (
    ClusterSpec,
    NoiseKnobs,
    SynthSpec,
    apfd,
    build_report_feature,
    build_similarity_matrix,
    classify_sentence,
    classify_widget_type,
    compose,
    corpus_stats,
    dtw_cost,
    f_measure,
    generate,
    generate_widget_samples,
    ideal_apfd,
    null_report_feature,
    prioritize,
    run_strategy,
    train_widget_classifier,
)
from reportprior.config import NULL_REPORT_ID
from reportprior.nlp import ActionObjectPair
from reportprior.similarity import SimilarityMatrix, SimilarityWeights, _pair_cost
from reportprior.vision import KeypointSet, Widget


_CAPTURE_MANAGER = None


@pytest.fixture(autouse=True)
def _verdict_stream(request):
    """Remember pytest's capture manager so verdicts reach the real stdout."""
    global _CAPTURE_MANAGER
    _CAPTURE_MANAGER = request.config.pluginmanager.getplugin("capturemanager")
    yield


def _emit(line: str) -> None:
    if _CAPTURE_MANAGER is not None:
        with _CAPTURE_MANAGER.global_and_fixture_disabled():
            print(line, flush=True)
    else:
        print(line, file=sys.__stdout__, flush=True)


def _criterion(number: int, label: str):
    def decorator(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                result = fn(*args, **kwargs)
            except BaseException:
                _emit(f"[FAIL] criterion {number}: {label}")
                raise
            _emit(f"[PASS] criterion {number}: {label}")
            return result

        return wrapper

    return decorator


# ---------------------------------------------------------------------------
# 1. Ideal APFD at the reference (n, M) scales

_REFERENCE_SCALES = [
    (134, 9, 0.974),
    (29, 6, 0.931),
    (23, 4, 0.957),
    (152, 8, 0.980),
    (75, 7, 0.967),
    (26, 5, 0.942),
    (10, 2, 1.000),
    (51, 8, 0.941),
    (12, 3, 0.958),
    (24, 5, 0.938),
]


@_criterion(1, "ideal APFD matches the reference table at all 10 scales")
def test_criterion_1_ideal_apfd_reference_scales():
    started = time.perf_counter()
    for n, m, expected in _REFERENCE_SCALES:
        value = ideal_apfd(n, m)
        assert abs(value - expected) <= 0.0005, (n, m, value, expected)
    assert time.perf_counter() - started < 1.0


# ---------------------------------------------------------------------------
# 2. APFD equals a brute-force scan oracle


def _scan_oracle(ordering, labels):
    categories = sorted(set(labels.values()))
    total = 0
    for category in categories:
        for index, report_id in enumerate(ordering):
            if labels.get(report_id) == category:
                total += index
                break
    n, m = len(ordering), len(categories)
    return 1.0 - total / (n * m) + 1.0 / (2 * n)


@_criterion(2, "APFD equals the brute-force oracle on 1000 seeded cases")
def test_criterion_2_apfd_oracle_equivalence():
    rng = np.random.default_rng(1234)
    for _ in range(1000):
        n = int(rng.integers(1, 13))
        m = int(rng.integers(1, min(n, 5) + 1))
        ids = [f"r{i}" for i in range(n)]
        labels = {}
        for i, rid in enumerate(ids):
            if i < m:
                labels[rid] = f"c{i}"
            elif rng.random() < 0.8:
                labels[rid] = f"c{int(rng.integers(0, m))}"
        ordering = [ids[i] for i in rng.permutation(n)]
        value = apfd(ordering, labels)
        assert value == _scan_oracle(ordering, labels)
        assert value <= ideal_apfd(n, len(set(labels.values()))) + 1e-12


# ---------------------------------------------------------------------------
# 3. DTW equals the exponential recursive definition


def _recursive_cost(a, b):
    if not a and not b:
        return 0.0
    if not a:
        return float(len(b))
    if not b:
        return float(len(a))
    return _pair_cost(a[-1], b[-1]) + min(
        _recursive_cost(a[:-1], b[:-1]),
        _recursive_cost(a[:-1], b),
        _recursive_cost(a, b[:-1]),
    )


@_criterion(3, "DTW cost equals the recursive definition on 500 seeded pairs")
def test_criterion_3_dtw_oracle_equivalence():
    actions = ("tap", "press", "open")
    objects = ("ok", "menu", "tab")
    rng = np.random.default_rng(77)

    def sample_sequence():
        length = int(rng.integers(0, 7))
        pairs = []
        for _ in range(length):
            n_objects = int(rng.integers(0, 3))
            pairs.append(
                ActionObjectPair(
                    action=actions[int(rng.integers(0, 3))],
                    objects=tuple(
                        objects[int(rng.integers(0, 3))] for _ in range(n_objects)
                    ),
                    supplement="abc" if rng.random() < 0.15 else None,
                )
            )
        return tuple(pairs)

    for _ in range(500):
        a, b = sample_sequence(), sample_sequence()
        denominator = len(a) + len(b)
        expected = _recursive_cost(a, b) / denominator if denominator else 0.0
        assert dtw_cost(a, b) == expected, (a, b)


# ---------------------------------------------------------------------------
# 4. Similarity matrix contracts on fuzzed corpora


def _random_feature(rng, report_id):
    from reportprior import ReportFeature

    n_kp = int(rng.integers(0, 4))
    if n_kp:
        descriptors = rng.normal(size=(n_kp, 32))
        descriptors /= np.linalg.norm(descriptors, axis=1, keepdims=True)
        keypoints = KeypointSet(
            locations=rng.integers(0, 50, size=(n_kp, 2)).astype(np.int64),
            descriptors=descriptors,
        )
    else:
        keypoints = KeypointSet.empty()
    embedding = np.zeros(100)
    embedding[int(rng.integers(0, 100))] = 1.0
    histogram = rng.integers(0, 6, size=14).astype(np.int64)
    actions = ("tap", "press", "open")
    sequence = tuple(
        ActionObjectPair(action=actions[int(rng.integers(0, 3))], objects=("x",))
        for _ in range(int(rng.integers(0, 4)))
    )
    from reportprior import ReportFeature as RF

    return RF(
        report_id=report_id,
        problem_keypoints=keypoints,
        description_embedding=embedding,
        context_histogram=histogram,
        action_sequence=sequence,
    )


@_criterion(4, "matrix contracts hold on 50 fuzzed corpora")
def test_criterion_4_similarity_contracts():
    from reportprior import ReportFeature

    rng = np.random.default_rng(4096)
    for trial in range(50):
        n = int(rng.integers(3, 20))
        features = [
            ReportFeature(
                report_id=NULL_REPORT_ID,
                problem_keypoints=KeypointSet.empty(),
                description_embedding=np.zeros(100),
                context_histogram=np.zeros(14, dtype=np.int64),
                action_sequence=(),
            )
        ]
        for i in range(n):
            features.append(_random_feature(rng, f"r{i:02d}"))
        # plant an exact duplicate (zero-distance pair) of the first report
        features.append(
            ReportFeature(
                report_id="dup",
                problem_keypoints=features[1].problem_keypoints,
                description_embedding=features[1].description_embedding.copy(),
                context_histogram=features[1].context_histogram.copy(),
                action_sequence=features[1].action_sequence,
            )
        )
        matrix = build_similarity_matrix(features)
        values = matrix.values
        assert np.allclose(values, values.T)
        assert np.all(values >= 0.0) and np.all(values <= 1.0)
        assert np.all(np.diag(values) == 1.0)

        index = {rid: k for k, rid in enumerate(matrix.ids)}
        i, j = index["r00"], index["dup"]
        for key, vectors in (
            ("p", np.vstack([f.description_embedding for f in features])),
            ("wc", np.vstack([f.context_histogram for f in features]).astype(float)),
        ):
            component = matrix.components[key]
            assert component[i, j] == 1.0  # zero-distance pair
            from scipy.spatial.distance import squareform, pdist

            distances = squareform(pdist(vectors))
            if distances.max() > distances.min():
                far = np.unravel_index(np.argmax(distances), distances.shape)
                assert component[far] == 0.0

        # compositional monotonicity by directional perturbation
        weights = SimilarityWeights(
            alpha=float(rng.uniform(0.1, 0.9)),
            beta=float(rng.uniform(0.1, 0.9)),
            gamma=float(rng.uniform(0.1, 0.9)),
        )
        base_components = rng.uniform(0.0, 0.9, size=4)
        base = compose(*base_components, weights)
        for axis in range(4):
            bumped = base_components.copy()
            bumped[axis] += 0.1
            assert compose(*bumped, weights) > base


# ---------------------------------------------------------------------------
# 5. Greedy ordering trace


def _matrix_from(ids, values):
    values = np.asarray(values, dtype=np.float64)
    zeros = np.zeros_like(values)
    return SimilarityMatrix(
        ids=tuple(ids),
        values=values,
        components={"wp": zeros, "p": zeros, "wc": zeros, "r": zeros},
        weights=SimilarityWeights(),
    )


@_criterion(5, "greedy ordering reproduces the hand-traced fixtures")
def test_criterion_5_greedy_trace():
    worked = _matrix_from(
        [NULL_REPORT_ID, "r1", "r2", "r3"],
        [
            [1.0, 0.1, 0.3, 0.2],
            [0.1, 1.0, 0.9, 0.2],
            [0.3, 0.9, 1.0, 0.3],
            [0.2, 0.2, 0.3, 1.0],
        ],
    )
    assert prioritize(worked).order == ("r1", "r3", "r2")

    single = _matrix_from([NULL_REPORT_ID, "r1"], [[1.0, 0.5], [0.5, 1.0]])
    assert prioritize(single).order == ("r1",)

    flat_values = np.full((4, 4), 0.5)
    np.fill_diagonal(flat_values, 1.0)
    flat = _matrix_from([NULL_REPORT_ID, "rc", "ra", "rb"], flat_values)
    assert prioritize(flat).order == ("ra", "rb", "rc")


# ---------------------------------------------------------------------------
# 6. Prioritization beats random on seeded noisy corpora


def _seeded_cluster_sizes(rng):
    k = int(rng.integers(3, 9))
    sizes = [int(rng.integers(2, 15)) for _ in range(k)]
    while sum(sizes) < 30:
        sizes[int(rng.integers(0, k))] += 1
    while sum(sizes) > 60:
        candidates = [i for i, s in enumerate(sizes) if s > 2]
        sizes[candidates[int(rng.integers(0, len(candidates)))]] -= 1
    return sizes


@_criterion(6, "deepprior APFD >= 100-run random mean on all 20 noisy corpora")
def test_criterion_6_prioritization_effectiveness(
    tmp_path, widget_model, sentence_model, lexicons
):
    started = time.perf_counter()
    noise = NoiseKnobs(theme_shift=True, shared_screen=True, screen_variation=True)
    for seed in range(20):
        rng = np.random.default_rng([seed, 5])
        sizes = _seeded_cluster_sizes(rng)
        spec = SynthSpec(
            seed=seed,
            clusters=[ClusterSpec(category=f"bug-{i}", size=s) for i, s in enumerate(sizes)],
            noise=noise,
        )
        corpus, labels = generate(spec, tmp_path / f"corpus-{seed:02d}")
        features = [
            build_report_feature(r, widget_model, sentence_model, lexicons)
            for r in corpus.reports
        ]
        features.append(null_report_feature(corpus_stats(corpus)))

        deep = run_strategy("deepprior", corpus, labels, features)
        random_mean = run_strategy(
            "random", corpus, labels, None, seed=42, random_runs=100
        ).mean_apfd
        assert deep.mean_apfd >= random_mean, (seed, sizes, deep.mean_apfd, random_mean)
        if max(sizes) >= 3 * min(sizes):
            assert deep.mean_apfd > random_mean, (seed, sizes)
    assert time.perf_counter() - started < 60.0


# ---------------------------------------------------------------------------
# 7. Classifier sanity


@_criterion(7, "both classifiers reach 90% held out; F-measure spot value")
def test_criterion_7_classifier_sanity(sentence_model, heldout_sentences, lexicons):
    correct = sum(
        classify_sentence(sentence, sentence_model, lexicons.stopwords) is label
        for sentence, label in heldout_sentences
    )
    assert correct / len(heldout_sentences) >= 0.9

    widget_model = train_widget_classifier(generate_widget_samples(seed=0, per_class=50))
    heldout = generate_widget_samples(seed=1, per_class=50)
    hits = 0
    for crop, has_text, wtype in heldout:
        predicted, _ = classify_widget_type(
            Widget(
                bbox=(0, 0, crop.shape[1], crop.shape[0]),
                crop=crop,
                text="x" if has_text else None,
            ),
            widget_model,
        )
        hits += predicted is wtype
    assert hits / len(heldout) >= 0.9

    assert round(f_measure(0.9981, 1.0000), 4) == 0.9990


# ---------------------------------------------------------------------------
# 8. End-to-end determinism through the CLI


@_criterion(8, "extract/prioritize/evaluate rerun is byte-identical")
def test_criterion_8_end_to_end_determinism(tmp_path, capsys):
    from reportprior.cli import main

    spec_path = tmp_path / "spec.json"
    spec_path.write_text(
        json.dumps(
            {
                "seed": 21,
                "clusters": [
                    {"category": "crash", "size": 4},
                    {"category": "freeze", "size": 3},
                    {"category": "garble", "size": 3},
                ],
                "noise": {"theme_shift": True},
            }
        )
    )
    corpus_dir = tmp_path / "corpus"
    assert main(["synth", "--spec", str(spec_path), "--out", str(corpus_dir)]) == 0
    capsys.readouterr()

    artifacts = []
    for _ in range(2):
        features = tmp_path / "features.json"
        order = tmp_path / "order.json"
        assert main(["extract", "--corpus", str(corpus_dir), "--out", str(features)]) == 0
        assert main(["prioritize", "--features", str(features), "--out", str(order)]) == 0
        capsys.readouterr()
        assert main(
            ["evaluate", "--order", str(order), "--labels", str(corpus_dir / "labels.json")]
        ) == 0
        printed = capsys.readouterr().out
        artifacts.append((features.read_bytes(), order.read_bytes(), printed))
    assert artifacts[0] == artifacts[1]


# ---------------------------------------------------------------------------
# 9. Theme-shift robustness


@_criterion(9, "theme-shift-only corpora keep intra>inter margin above 0.1")
def test_criterion_9_theme_shift_margin(tmp_path, widget_model, sentence_model, lexicons):
    spec = SynthSpec(
        seed=33,
        clusters=[
            ClusterSpec(category="bug-0", size=4),
            ClusterSpec(category="bug-1", size=4),
            ClusterSpec(category="bug-2", size=4),
        ],
        noise=NoiseKnobs(theme_shift=True),
    )
    corpus, labels = generate(spec, tmp_path / "corpus")
    features = [
        build_report_feature(r, widget_model, sentence_model, lexicons)
        for r in corpus.reports
    ]
    features.append(null_report_feature(corpus_stats(corpus)))
    matrix = build_similarity_matrix(features)
    index = {rid: i for i, rid in enumerate(matrix.ids)}

    intra, inter = [], []
    ids = [r.id for r in corpus.reports]
    for a, b in itertools.combinations(ids, 2):
        value = matrix.values[index[a], index[b]]
        (intra if labels[a] == labels[b] else inter).append(value)
    margin = float(np.mean(intra) - np.mean(inter))
    assert margin > 0.1, margin
