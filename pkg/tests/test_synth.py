"""Synthetic corpus generator: determinism, noise knobs, spec parsing."""

from __future__ import annotations

import json

import numpy as np
import pytest

from reportprior import (
    ClusterSpec,
    IoFailure,
    NoiseKnobs,
    SynthSpec,
    build_report_feature,
    generate,
    generate_widget_samples,
    load_corpus,
    load_spec,
)


def _spec(seed=5, sizes=(3, 2), noise=None):
    clusters = [ClusterSpec(category=f"bug-{i}", size=s) for i, s in enumerate(sizes)]
    return SynthSpec(seed=seed, clusters=clusters, noise=noise or NoiseKnobs())


def _tree_bytes(root):
    return {
        str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()
    }


def test_generated_corpus_loads_and_labels_match(tmp_path):
    corpus, labels = generate(_spec(sizes=(3, 2, 4)), tmp_path / "corpus")
    assert len(corpus.reports) == 9
    assert set(labels) == {r.id for r in corpus.reports}
    assert len(set(labels.values())) == 3
    reloaded = load_corpus(tmp_path / "corpus")
    assert [r.id for r in reloaded.reports] == [r.id for r in corpus.reports]


def test_fixed_seed_reproduces_every_byte(tmp_path):
    generate(_spec(seed=9), tmp_path / "a")
    generate(_spec(seed=9), tmp_path / "b")
    assert _tree_bytes(tmp_path / "a") == _tree_bytes(tmp_path / "b")


def test_different_seeds_differ(tmp_path):
    generate(_spec(seed=1), tmp_path / "a")
    generate(_spec(seed=2), tmp_path / "b")
    assert _tree_bytes(tmp_path / "a") != _tree_bytes(tmp_path / "b")


def test_zero_noise_clusters_have_identical_features(
    tmp_path, widget_model, sentence_model, lexicons
):
    corpus, labels = generate(_spec(sizes=(3,)), tmp_path / "corpus")
    features = [
        build_report_feature(r, widget_model, sentence_model, lexicons) for r in corpus.reports
    ]
    first, rest = features[0], features[1:]
    screenshots = [r.screenshot for r in corpus.reports]
    for feature, screen in zip(rest, screenshots[1:]):
        assert np.array_equal(screenshots[0], screen)
        assert np.array_equal(first.problem_keypoints.descriptors, feature.problem_keypoints.descriptors)
        assert np.array_equal(first.description_embedding, feature.description_embedding)
        assert np.array_equal(first.context_histogram, feature.context_histogram)
        assert first.action_sequence == feature.action_sequence


def test_theme_shift_changes_pixels_but_not_structure(
    tmp_path, widget_model, sentence_model, lexicons
):
    noise = NoiseKnobs(theme_shift=True)
    corpus, labels = generate(_spec(sizes=(4,), noise=noise), tmp_path / "corpus")
    features = [
        build_report_feature(r, widget_model, sentence_model, lexicons) for r in corpus.reports
    ]
    screens = [r.screenshot for r in corpus.reports]
    assert any(not np.array_equal(screens[0], s) for s in screens[1:])
    for feature in features[1:]:
        assert np.array_equal(features[0].context_histogram, feature.context_histogram)
        assert features[0].action_sequence == feature.action_sequence
        assert np.array_equal(features[0].description_embedding, feature.description_embedding)


def test_screen_variation_marks_one_rich_member_per_cluster(tmp_path):
    noise = NoiseKnobs(screen_variation=True)
    corpus, labels = generate(_spec(sizes=(4, 3, 5), noise=noise), tmp_path / "corpus")
    by_category: dict[str, list[int]] = {}
    for report in corpus.reports:
        context_count = len(report.annotations) - 1
        by_category.setdefault(labels[report.id], []).append(context_count)
    for category, counts in by_category.items():
        assert sorted(counts)[-1] == 14, category
        assert sum(1 for c in counts if c == 14) == 1, category
        assert all(c in (6, 7) for c in counts if c != 14), category


def test_shared_screen_pairs_render_identical_screens(
    tmp_path, widget_model, sentence_model, lexicons
):
    noise = NoiseKnobs(shared_screen=True)
    corpus, labels = generate(_spec(sizes=(2, 2), noise=noise), tmp_path / "corpus")
    by_id = {r.id: r for r in corpus.reports}
    by_category: dict[str, list[str]] = {}
    for rid, category in sorted(labels.items()):
        by_category.setdefault(category, []).append(rid)
    (_, ids_a), (_, ids_b) = sorted(by_category.items())
    # same screen, different bug: pixels identical across the pair
    assert np.array_equal(by_id[ids_a[0]].screenshot, by_id[ids_b[0]].screenshot)
    features = {
        rid: build_report_feature(by_id[rid], widget_model, sentence_model, lexicons)
        for rid in (ids_a[0], ids_b[0])
    }
    # the context histograms differ only by swapping the problem widgets
    diff = features[ids_a[0]].context_histogram - features[ids_b[0]].context_histogram
    assert sorted(diff.tolist()).count(0) == 12
    assert sorted(diff.tolist())[:1] == [-1] and sorted(diff.tolist())[-1:] == [1]
    # and the two reports disagree on which widget is the problem
    assert not np.array_equal(
        features[ids_a[0]].problem_keypoints.descriptors,
        features[ids_b[0]].problem_keypoints.descriptors,
    )


def test_spec_validation():
    with pytest.raises(IoFailure):
        SynthSpec(seed=1, clusters=[], noise=NoiseKnobs())
    with pytest.raises(IoFailure):
        SynthSpec(seed=1, clusters=[ClusterSpec(category="x", size=0)], noise=NoiseKnobs())
    with pytest.raises(IoFailure):
        SynthSpec(
            seed=1,
            clusters=[ClusterSpec(category="x", size=1), ClusterSpec(category="x", size=2)],
            noise=NoiseKnobs(),
        )


def test_spec_file_parsing(tmp_path):
    path = tmp_path / "spec.json"
    path.write_text(
        json.dumps(
            {
                "seed": 3,
                "clusters": [{"category": "crash", "size": 2}],
                "noise": {"theme_shift": True},
            }
        )
    )
    spec = load_spec(path)
    assert spec.seed == 3
    assert list(spec.clusters) == [ClusterSpec(category="crash", size=2)]
    assert spec.noise == NoiseKnobs(theme_shift=True)

    path.write_text(json.dumps({"seed": 3, "clusters": [], "extra": 1}))
    with pytest.raises(IoFailure):
        load_spec(path)
    path.write_text(json.dumps({"seed": 3, "clusters": [{"category": "c", "size": "two"}]}))
    with pytest.raises(IoFailure):
        load_spec(path)
    path.write_text("nonsense")
    with pytest.raises(IoFailure):
        load_spec(path)
    with pytest.raises(IoFailure):
        load_spec(tmp_path / "missing.json")


def test_widget_sample_renderer_is_deterministic():
    a = generate_widget_samples(seed=4, per_class=3)
    b = generate_widget_samples(seed=4, per_class=3)
    assert len(a) == 14 * 3
    for (crop_a, text_a, type_a), (crop_b, text_b, type_b) in zip(a, b):
        assert np.array_equal(crop_a, crop_b)
        assert text_a == text_b and type_a == type_b
    types = {t for _, _, t in a}
    assert len(types) == 14
