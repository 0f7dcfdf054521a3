"""Greedy diversity-first ordering over a similarity matrix."""

from __future__ import annotations

import numpy as np
import pytest

from reportprior import (
    MalformedFeatures,
    MissingNull,
    NULL_REPORT_ID,
    PrioritizedOrder,
    SimilarityMatrix,
    SimilarityWeights,
    load_order,
    prioritize,
    save_order,
)


def _matrix(ids, values):
    values = np.asarray(values, dtype=np.float64)
    zeros = np.zeros_like(values)
    return SimilarityMatrix(
        ids=tuple(ids),
        values=values,
        components={"wp": zeros, "p": zeros, "wc": zeros, "r": zeros},
        weights=SimilarityWeights(),
    )


def _worked_example():
    # null similarities: r1 .1, r2 .3, r3 .2; pair sims: r1r2 .9, r1r3 .2, r2r3 .3
    ids = [NULL_REPORT_ID, "r1", "r2", "r3"]
    values = [
        [1.0, 0.1, 0.3, 0.2],
        [0.1, 1.0, 0.9, 0.2],
        [0.3, 0.9, 1.0, 0.3],
        [0.2, 0.2, 0.3, 1.0],
    ]
    return _matrix(ids, values)


def test_worked_example_orders_by_distinctiveness():
    result = prioritize(_worked_example())
    assert result.order == ("r1", "r3", "r2")
    assert [e.id for e in result.audit] == ["r1", "r3", "r2"]
    assert [e.min_sim for e in result.audit] == pytest.approx([0.1, 0.2, 0.3])


def test_single_report_corpus():
    matrix = _matrix([NULL_REPORT_ID, "r1"], [[1.0, 0.4], [0.4, 1.0]])
    result = prioritize(matrix)
    assert result.order == ("r1",)
    assert result.audit[0].min_sim == pytest.approx(0.4)


def test_all_equal_similarities_fall_back_to_id_order():
    ids = [NULL_REPORT_ID, "rb", "ra", "rc"]
    values = np.full((4, 4), 0.5)
    np.fill_diagonal(values, 1.0)
    result = prioritize(_matrix(ids, values))
    assert result.order == ("ra", "rb", "rc")


def test_null_column_position_does_not_matter():
    # same worked example, null listed last
    ids = ["r1", "r2", "r3", NULL_REPORT_ID]
    values = [
        [1.0, 0.9, 0.2, 0.1],
        [0.9, 1.0, 0.3, 0.3],
        [0.2, 0.3, 1.0, 0.2],
        [0.1, 0.3, 0.2, 1.0],
    ]
    assert prioritize(_matrix(ids, values)).order == ("r1", "r3", "r2")


def test_null_policies_diverge_when_null_stays_informative():
    # keep: r2's min stays its null sim (0.12) → picked second.
    # drop-after-first: mins restart from r1's column → r3 (0.6) vs r2 (0.9).
    ids = [NULL_REPORT_ID, "r1", "r2", "r3"]
    values = [
        [1.0, 0.1, 0.12, 0.5],
        [0.1, 1.0, 0.9, 0.6],
        [0.12, 0.9, 1.0, 0.05],
        [0.5, 0.6, 0.05, 1.0],
    ]
    keep = prioritize(_matrix(ids, values), null_policy="keep")
    drop = prioritize(_matrix(ids, values), null_policy="drop-after-first")
    assert keep.order == ("r1", "r2", "r3")
    assert drop.order == ("r1", "r3", "r2")


def test_unknown_policy_is_rejected():
    with pytest.raises(ValueError):
        prioritize(_worked_example(), null_policy="sometimes")


def test_matrix_without_null_is_rejected():
    matrix = _matrix(["r1", "r2"], [[1.0, 0.5], [0.5, 1.0]])
    with pytest.raises(MissingNull):
        prioritize(matrix)


def test_order_round_trip(tmp_path):
    result = prioritize(_worked_example())
    path = tmp_path / "order.json"
    save_order(result, path)
    loaded = load_order(path)
    assert loaded == result

    path.write_text('{"version": 9}')
    with pytest.raises(MalformedFeatures):
        load_order(path)
    path.write_text("{")
    with pytest.raises(MalformedFeatures):
        load_order(path)


def test_greedy_always_emits_a_permutation():
    rng = np.random.default_rng(7)
    for _ in range(20):
        n = int(rng.integers(1, 12))
        ids = [NULL_REPORT_ID] + [f"r{i:02d}" for i in range(n)]
        raw = rng.random((n + 1, n + 1))
        values = (raw + raw.T) / 2
        np.fill_diagonal(values, 1.0)
        for policy in ("keep", "drop-after-first"):
            result = prioritize(_matrix(ids, values), null_policy=policy)
            assert sorted(result.order) == sorted(ids[1:])
            assert NULL_REPORT_ID not in result.order
