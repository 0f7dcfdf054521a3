"""APFD, classifier metrics, and the strategy comparison harness.

APFD uses 0-based first-detection indices:

    apfd = 1 - sum(T_fi) / (n * M) + 1 / (2n)

which makes a perfect two-category ordering over 10 reports score exactly
1.0 and gives the closed form ideal = 1 - (M - 2) / (2n).
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import VALID_STRATEGIES
from .corpus import Corpus, LabelMap, category_count
from .errors import (
    EmptyLabels,
    InvalidCounts,
    MalformedFeatures,
    MissingLabels,
    ReportPriorError,
    UndefinedMetric,
    UnknownReportId,
)
from .features import ReportFeature
from .prioritize import prioritize
from .similarity import (
    SimilarityWeights,
    build_image_similarity_matrix,
    build_similarity_matrix,
)


class UnknownStrategy(ReportPriorError):
    def __init__(self, name: str) -> None:
        super().__init__(f"unknown strategy: {name} (valid: {', '.join(VALID_STRATEGIES)})")
        self.name = name


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int


@dataclass(frozen=True)
class StrategyResult:
    strategy: str
    apfd_values: tuple[float, ...]
    mean_apfd: float
    runtime_ms: float

    @property
    def runs(self) -> int:
        return len(self.apfd_values)


@dataclass(frozen=True)
class StrategyRow:
    strategy: str
    mean_apfd: float
    runs: int
    runtime_ms: float


@dataclass(frozen=True)
class ComparisonTable:
    rows: tuple[StrategyRow, ...]
    improvements: dict[str, float]  # baseline -> % improvement of deepprior

    def render(self) -> str:
        header = f"{'strategy':<12} {'mean_apfd':>10} {'runs':>6} {'runtime_ms':>12} {'deepprior_gain':>15}"
        lines = [header, "-" * len(header)]
        for row in self.rows:
            gain = self.improvements.get(row.strategy)
            gain_text = f"{gain:+.1f}%" if gain is not None else "-"
            lines.append(
                f"{row.strategy:<12} {row.mean_apfd:>10.4f} {row.runs:>6d} {row.runtime_ms:>12.1f} {gain_text:>15}"
            )
        return "\n".join(lines)


def first_detections(ordering: list[str] | tuple[str, ...], labels: LabelMap) -> dict[str, int]:
    """Category -> 0-based index of its first occurrence in the ordering."""
    found: dict[str, int] = {}
    for index, report_id in enumerate(ordering):
        category = labels.get(report_id)
        if category is not None and category not in found:
            found[category] = index
    return found


def apfd(ordering: list[str] | tuple[str, ...], labels: LabelMap) -> float:
    """Eq.-style APFD of one ordering against the label map."""
    if not labels:
        raise EmptyLabels()
    n = len(ordering)
    if n < 1:
        raise InvalidCounts("ordering is empty")
    if len(set(ordering)) != n:
        raise MalformedFeatures("ordering contains duplicate ids")
    position = set(ordering)
    for report_id in labels:
        if report_id not in position:
            raise UnknownReportId(report_id)
    categories = category_count(labels)
    detections = first_detections(ordering, labels)
    total = sum(detections.values())
    return 1.0 - total / (n * categories) + 1.0 / (2 * n)


def ideal_apfd(n: int, m: int) -> float:
    """Best attainable APFD: first M reports each reveal a new category."""
    if not (1 <= m <= n):
        raise InvalidCounts(f"need 1 <= M <= n, got M={m}, n={n}")
    return 1.0 - (m - 2) / (2.0 * n)


def f_measure(precision: float, recall: float) -> float:
    """Harmonic mean; zero when either input is zero."""
    if precision == 0.0 or recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def classifier_metrics(counts: ConfusionCounts) -> tuple[float, float, float]:
    if counts.tp < 0 or counts.fp < 0 or counts.tn < 0 or counts.fn < 0:
        raise UndefinedMetric("confusion counts must be non-negative")
    if counts.tp + counts.fp < 1 or counts.tp + counts.fn < 1:
        raise UndefinedMetric("precision/recall undefined: zero denominator")
    precision = counts.tp / (counts.tp + counts.fp)
    recall = counts.tp / (counts.tp + counts.fn)
    return precision, recall, f_measure(precision, recall)


def ideal_ordering(corpus_ids: list[str] | tuple[str, ...], labels: LabelMap) -> list[str]:
    """One report per category first (categories in first-appearance order),
    then every remaining report in corpus order."""
    head: list[str] = []
    seen: set[str] = set()
    for report_id in corpus_ids:
        category = labels.get(report_id)
        if category is not None and category not in seen:
            seen.add(category)
            head.append(report_id)
    chosen = set(head)
    return head + [r for r in corpus_ids if r not in chosen]


def run_strategy(
    name: str,
    corpus: Corpus,
    labels: LabelMap | None,
    features: list[ReportFeature] | None,
    weights: SimilarityWeights | None = None,
    seed: int = 42,
    random_runs: int = 100,
    null_policy: str = "keep",
) -> StrategyResult:
    """Execute one prioritization strategy and score it with APFD."""
    if name not in VALID_STRATEGIES:
        raise UnknownStrategy(name)
    if labels is None:
        raise MissingLabels()
    weights = weights or SimilarityWeights()
    corpus_ids = list(corpus.report_ids())
    started = time.perf_counter()

    if name == "deepprior" or name == "image":
        if features is None:
            raise MalformedFeatures(f"strategy {name} needs extracted features")
        build = build_similarity_matrix if name == "deepprior" else build_image_similarity_matrix
        matrix = build(features, weights)
        ordering = prioritize(matrix, null_policy=null_policy).order
        values = (apfd(ordering, labels),)
    elif name == "random":
        scores = []
        for run in range(random_runs):
            rng = np.random.default_rng([seed, run])
            permuted = [corpus_ids[i] for i in rng.permutation(len(corpus_ids))]
            scores.append(apfd(permuted, labels))
        values = tuple(scores)
    else:  # ideal
        values = (apfd(ideal_ordering(corpus_ids, labels), labels),)

    runtime_ms = (time.perf_counter() - started) * 1000.0
    return StrategyResult(
        strategy=name,
        apfd_values=values,
        mean_apfd=sum(values) / len(values),
        runtime_ms=runtime_ms,
    )


def compare(
    corpus: Corpus,
    labels: LabelMap,
    strategies: list[str] | tuple[str, ...],
    features: list[ReportFeature] | None,
    weights: SimilarityWeights | None = None,
    seed: int = 42,
    random_runs: int = 100,
    null_policy: str = "keep",
) -> ComparisonTable:
    """Run each strategy once and tabulate mean APFD and runtimes."""
    if not strategies:
        raise UnknownStrategy("<none>")
    rows = []
    means: dict[str, float] = {}
    for name in strategies:
        result = run_strategy(
            name, corpus, labels, features, weights,
            seed=seed, random_runs=random_runs, null_policy=null_policy,
        )
        rows.append(
            StrategyRow(
                strategy=name,
                mean_apfd=result.mean_apfd,
                runs=result.runs,
                runtime_ms=result.runtime_ms,
            )
        )
        means[name] = result.mean_apfd
    improvements: dict[str, float] = {}
    if "deepprior" in means:
        for name, mean in means.items():
            if name != "deepprior" and mean > 0:
                improvements[name] = (means["deepprior"] - mean) / mean * 100.0
    return ComparisonTable(rows=tuple(rows), improvements=improvements)


def save_results(table: ComparisonTable, path: str | Path) -> None:
    doc = {
        "version": 1,
        "rows": [
            {
                "strategy": row.strategy,
                "mean_apfd": row.mean_apfd,
                "runs": row.runs,
                "runtime_ms": row.runtime_ms,
            }
            for row in table.rows
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
