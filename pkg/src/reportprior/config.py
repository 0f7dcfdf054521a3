"""Run configuration and the pinned numeric constants of the pipeline."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import MalformedModel, WeightOutOfRange

# Reserved id for the synthetic empty report that seeds prioritization.
NULL_REPORT_ID = "<NULL>"

# Dimensions of the per-report feature vectors.
EMBEDDING_DIM = 100
HISTOGRAM_DIM = 14

# Widget detector: connected edge components are kept when their bounding
# box covers between 0.05% and 90% of the screenshot area.
DETECTOR_MIN_AREA_FRAC = 0.0005
DETECTOR_MAX_AREA_FRAC = 0.90

# Corner keypoints: Harris response with k = 0.04, Gaussian smoothing of the
# structure tensor, non-maximum suppression radius 3, response floor at 1%
# of the strongest corner, at most 256 keypoints per crop.
HARRIS_K = 0.04
HARRIS_SIGMA = 1.0
NMS_RADIUS = 3
RESPONSE_FLOOR_FRAC = 0.01
MAX_KEYPOINTS = 256

# Descriptors: 16x16 patch split into a 4x4 grid, 2 numbers per cell.
DESCRIPTOR_PATCH = 16
DESCRIPTOR_GRID = 4
DESCRIPTOR_DIM = 2 * DESCRIPTOR_GRID * DESCRIPTOR_GRID

# Keypoint matching: Lowe ratio threshold for nearest/second-nearest.
LOWE_RATIO = 0.75

# Problem-widget location: minimum token-overlap score for a text match.
TEXT_MATCH_THRESHOLD = 0.5

VALID_NULL_POLICIES = ("keep", "drop-after-first")
VALID_STRATEGIES = ("deepprior", "image", "random", "ideal")


def _check_weight(name: str, value: float) -> float:
    if not isinstance(value, (int, float)) or not (0.0 <= float(value) <= 1.0):
        raise WeightOutOfRange(name, value)
    return float(value)


@dataclass(frozen=True)
class RunConfig:
    """Knobs shared by the CLI commands.

    File paths are optional; None means "use the bundled default" for the
    models and lexicons.
    """

    alpha: float = 0.5
    beta: float = 0.5
    gamma: float = 0.5
    null_policy: str = "keep"
    random_runs: int = 100
    seed: int = 42
    widget_model: str | None = None
    text_model: str | None = None
    stopwords: str | None = None
    actions: str | None = None
    bug_cues: str | None = None
    type_lexicon: str | None = None
    strategies: tuple[str, ...] = field(default=VALID_STRATEGIES)

    def __post_init__(self) -> None:
        _check_weight("alpha", self.alpha)
        _check_weight("beta", self.beta)
        _check_weight("gamma", self.gamma)
        if self.null_policy not in VALID_NULL_POLICIES:
            raise ValueError(f"unknown null policy: {self.null_policy}")
        if self.random_runs < 1:
            raise ValueError("random_runs must be >= 1")

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        """Load a config JSON file; unknown keys are rejected."""
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise MalformedModel(f"cannot read config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise MalformedModel(f"config {path} must be a JSON object")
        known = set(cls.__dataclass_fields__)
        unknown = set(raw) - known
        if unknown:
            raise MalformedModel(f"config {path}: unknown keys {sorted(unknown)}")
        if "strategies" in raw:
            raw["strategies"] = tuple(raw["strategies"])
        return cls(**raw)

    def override(self, **kwargs: object) -> "RunConfig":
        """Return a copy with the non-None kwargs applied (flags win)."""
        updates = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **updates) if updates else self
