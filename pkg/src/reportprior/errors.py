"""Exception types raised by the reportprior pipeline.

Every error carries enough context to identify the offending report,
class, or file, and each maps to one CLI exit code (see cli module).
"""

from __future__ import annotations


class ReportPriorError(Exception):
    """Base class for all pipeline errors."""


# --- corpus loading (CLI exit 2) ---


class CorpusError(ReportPriorError):
    """Base class for corpus-level failures."""


class MissingManifest(CorpusError):
    def __init__(self, path: str) -> None:
        super().__init__(f"manifest not found: {path}")
        self.path = path


class MalformedReport(CorpusError):
    def __init__(self, report_id: str, reason: str) -> None:
        ident = report_id if report_id else "<corpus>"
        super().__init__(f"{ident}: {reason}")
        self.report_id = report_id
        self.reason = reason


class UnreadableImage(CorpusError):
    def __init__(self, report_id: str, reason: str = "cannot decode screenshot") -> None:
        super().__init__(f"{report_id}: {reason}")
        self.report_id = report_id


# --- model loading / training (CLI exit 3) ---


class ModelError(ReportPriorError):
    """Base class for model training and loading failures."""


class EmptyClass(ModelError):
    def __init__(self, class_name: str) -> None:
        super().__init__(f"no training samples for class: {class_name}")
        self.class_name = class_name


class MalformedModel(ModelError):
    def __init__(self, reason: str) -> None:
        super().__init__(reason)


class LexiconError(ModelError):
    def __init__(self, reason: str) -> None:
        super().__init__(reason)


# --- feature and matrix files (CLI exit 4) ---


class FeatureError(ReportPriorError):
    """Base class for feature-bundle failures."""


class MalformedFeatures(FeatureError):
    def __init__(self, reason: str) -> None:
        super().__init__(reason)


class MissingNull(FeatureError):
    def __init__(self) -> None:
        super().__init__("feature set has no null-report entry")


class DuplicateNull(FeatureError):
    def __init__(self) -> None:
        super().__init__("feature set has more than one null-report entry")


class TooFewReports(FeatureError):
    def __init__(self, count: int) -> None:
        super().__init__(f"need at least 2 feature entries, got {count}")
        self.count = count


# --- labels (CLI exit 5) ---


class LabelError(ReportPriorError):
    """Base class for label-map failures."""


class MalformedLabels(LabelError):
    def __init__(self, reason: str) -> None:
        super().__init__(reason)


class EmptyLabels(LabelError):
    def __init__(self) -> None:
        super().__init__("label map is empty")


class UnknownReportId(LabelError):
    def __init__(self, report_id: str) -> None:
        super().__init__(f"label refers to unknown report id: {report_id}")
        self.report_id = report_id


class MissingLabels(LabelError):
    def __init__(self, reason: str = "labels required for evaluation") -> None:
        super().__init__(reason)


# --- evaluation ---


class InvalidCounts(ReportPriorError):
    def __init__(self, reason: str) -> None:
        super().__init__(reason)


class UndefinedMetric(ReportPriorError):
    def __init__(self, reason: str) -> None:
        super().__init__(reason)


# --- weights ---


class WeightOutOfRange(ReportPriorError):
    def __init__(self, name: str, value: float) -> None:
        super().__init__(f"weight {name}={value} outside [0, 1]")
        self.name = name
        self.value = value


# --- synthesis / IO (CLI exit 6) ---


class IoFailure(ReportPriorError):
    def __init__(self, reason: str) -> None:
        super().__init__(reason)
