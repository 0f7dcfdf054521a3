"""Prioritize crowdsourced mobile-app test reports for early bug diversity.

The pipeline turns each report (screenshot + text) into a four-part
feature bundle — problem-widget keypoints, a text embedding of the bug
description, a widget-type histogram of the surrounding screen, and an
action-object reproduction sequence — composes pairwise similarities from
those parts, and greedily orders reports so that dissimilar (likely new)
bugs surface first. Orderings are scored with APFD against labeled bug
categories.
"""

from .config import NULL_REPORT_ID, RunConfig, VALID_NULL_POLICIES, VALID_STRATEGIES
from .corpus import (
    Corpus,
    CorpusStats,
    LabelMap,
    NlpSidecar,
    Report,
    WidgetAnnotation,
    category_count,
    corpus_stats,
    load_corpus,
    load_labels,
)
from .errors import (
    CorpusError,
    DuplicateNull,
    EmptyClass,
    EmptyLabels,
    FeatureError,
    InvalidCounts,
    IoFailure,
    LabelError,
    LexiconError,
    MalformedFeatures,
    MalformedLabels,
    MalformedModel,
    MalformedReport,
    MissingLabels,
    MissingManifest,
    MissingNull,
    ModelError,
    ReportPriorError,
    TooFewReports,
    UndefinedMetric,
    UnknownReportId,
    UnreadableImage,
    WeightOutOfRange,
)
from .evaluation import (
    ComparisonTable,
    ConfusionCounts,
    StrategyResult,
    StrategyRow,
    UnknownStrategy,
    apfd,
    classifier_metrics,
    compare,
    f_measure,
    first_detections,
    ideal_apfd,
    ideal_ordering,
    run_strategy,
    save_results,
)
from .features import (
    ReportFeature,
    build_report_feature,
    load_features,
    null_report_feature,
    save_features,
)
from .lexicons import Lexicons, default_lexicons, load_token_file, load_type_lexicon
from .nlp import (
    ActionObjectPair,
    EmptySentence,
    SentenceClass,
    SentenceModel,
    classify_report_text,
    classify_sentence,
    embed_text,
    extract_action_object_sequence,
    extract_problem_phrase,
    load_sentence_model,
    load_training_sentences,
    save_sentence_model,
    split_sentences,
    tokenize,
    train_sentence_classifier,
)
from .prioritize import AuditEntry, PrioritizedOrder, load_order, prioritize, save_order
from .similarity import (
    SimilarityMatrix,
    SimilarityWeights,
    build_image_similarity_matrix,
    build_similarity_matrix,
    compose,
    dtw_cost,
    load_matrix,
    pairwise_distances_then_normalize,
    save_matrix,
    sim_context_widget_matrix,
    sim_problem_widget,
    sim_reproduction_step,
)
from .synth import (
    ClusterSpec,
    NoiseKnobs,
    SynthSpec,
    generate,
    generate_widget_samples,
    load_spec,
)
from .vision import (
    KeypointSet,
    Widget,
    WidgetType,
    WidgetTypeModel,
    classify_widget_type,
    extract_keypoints,
    extract_widgets,
    load_widget_model,
    locate_problem_widget,
    save_widget_model,
    train_widget_classifier,
    widget_type_histogram,
)

__version__ = "0.1.0"
