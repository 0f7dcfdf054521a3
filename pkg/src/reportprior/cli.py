"""Command-line surface wiring the pipeline into reproducible stages.

Subcommands::

    extract       corpus directory -> features.json (all reports + NULL)
    prioritize    features.json -> order.json + matrix.json
    evaluate      order.json + labels.json -> APFD printed with 3 decimals
    compare       corpus + labels -> strategy table + results.json
    train-widget  labeled widget crops -> widget model JSON
    train-text    labeled sentences -> sentence model JSON
    synth         synth spec JSON -> generated corpus directory

Exit codes: 0 ok, 1 usage, 2 corpus, 3 model, 4 features, 5 labels, 6 io.
All output files are written atomically (write temp, then rename).
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
from importlib.resources import files
from pathlib import Path
from typing import Callable

import numpy as np
from PIL import Image

from .config import RunConfig, VALID_NULL_POLICIES, VALID_STRATEGIES
from .corpus import Corpus, corpus_stats, load_corpus, load_labels
from .errors import (
    CorpusError,
    FeatureError,
    IoFailure,
    LabelError,
    ModelError,
    ReportPriorError,
    WeightOutOfRange,
)
from .evaluation import UnknownStrategy, apfd, compare, save_results
from .features import (
    ReportFeature,
    build_report_feature,
    load_features,
    null_report_feature,
    save_features,
)
from .lexicons import Lexicons, default_lexicons
from .nlp import (
    SentenceModel,
    load_sentence_model,
    load_training_sentences,
    save_sentence_model,
    train_sentence_classifier,
)
from .prioritize import load_order, prioritize, save_order
from .similarity import SimilarityWeights, build_similarity_matrix, save_matrix
from .synth import generate, generate_widget_samples, load_spec
from .vision import (
    WidgetType,
    WidgetTypeModel,
    load_widget_model,
    save_widget_model,
    train_widget_classifier,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CORPUS = 2
EXIT_MODEL = 3
EXIT_FEATURES = 4
EXIT_LABELS = 5
EXIT_IO = 6

_WIDGET_SAMPLE_SEED = 0
_WIDGET_SAMPLES_PER_CLASS = 12

# Types whose rendered crops carry text, for crops loaded from disk.
_TEXTED_TYPES = frozenset({"BTN", "CTV", "EDT", "SPN", "TXV"})


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract wants 1."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _weight(text: str) -> float:
    try:
        value = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"weight must be in [0, 1], got {text}")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from exc
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text}")
    return value


def _atomic_write(path: str | Path, save: Callable[[str], None]) -> None:
    """Run ``save`` against a temp file, then rename it over ``path``."""
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.")
        os.close(fd)
    except OSError as exc:
        raise IoFailure(f"cannot create {target}: {exc}") from exc
    try:
        save(tmp)
        os.replace(tmp, target)
    except OSError as exc:
        raise IoFailure(f"cannot write {target}: {exc}") from exc
    finally:
        if os.path.exists(tmp):
            try:
                os.unlink(tmp)
            except OSError:
                pass


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    config = RunConfig.from_file(args.config) if getattr(args, "config", None) else RunConfig()
    overrides = {
        name: getattr(args, name, None)
        for name in (
            "alpha",
            "beta",
            "gamma",
            "null_policy",
            "random_runs",
            "seed",
            "widget_model",
            "text_model",
        )
    }
    raw_strategies = getattr(args, "strategies", None)
    if raw_strategies is not None:
        names = tuple(s.strip() for s in raw_strategies.split(",") if s.strip())
        if not names:
            raise UnknownStrategy("<none>")
        for name in names:
            if name not in VALID_STRATEGIES:
                raise UnknownStrategy(name)
        overrides["strategies"] = names
    try:
        return config.override(**overrides)
    except ValueError as exc:
        raise WeightOutOfRange("config", str(exc)) from exc


def _lexicons(config: RunConfig) -> Lexicons:
    return default_lexicons(
        stopwords=config.stopwords,
        actions=config.actions,
        bug_cues=config.bug_cues,
        type_lexicon=config.type_lexicon,
    )


def _widget_model(config: RunConfig) -> WidgetTypeModel:
    if config.widget_model:
        return load_widget_model(config.widget_model)
    samples = generate_widget_samples(_WIDGET_SAMPLE_SEED, _WIDGET_SAMPLES_PER_CLASS)
    return train_widget_classifier(samples)


def _sentence_model(config: RunConfig, lexicons: Lexicons) -> SentenceModel:
    if config.text_model:
        return load_sentence_model(config.text_model)
    bundled = files("reportprior") / "data" / "sentences.json"
    return train_sentence_classifier(load_training_sentences(bundled), lexicons.stopwords)


def _extract_all(corpus: Corpus, config: RunConfig) -> list[ReportFeature]:
    lexicons = _lexicons(config)
    widget_model = _widget_model(config)
    sentence_model = _sentence_model(config, lexicons)
    features = [
        build_report_feature(report, widget_model, sentence_model, lexicons)
        for report in corpus.reports
    ]
    features.append(null_report_feature(corpus_stats(corpus)))
    return features


# ---------------------------------------------------------------------------
# Subcommand handlers


def cmd_extract(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    corpus = load_corpus(args.corpus)
    features = _extract_all(corpus, config)
    _atomic_write(args.out, lambda tmp: save_features(features, tmp))
    print(f"wrote {len(features)} features to {args.out}")
    return EXIT_OK


def cmd_prioritize(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    features = load_features(args.features)
    weights = SimilarityWeights(alpha=config.alpha, beta=config.beta, gamma=config.gamma)
    matrix = build_similarity_matrix(features, weights)
    result = prioritize(matrix, null_policy=config.null_policy)
    matrix_path = args.matrix or str(Path(args.out).parent / "matrix.json")
    _atomic_write(args.out, lambda tmp: save_order(result, tmp))
    _atomic_write(matrix_path, lambda tmp: save_matrix(matrix, tmp))
    print(f"wrote order of {len(result.order)} reports to {args.out}")
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    order = load_order(args.order)
    labels = load_labels(args.labels)
    value = apfd(order.order, labels)
    print(f"{value:.3f}")
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    corpus = load_corpus(args.corpus)
    labels = load_labels(args.labels, corpus)
    features = None
    if any(name in ("deepprior", "image") for name in config.strategies):
        features = _extract_all(corpus, config)
    weights = SimilarityWeights(alpha=config.alpha, beta=config.beta, gamma=config.gamma)
    table = compare(
        corpus,
        labels,
        config.strategies,
        features,
        weights,
        seed=config.seed,
        random_runs=config.random_runs,
        null_policy=config.null_policy,
    )
    print(table.render())
    _atomic_write(args.out, lambda tmp: save_results(table, tmp))
    return EXIT_OK


def _load_widget_crops(data_dir: str) -> list[tuple[np.ndarray, bool, WidgetType]]:
    """Read labeled crops from <data_dir>/<TYPE CODE>/*.png."""
    root = Path(data_dir)
    if not root.is_dir():
        raise IoFailure(f"widget sample directory not found: {root}")
    samples = []
    for wtype in sorted(WidgetType, key=int):
        class_dir = root / wtype.name
        if not class_dir.is_dir():
            continue
        for png in sorted(class_dir.glob("*.png")):
            try:
                crop = np.asarray(Image.open(png).convert("RGB"), dtype=np.uint8)
            except OSError as exc:
                raise IoFailure(f"cannot read widget crop {png}: {exc}") from exc
            samples.append((crop, wtype.name in _TEXTED_TYPES, wtype))
    return samples


def cmd_train_widget(args: argparse.Namespace) -> int:
    if args.data:
        samples = _load_widget_crops(args.data)
    else:
        samples = generate_widget_samples(_WIDGET_SAMPLE_SEED, _WIDGET_SAMPLES_PER_CLASS)
    model = train_widget_classifier(samples)
    _atomic_write(args.out, lambda tmp: save_widget_model(model, tmp))
    print(f"wrote widget model with {len(model.classes)} classes to {args.out}")
    return EXIT_OK


def cmd_train_text(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    lexicons = _lexicons(config)
    data = args.data or str(files("reportprior") / "data" / "sentences.json")
    sentences = load_training_sentences(data)
    model = train_sentence_classifier(sentences, lexicons.stopwords)
    _atomic_write(args.out, lambda tmp: save_sentence_model(model, tmp))
    print(f"wrote sentence model with {len(model.vocab)} vocabulary entries to {args.out}")
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    spec = load_spec(args.spec)
    corpus, labels = generate(spec, args.out)
    print(
        f"wrote {len(corpus)} reports across {len(set(labels.values()))} "
        f"categories to {args.out}"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser assembly


def _add_config_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON config file; flags override its values")
    sub.add_argument("--alpha", type=_weight, help="problem-widget vs description weight")
    sub.add_argument("--beta", type=_weight, help="context-widget vs reproduction weight")
    sub.add_argument("--gamma", type=_weight, help="bug-feature vs context-feature weight")
    sub.add_argument("--null-policy", dest="null_policy", choices=sorted(VALID_NULL_POLICIES))
    sub.add_argument("--random-runs", dest="random_runs", type=_positive_int)
    sub.add_argument("--seed", type=int)
    sub.add_argument("--widget-model", dest="widget_model", help="widget model JSON path")
    sub.add_argument("--text-model", dest="text_model", help="sentence model JSON path")


def _build_parser() -> _Parser:
    parser = _Parser(prog="reportprior", description=__doc__.splitlines()[0])
    commands = parser.add_subparsers(dest="command", required=True)

    extract = commands.add_parser("extract", help="corpus -> features.json")
    extract.add_argument("--corpus", required=True, help="corpus directory")
    extract.add_argument("--out", required=True, help="output features.json")
    _add_config_flags(extract)
    extract.set_defaults(func=cmd_extract)

    prioritize_cmd = commands.add_parser("prioritize", help="features.json -> order.json")
    prioritize_cmd.add_argument("--features", required=True, help="features.json path")
    prioritize_cmd.add_argument("--out", required=True, help="output order.json")
    prioritize_cmd.add_argument("--matrix", help="output matrix.json (default: sibling of --out)")
    _add_config_flags(prioritize_cmd)
    prioritize_cmd.set_defaults(func=cmd_prioritize)

    evaluate = commands.add_parser("evaluate", help="order.json + labels.json -> APFD")
    evaluate.add_argument("--order", required=True, help="order.json path")
    evaluate.add_argument("--labels", required=True, help="labels.json path")
    evaluate.set_defaults(func=cmd_evaluate)

    compare_cmd = commands.add_parser("compare", help="run strategies and tabulate APFD")
    compare_cmd.add_argument("--corpus", required=True, help="corpus directory")
    compare_cmd.add_argument("--labels", required=True, help="labels.json path")
    compare_cmd.add_argument("--out", default="results.json", help="output results.json")
    compare_cmd.add_argument(
        "--strategies",
        help=f"comma-separated subset of {', '.join(sorted(VALID_STRATEGIES))}",
    )
    _add_config_flags(compare_cmd)
    compare_cmd.set_defaults(func=cmd_compare)

    train_widget = commands.add_parser("train-widget", help="train the widget-type classifier")
    train_widget.add_argument("--data", help="directory of <TYPE>/*.png crops (default: bundled)")
    train_widget.add_argument("--out", required=True, help="output model JSON")
    train_widget.set_defaults(func=cmd_train_widget)

    train_text = commands.add_parser("train-text", help="train the sentence classifier")
    train_text.add_argument("--data", help="labeled sentences JSON (default: bundled)")
    train_text.add_argument("--out", required=True, help="output model JSON")
    _add_config_flags(train_text)
    train_text.set_defaults(func=cmd_train_text)

    synth = commands.add_parser("synth", help="generate a synthetic corpus")
    synth.add_argument("--spec", required=True, help="synth spec JSON")
    synth.add_argument("--out", required=True, help="output corpus directory")
    synth.set_defaults(func=cmd_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (UnknownStrategy, WeightOutOfRange, ValueError) as exc:
        print(f"reportprior: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CorpusError as exc:
        print(f"reportprior: corpus error: {exc}", file=sys.stderr)
        return EXIT_CORPUS
    except ModelError as exc:
        print(f"reportprior: model error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except FeatureError as exc:
        print(f"reportprior: feature error: {exc}", file=sys.stderr)
        return EXIT_FEATURES
    except LabelError as exc:
        print(f"reportprior: label error: {exc}", file=sys.stderr)
        return EXIT_LABELS
    except (IoFailure, OSError) as exc:
        print(f"reportprior: io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ReportPriorError as exc:
        print(f"reportprior: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
