"""Shared fixtures: trained reference models, lexicons, corpus builders."""

from __future__ import annotations

import json
from importlib.resources import files
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from reportprior import (
    Lexicons,
    SentenceClass,
    SentenceModel,
    WidgetTypeModel,
    default_lexicons,
    generate_widget_samples,
    load_training_sentences,
    train_sentence_classifier,
    train_widget_classifier,
)


@pytest.fixture(scope="session")
def lexicons() -> Lexicons:
    return default_lexicons()


@pytest.fixture(scope="session")
def widget_model() -> WidgetTypeModel:
    return train_widget_classifier(generate_widget_samples(0, 12))


@pytest.fixture(scope="session")
def training_sentences():
    return load_training_sentences(files("reportprior") / "data" / "sentences.json")


@pytest.fixture(scope="session")
def heldout_sentences():
    doc = json.loads((files("reportprior") / "data" / "sentences.json").read_text("utf-8"))
    return [(sentence, SentenceClass(label)) for sentence, label in doc["heldout"]]


@pytest.fixture(scope="session")
def sentence_model(training_sentences, lexicons) -> SentenceModel:
    return train_sentence_classifier(training_sentences, lexicons.stopwords)


def write_png(path: Path, array: np.ndarray) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.asarray(array, dtype=np.uint8)).save(path, format="PNG")


def flat_screen(width: int = 64, height: int = 64, value: int = 200) -> np.ndarray:
    return np.full((height, width, 3), value, dtype=np.uint8)


@pytest.fixture
def make_corpus(tmp_path):
    """Factory writing a corpus directory from compact report dicts.

    Each report dict: {"id", "text", "screenshot"? (HxWx3 array),
    "annotations"? (list of dicts), "nlp"? (sidecar dict)}.
    """

    def build(reports: list[dict], app_id: str = "app-under-test", root_name: str = "corpus") -> Path:
        root = tmp_path / root_name
        ids = []
        for entry in reports:
            report_id = entry["id"]
            ids.append(report_id)
            report_dir = root / "reports" / report_id
            report_dir.mkdir(parents=True, exist_ok=True)
            screen = entry.get("screenshot")
            if screen is None:
                screen = flat_screen()
            write_png(report_dir / "screenshot.png", screen)
            doc = {
                "id": report_id,
                "text": entry.get("text", "The app crashes. Open the app."),
                "screenshot": "screenshot.png",
            }
            if "annotations" in entry:
                doc["annotations"] = entry["annotations"]
            (report_dir / "report.json").write_text(json.dumps(doc), encoding="utf-8")
            if "nlp" in entry:
                (report_dir / "nlp.json").write_text(json.dumps(entry["nlp"]), encoding="utf-8")
        manifest = {"app_id": app_id, "reports": ids, "format_version": 1}
        (root / "manifest.json").write_text(json.dumps(manifest), encoding="utf-8")
        return root

    return build
