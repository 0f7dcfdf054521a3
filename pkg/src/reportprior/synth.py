"""Deterministic synthetic corpus generator with planted duplicate clusters.

Renders small phone-style screenshots (272x480, flat-color widgets with
pseudo-glyph text) plus bug/step texts for a configurable set of duplicate
clusters, and writes a corpus directory in the standard on-disk layout
together with a ``labels.json`` ground truth. Three noise knobs model the
classic duplicate-report confounds:

    theme_shift       same screen re-rendered under per-report color themes
    shared_screen     consecutive cluster pairs share one screen layout while
                      reporting different bugs on it
    screen_variation  the same bug captured on differently cropped screens:
                      one member per cluster shows the full widget-rich
                      screen, the rest show sparser captures

With all knobs off, every member of a cluster is byte-identical.
"""

from __future__ import annotations

import dataclasses
import json
from hashlib import blake2b
from pathlib import Path

import numpy as np
from PIL import Image

from .corpus import Corpus, LabelMap, load_corpus, load_labels
from .errors import IoFailure
from .vision import WidgetType

__all__ = [
    "ClusterSpec",
    "NoiseKnobs",
    "SynthSpec",
    "load_spec",
    "generate",
    "generate_widget_samples",
]

SCREEN_W, SCREEN_H = 272, 480
_MARGIN = 8
_SLOT_W, _SLOT_H = 128, 58
_GRID_COLS, _GRID_ROWS = 2, 8
_NORMAL_CONTEXT = 6
_RICH_CONTEXT = 14


# ---------------------------------------------------------------------------
# Spec types


@dataclasses.dataclass(frozen=True)
class ClusterSpec:
    category: str
    size: int


@dataclasses.dataclass(frozen=True)
class NoiseKnobs:
    theme_shift: bool = False
    shared_screen: bool = False
    screen_variation: bool = False


@dataclasses.dataclass(frozen=True)
class SynthSpec:
    seed: int
    clusters: tuple[ClusterSpec, ...]
    noise: NoiseKnobs = NoiseKnobs()

    def __post_init__(self) -> None:
        if not self.clusters:
            raise IoFailure("synth spec needs at least one cluster")
        for cluster in self.clusters:
            if not cluster.category or not isinstance(cluster.category, str):
                raise IoFailure("cluster category must be a non-empty string")
            if not isinstance(cluster.size, int) or cluster.size < 1:
                raise IoFailure(f"cluster size must be >= 1, got {cluster.size!r}")
        categories = [c.category for c in self.clusters]
        if len(set(categories)) != len(categories):
            raise IoFailure("cluster categories must be distinct")
        if not isinstance(self.seed, int):
            raise IoFailure("synth seed must be an integer")

    @property
    def total(self) -> int:
        return sum(c.size for c in self.clusters)


def load_spec(path: str | Path) -> SynthSpec:
    """Read a SynthSpec from JSON: {"seed", "clusters", "noise"?}."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            doc = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise IoFailure(f"cannot read synth spec {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise IoFailure("synth spec must be a JSON object")
    unknown = set(doc) - {"seed", "clusters", "noise"}
    if unknown:
        raise IoFailure(f"unknown synth spec keys: {sorted(unknown)}")
    raw_clusters = doc.get("clusters")
    if not isinstance(raw_clusters, list):
        raise IoFailure("synth spec clusters must be a list")
    clusters = []
    for entry in raw_clusters:
        if not isinstance(entry, dict) or set(entry) != {"category", "size"}:
            raise IoFailure("each cluster needs exactly category and size")
        clusters.append(ClusterSpec(category=entry["category"], size=entry["size"]))
    raw_noise = doc.get("noise", {})
    if not isinstance(raw_noise, dict):
        raise IoFailure("synth spec noise must be an object")
    bad = set(raw_noise) - {f.name for f in dataclasses.fields(NoiseKnobs)}
    if bad:
        raise IoFailure(f"unknown noise knobs: {sorted(bad)}")
    if not all(isinstance(v, bool) for v in raw_noise.values()):
        raise IoFailure("noise knobs must be booleans")
    seed = doc.get("seed")
    if not isinstance(seed, int):
        raise IoFailure("synth spec seed must be an integer")
    return SynthSpec(seed=seed, clusters=tuple(clusters), noise=NoiseKnobs(**raw_noise))


# ---------------------------------------------------------------------------
# Themes and glyph rendering

# (background, widget fill, accent, text, border) as RGB triples.
_THEMES: tuple[tuple[tuple[int, int, int], ...], ...] = (
    ((246, 246, 248), (226, 228, 233), (66, 118, 214), (38, 40, 46), (150, 154, 162)),
    ((24, 26, 32), (52, 56, 66), (94, 156, 255), (222, 226, 234), (96, 102, 114)),
    ((240, 234, 222), (222, 210, 190), (188, 96, 48), (60, 48, 36), (160, 140, 118)),
    ((230, 242, 236), (204, 226, 214), (36, 140, 100), (28, 52, 42), (120, 160, 142)),
    ((242, 234, 244), (224, 208, 230), (142, 70, 180), (52, 34, 60), (164, 134, 176)),
    ((234, 240, 248), (210, 222, 238), (210, 80, 90), (30, 38, 52), (130, 148, 172)),
)


def _glyph_bits(ch: str) -> int:
    digest = blake2b(ch.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def _draw_rect(canvas: np.ndarray, x: int, y: int, w: int, h: int, color) -> None:
    canvas[y : y + h, x : x + w] = color


def _draw_border(canvas: np.ndarray, x: int, y: int, w: int, h: int, color, thickness: int = 1) -> None:
    t = thickness
    canvas[y : y + t, x : x + w] = color
    canvas[y + h - t : y + h, x : x + w] = color
    canvas[y : y + h, x : x + t] = color
    canvas[y : y + h, x + w - t : x + w] = color


def _draw_text(canvas: np.ndarray, x: int, y: int, text: str, color, max_w: int) -> None:
    """Pseudo-glyph text: one deterministic 5x8 dot pattern per character."""
    cx = x
    for ch in text:
        if ch == " ":
            cx += 4
            continue
        if cx + 5 > x + max_w:
            break
        bits = _glyph_bits(ch)
        for row in range(8):
            for col in range(5):
                if (bits >> (row * 5 + col)) & 1:
                    canvas[y + row, cx + col] = color
        cx += 6


# ---------------------------------------------------------------------------
# Widget rendering recipes

# Per type: (width, height, carries text). Sizes fit inside one layout slot.
_RECIPES: dict[WidgetType, tuple[int, int, bool]] = {
    WidgetType.BTN: (100, 36, True),
    WidgetType.CHB: (22, 22, False),
    WidgetType.CTV: (118, 28, True),
    WidgetType.EDT: (118, 34, True),
    WidgetType.IMB: (40, 40, False),
    WidgetType.IMV: (110, 46, False),
    WidgetType.PBH: (110, 12, False),
    WidgetType.PBV: (12, 46, False),
    WidgetType.RBU: (20, 20, False),
    WidgetType.RBA: (110, 22, False),
    WidgetType.SKB: (110, 16, False),
    WidgetType.SWC: (44, 24, False),
    WidgetType.SPN: (110, 30, True),
    WidgetType.TXV: (110, 22, True),
}

_CONTEXT_TEXTS: dict[WidgetType, str] = {
    WidgetType.BTN: "Ok Go",
    WidgetType.CTV: "Item Row",
    WidgetType.EDT: "Hint",
    WidgetType.SPN: "Pick One",
    WidgetType.TXV: "Info Note",
}


def _render_widget(
    canvas: np.ndarray,
    x: int,
    y: int,
    wtype: WidgetType,
    text: str | None,
    theme: tuple[tuple[int, int, int], ...],
) -> None:
    bg, fill, accent, ink, border = theme
    w, h = _RECIPES[wtype][0], _RECIPES[wtype][1]
    white = (252, 252, 252)
    if wtype is WidgetType.BTN:
        _draw_rect(canvas, x, y, w, h, accent)
        _draw_border(canvas, x, y, w, h, border)
        if text:
            _draw_text(canvas, x + 8, y + (h - 8) // 2, text, white, w - 16)
    elif wtype is WidgetType.CHB:
        _draw_rect(canvas, x, y, w, h, accent)
        _draw_border(canvas, x, y, w, h, border, 2)
        for i in range(5):  # check mark strokes
            canvas[y + 12 + i - i, x + 5 + i] = white
            canvas[y + 15 - i, x + 9 + i] = white
    elif wtype is WidgetType.CTV:
        _draw_rect(canvas, x, y, w, h, fill)
        _draw_rect(canvas, x + 4, y + 8, 12, 12, accent)
        if text:
            _draw_text(canvas, x + 22, y + (h - 8) // 2, text, ink, w - 26)
    elif wtype is WidgetType.EDT:
        _draw_rect(canvas, x, y, w, h, white)
        _draw_rect(canvas, x, y + h - 3, w, 3, accent)
        if text:
            _draw_text(canvas, x + 6, y + (h - 8) // 2 - 1, text, border, w - 12)
    elif wtype is WidgetType.IMB:
        _draw_rect(canvas, x, y, w, h, ink)
        _draw_rect(canvas, x + w // 2 - 2, y + 6, 4, h - 12, white)
        _draw_rect(canvas, x + 6, y + h // 2 - 2, w - 12, 4, white)
    elif wtype is WidgetType.IMV:
        ramp = np.linspace(60, 210, w, dtype=np.uint8)
        patch = np.stack([np.tile(ramp, (h, 1))] * 3, axis=-1)
        patch[..., 1] = np.linspace(80, 180, h, dtype=np.uint8)[:, None]
        canvas[y : y + h, x : x + w] = patch
        yy, xx = np.ogrid[:h, :w]
        disk = (yy - h // 2) ** 2 + (xx - w // 3) ** 2 <= 81
        canvas[y : y + h, x : x + w][disk] = accent
    elif wtype is WidgetType.PBH:
        _draw_rect(canvas, x, y, w, h, fill)
        _draw_border(canvas, x, y, w, h, border)
        _draw_rect(canvas, x + 1, y + 1, int(w * 0.6), h - 2, accent)
    elif wtype is WidgetType.PBV:
        _draw_rect(canvas, x, y, w, h, fill)
        _draw_border(canvas, x, y, w, h, border)
        filled = int(h * 0.55)
        _draw_rect(canvas, x + 1, y + h - filled, w - 2, filled - 1, accent)
    elif wtype is WidgetType.RBU:
        _draw_rect(canvas, x, y, w, h, white)
        yy, xx = np.ogrid[:h, :w]
        r2 = (yy - h / 2 + 0.5) ** 2 + (xx - w / 2 + 0.5) ** 2
        ring = (r2 <= 64) & (r2 >= 36)
        canvas[y : y + h, x : x + w][ring] = ink
        canvas[y : y + h, x : x + w][r2 <= 9] = accent
    elif wtype is WidgetType.RBA:
        _draw_rect(canvas, x, y, w, h, fill)
        for i in range(5):
            cx = x + 10 + i * 22
            color = accent if i < 3 else border
            for d in range(6):  # diamond
                canvas[y + 5 + d, cx + 5 - abs(3 - d) : cx + 6 + abs(3 - d)] = color
    elif wtype is WidgetType.SKB:
        _draw_rect(canvas, x, y + h // 2 - 2, w, 4, border)
        _draw_rect(canvas, x, y + h // 2 - 2, int(w * 0.4), 4, accent)
        thumb_x = x + int(w * 0.4) - 5
        yy, xx = np.ogrid[:h, :w]
        disk = (yy - h / 2 + 0.5) ** 2 + (xx - (thumb_x - x) - 5) ** 2 <= 36
        canvas[y : y + h, x : x + w][disk] = accent
    elif wtype is WidgetType.SWC:
        _draw_rect(canvas, x, y + 4, w, h - 8, border)
        _draw_rect(canvas, x + 1, y + 5, w - 2, h - 10, accent)
        _draw_rect(canvas, x + w - h + 2, y + 2, h - 4, h - 4, white)
        _draw_border(canvas, x + w - h + 2, y + 2, h - 4, h - 4, border)
    elif wtype is WidgetType.SPN:
        _draw_rect(canvas, x, y, w, h, fill)
        _draw_border(canvas, x, y, w, h, border)
        if text:
            _draw_text(canvas, x + 6, y + (h - 8) // 2, text, ink, w - 28)
        for d in range(6):  # dropdown arrow
            canvas[y + h // 2 - 3 + d, x + w - 18 + d : x + w - 6 - d] = ink
    elif wtype is WidgetType.TXV:
        if text:
            _draw_text(canvas, x + 2, y + (h - 8) // 2, text, ink, w - 4)
    else:  # pragma: no cover - all 14 types handled above
        raise ValueError(f"no recipe for {wtype}")


# ---------------------------------------------------------------------------
# Cluster archetypes

# Each archetype fixes the bug's problem widget, the cluster texts, and the
# screen's dominant context widget type. Bug sentences keep at least two
# failure-cue tokens from the bundled sentence fixture vocabulary; problem
# phrases overlap the problem-widget text at score >= 0.5 by construction.
# Step texts always yield exactly four action-object pairs so cross-cluster
# sequence similarity stays on the 0.5 floor of the pair-cost ladder.


@dataclasses.dataclass(frozen=True)
class _Archetype:
    problem_type: WidgetType
    problem_text: str
    bug_text: str
    steps_text: str
    context_type: WidgetType
    problem_slot: int


_ARCHETYPES: tuple[_Archetype, ...] = (
    _Archetype(
        WidgetType.BTN,
        "Login Button",
        "Login button freezes and crashes.",
        'Launch the app. Tap the username field and type "alice". Press the login button.',
        WidgetType.CTV,
        0,
    ),
    _Archetype(
        WidgetType.IMB,
        "Share Icon",
        "Share icon overlaps and turns black.",
        "Open the gallery. Select the first photo. Swipe left and press the share icon.",
        WidgetType.TXV,
        3,
    ),
    _Archetype(
        WidgetType.EDT,
        "Search Field",
        "Search field clears itself.",
        'Open the library tab. Tap the search field. Type "jazz" and submit the query.',
        WidgetType.IMV,
        5,
    ),
    _Archetype(
        WidgetType.SWC,
        "Dark Mode Switch",
        "Dark mode switch resets every restart.",
        "Open the settings page. Scroll to the display section. Select appearance and press the dark mode switch.",
        WidgetType.PBH,
        2,
    ),
    _Archetype(
        WidgetType.SKB,
        "Volume Slider",
        "Volume slider stuck at zero.",
        "Start any song. Rotate the phone. Drag the volume slider and shake the device.",
        WidgetType.CHB,
        9,
    ),
    _Archetype(
        WidgetType.SPN,
        "Language Spinner",
        "Language spinner text garbled.",
        "Open the profile menu. Choose preferences. Scroll down and tap the language spinner.",
        WidgetType.RBU,
        1,
    ),
    _Archetype(
        WidgetType.IMV,
        "Cover Art",
        "Cover art turns black.",
        "Launch the player. Navigate to the album view. Pick the last record and zoom the cover art.",
        WidgetType.SKB,
        6,
    ),
    _Archetype(
        WidgetType.CHB,
        "Remember Me Checkbox",
        "Remember me checkbox flashbacks to home.",
        "Open the account screen. Enter the nickname. Click the remember me checkbox and close the app.",
        WidgetType.SWC,
        4,
    ),
    _Archetype(
        WidgetType.RBA,
        "Rating Stars",
        "Rating stars disappear after voting.",
        "Open the review page. Slide the stars row. Hold the vote area and rotate the screen.",
        WidgetType.SPN,
        11,
    ),
    _Archetype(
        WidgetType.TXV,
        "Status Message",
        "Status message empty after refresh.",
        "Restart the app. Go to the dashboard. Hold the banner and slide the page edge.",
        WidgetType.EDT,
        7,
    ),
)


def _slot_origin(slot: int) -> tuple[int, int]:
    row, col = divmod(slot, _GRID_COLS)
    return _MARGIN + col * _SLOT_W + 4, _MARGIN + row * _SLOT_H + 4


def _render_screen(
    arch: _Archetype,
    theme_index: int,
    context_count: int,
    twin: _Archetype | None,
) -> tuple[np.ndarray, list[dict]]:
    """Render one report screen; returns (pixels, annotation dicts)."""
    theme = _THEMES[theme_index]
    canvas = np.empty((SCREEN_H, SCREEN_W, 3), dtype=np.uint8)
    canvas[:] = theme[0]

    used = {arch.problem_slot}
    placements: list[tuple[int, WidgetType, str | None]] = [
        (arch.problem_slot, arch.problem_type, arch.problem_text)
    ]
    if twin is not None:
        twin_slot = twin.problem_slot
        while twin_slot in used:
            twin_slot = (twin_slot + 1) % (_GRID_COLS * _GRID_ROWS)
        used.add(twin_slot)
        placements.append((twin_slot, twin.problem_type, twin.problem_text))

    free = [s for s in range(_GRID_COLS * _GRID_ROWS) if s not in used]
    ctx_type = arch.context_type
    ctx_text = _CONTEXT_TEXTS.get(ctx_type)
    for slot in free[:context_count]:
        placements.append((slot, ctx_type, ctx_text))

    annotations: list[dict] = []
    for slot, wtype, text in sorted(placements, key=lambda p: p[0]):
        x, y = _slot_origin(slot)
        _render_widget(canvas, x, y, wtype, text, theme)
        w, h = _RECIPES[wtype][0], _RECIPES[wtype][1]
        entry: dict = {"bbox": [int(x), int(y), int(w), int(h)], "type": wtype.name}
        if text is not None:
            entry["text"] = text
        annotations.append(entry)
    return canvas, annotations


# ---------------------------------------------------------------------------
# Corpus generation


def generate(spec: SynthSpec, out: str | Path) -> tuple[Corpus, LabelMap]:
    """Write a corpus + labels.json under ``out`` and load them back."""
    root = Path(out)
    rng = np.random.default_rng([spec.seed, 11])
    k = len(spec.clusters)

    # Per-report cluster assignment: ids stay sorted, clusters shuffled.
    membership: list[tuple[int, int]] = []  # (cluster index, member index)
    for ci, cluster in enumerate(spec.clusters):
        membership.extend((ci, mi) for mi in range(cluster.size))
    order = rng.permutation(len(membership))
    membership = [membership[i] for i in order]
    ids = [f"r{i:03d}" for i in range(len(membership))]

    arch_of = [_ARCHETYPES[ci % len(_ARCHETYPES)] for ci in range(k)]
    twin_of: list[_Archetype | None] = [None] * k
    context_type_of = [arch_of[ci].context_type for ci in range(k)]
    if spec.noise.shared_screen:
        for a in range(0, k - 1, 2):
            b = a + 1
            twin_of[a], twin_of[b] = arch_of[b], arch_of[a]
            context_type_of[b] = context_type_of[a]

    try:
        root.mkdir(parents=True, exist_ok=True)
        for report_id, (ci, mi) in zip(ids, membership):
            arch = arch_of[ci]
            if context_type_of[ci] is not arch.context_type:
                arch = dataclasses.replace(arch, context_type=context_type_of[ci])
            theme_index = int(rng.integers(0, len(_THEMES))) if spec.noise.theme_shift else 0
            if spec.noise.screen_variation:
                count = _RICH_CONTEXT if mi == 0 else _NORMAL_CONTEXT + int(rng.integers(0, 2))
            else:
                count = _NORMAL_CONTEXT
            canvas, annotations = _render_screen(arch, theme_index, count, twin_of[ci])
            report_dir = root / "reports" / report_id
            report_dir.mkdir(parents=True, exist_ok=True)
            Image.fromarray(canvas).save(report_dir / "screenshot.png", format="PNG")
            doc = {
                "id": report_id,
                "text": f"{arch.bug_text} {arch.steps_text}",
                "screenshot": "screenshot.png",
                "annotations": annotations,
            }
            with open(report_dir / "report.json", "w", encoding="utf-8") as handle:
                json.dump(doc, handle, indent=1, sort_keys=True)
        manifest = {
            "app_id": f"synth-{spec.seed:04d}",
            "reports": ids,
            "format_version": 1,
        }
        with open(root / "manifest.json", "w", encoding="utf-8") as handle:
            json.dump(manifest, handle, indent=1, sort_keys=True)
        labels = {
            report_id: spec.clusters[ci].category
            for report_id, (ci, _) in zip(ids, membership)
        }
        with open(root / "labels.json", "w", encoding="utf-8") as handle:
            json.dump(labels, handle, indent=1, sort_keys=True)
    except OSError as exc:
        raise IoFailure(f"cannot write corpus under {root}: {exc}") from exc

    return load_corpus(root), load_labels(root / "labels.json")


def generate_widget_samples(
    seed: int, per_class: int
) -> list[tuple[np.ndarray, bool, WidgetType]]:
    """Render labeled standalone widget crops for classifier training."""
    rng = np.random.default_rng([seed, 3])
    # A single palette keeps per-type colors a stable signature; variation
    # comes from scale and brightness jitter instead of palette swaps, which
    # would drown the color statistics the classifier relies on.
    theme = _THEMES[0]
    samples: list[tuple[np.ndarray, bool, WidgetType]] = []
    for wtype in sorted(WidgetType, key=int):
        base_w, base_h, has_text = _RECIPES[wtype]
        for _ in range(per_class):
            scale = float(rng.uniform(0.9, 1.25))
            w = max(8, int(round(base_w * scale)))
            h = max(8, int(round(base_h * scale)))
            canvas = np.empty((base_h + 8, base_w + 8, 3), dtype=np.uint8)
            canvas[:] = theme[0]
            text = _CONTEXT_TEXTS.get(wtype, "Label") if has_text else None
            _render_widget(canvas, 4, 4, wtype, text, theme)
            crop = canvas[4 : 4 + base_h, 4 : 4 + base_w]
            crop = np.asarray(
                Image.fromarray(crop).resize((w, h), Image.NEAREST), dtype=np.int16
            )
            jitter = int(rng.integers(-6, 7))
            crop = np.clip(crop + jitter, 0, 255).astype(np.uint8)
            samples.append((crop, has_text, wtype))
    return samples
