"""Greedy ordering: repeatedly pick the report with the lowest minimum
similarity to the already-prioritized pool, seeded with the NULL report.

The NULL report stays in the pool for the whole run under the default
"keep" policy; "drop-after-first" removes it once the first real report
is chosen.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import NULL_REPORT_ID, VALID_NULL_POLICIES
from .errors import MalformedFeatures, MissingNull
from .similarity import SimilarityMatrix


@dataclass(frozen=True)
class AuditEntry:
    id: str
    min_sim: float


@dataclass(frozen=True)
class PrioritizedOrder:
    order: tuple[str, ...]
    audit: tuple[AuditEntry, ...]


def prioritize(matrix: SimilarityMatrix, null_policy: str = "keep") -> PrioritizedOrder:
    """Algorithmic core: argmin over candidates of min-similarity to pool.

    Ties break to the lexicographically smallest report id. The output is
    a permutation of the non-NULL ids.
    """
    if null_policy not in VALID_NULL_POLICIES:
        raise ValueError(f"unknown null policy: {null_policy}")
    ids = matrix.ids
    if NULL_REPORT_ID not in ids:
        raise MissingNull()
    values = matrix.values
    null_index = ids.index(NULL_REPORT_ID)
    candidates = [i for i in range(len(ids)) if i != null_index]

    # min similarity of each candidate to the current pool, updated per pick
    min_to_pool = values[:, null_index].astype(np.float64).copy()
    order: list[str] = []
    audit: list[AuditEntry] = []
    remaining = set(candidates)
    first_pick = True
    while remaining:
        best = min(remaining, key=lambda i: (min_to_pool[i], ids[i]))
        order.append(ids[best])
        audit.append(AuditEntry(id=ids[best], min_sim=float(min_to_pool[best])))
        remaining.discard(best)
        if first_pick and null_policy == "drop-after-first":
            # pool becomes {best}: mins restart from the first real pick
            min_to_pool = values[:, best].astype(np.float64).copy()
        else:
            np.minimum(min_to_pool, values[:, best], out=min_to_pool)
        first_pick = False
    return PrioritizedOrder(order=tuple(order), audit=tuple(audit))


def save_order(result: PrioritizedOrder, path: str | Path) -> None:
    doc = {
        "version": 1,
        "order": list(result.order),
        "audit": [{"id": e.id, "min_sim": e.min_sim} for e in result.audit],
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_order(path: str | Path) -> PrioritizedOrder:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedFeatures(f"cannot read order {path}: {exc}") from exc
    try:
        if doc["version"] != 1:
            raise MalformedFeatures(f"unsupported order version {doc['version']!r}")
        order = tuple(str(i) for i in doc["order"])
        audit = tuple(
            AuditEntry(id=str(e["id"]), min_sim=float(e["min_sim"])) for e in doc["audit"]
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedFeatures(f"malformed order {path}: {exc}") from exc
    return PrioritizedOrder(order=order, audit=audit)
