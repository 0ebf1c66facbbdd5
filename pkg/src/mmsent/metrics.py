"""Accuracy, class-size-weighted F1, and cross-validation report emission."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError
from .jsonutil import write_json
from .pooling import N_CLASSES


def _check_pair(preds: Sequence[int], labels: Sequence[int]):
    if len(preds) != len(labels):
        raise DataError(f"preds length {len(preds)} != labels length {len(labels)}")
    if len(preds) == 0:
        raise DataError("empty prediction list")


def accuracy(preds: Sequence[int], labels: Sequence[int]) -> float:
    """Fraction of exact matches."""
    _check_pair(preds, labels)
    hits = sum(1 for p, y in zip(preds, labels) if int(p) == int(y))
    return hits / len(preds)


def weighted_f1(preds: Sequence[int], labels: Sequence[int], n_classes: int = N_CLASSES) -> float:
    """Per-class F1 weighted by true-label support.

    Precision, recall, and F1 are 0 whenever their denominator is 0, so a
    class that is never predicted (or absent altogether) contributes 0
    with its support weight.
    """
    _check_pair(preds, labels)
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    for p, y in zip(preds, labels):
        confusion[int(y), int(p)] += 1

    total = confusion.sum()
    score = 0.0
    for c in range(n_classes):
        tp = confusion[c, c]
        support = confusion[c, :].sum()
        predicted = confusion[:, c].sum()
        precision = tp / predicted if predicted else 0.0
        recall = tp / support if support else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        score += f1 * (support / total)
    return float(score)


def aggregate(values: Sequence[float]) -> dict[str, float]:
    """Arithmetic mean, minimum, and maximum of per-fold metric values."""
    if not values:
        raise DataError("cannot aggregate an empty metric list")
    values = [float(v) for v in values]
    lo, hi = min(values), max(values)
    # Summation round-off can push the mean a few ulp past the extremes;
    # the true mean always lies inside them.
    avg = min(max(sum(values) / len(values), lo), hi)
    return {"avg": avg, "min": lo, "max": hi}


@dataclass(frozen=True)
class CvReport:
    """Per-fold metrics plus avg/min/max aggregates for one run."""

    name: str
    folds: tuple[dict, ...]
    accuracy: dict[str, float]
    weighted_f1: dict[str, float]
    seed: int
    config_digest: str

    def __post_init__(self):
        object.__setattr__(self, "folds", tuple(self.folds))
        for metric in (self.accuracy, self.weighted_f1):
            if not metric["min"] <= metric["avg"] <= metric["max"]:
                raise DataError(f"run '{self.name}': aggregate ordering violated")

    @classmethod
    def from_folds(
        cls, name: str, folds: Sequence[dict], seed: int, config_digest: str
    ) -> "CvReport":
        folds = tuple(sorted((dict(f) for f in folds), key=lambda f: f["index"]))
        return cls(
            name=name,
            folds=folds,
            accuracy=aggregate([f["accuracy"] for f in folds]),
            weighted_f1=aggregate([f["weighted_f1"] for f in folds]),
            seed=seed,
            config_digest=config_digest,
        )

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "folds": [dict(f) for f in self.folds],
            "accuracy": dict(self.accuracy),
            "weighted_f1": dict(self.weighted_f1),
            "seed": self.seed,
            "config_digest": self.config_digest,
        }


def _pct(x: float) -> str:
    return f"{100.0 * x:.2f}"


def format_table(reports: Sequence[CvReport]) -> str:
    """Text table, one row per run, Avg/Min/Max columns per metric."""
    headers = ["run", "acc_avg", "acc_min", "acc_max", "f1_avg", "f1_min", "f1_max"]
    rows = [
        [
            r.name,
            _pct(r.accuracy["avg"]),
            _pct(r.accuracy["min"]),
            _pct(r.accuracy["max"]),
            _pct(r.weighted_f1["avg"]),
            _pct(r.weighted_f1["min"]),
            _pct(r.weighted_f1["max"]),
        ]
        for r in reports
    ]
    widths = [max(len(h), *(len(row[i]) for row in rows)) for i, h in enumerate(headers)]
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)).rstrip(),
        "  ".join("-" * w for w in widths),
    ]
    for row in rows:
        lines.append("  ".join(c.ljust(widths[i]) for i, c in enumerate(row)).rstrip())
    return "\n".join(lines) + "\n"


def emit_report(reports: Sequence[CvReport], path: Path | str, fmt: str = "json") -> Path:
    """Write report.json (always); fmt="table" adds a .txt table next to it."""
    if not reports:
        raise DataError("cannot emit a report with no runs")
    if fmt not in ("json", "table"):
        raise DataError(f"unknown report format '{fmt}'")
    path = Path(path)
    write_json(path, {"runs": [r.to_json() for r in reports]})
    if fmt == "table":
        table_path = path.with_suffix(".txt")
        table_path.write_text(format_table(reports), encoding="utf-8")
    return path
