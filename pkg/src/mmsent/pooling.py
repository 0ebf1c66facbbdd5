"""Annotation parsing and sentiment label pooling for MVSA-style datasets.

Each sample carries an image label and a text label (one vote each from a
single annotator, or three votes each from three annotators). Votes are
pooled per modality by majority, then across modalities: equal labels stand,
a polar label beats neutral, and opposite polarities are a conflict that
filters the sample out.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import Sequence

from .errors import DataError
from .jsonutil import read_json, write_json

STATUS_VALID = "valid"
STATUS_CONFLICT = "conflict_filtered"
STATUS_NO_MAJORITY = "no_majority_filtered"
STATUSES = (STATUS_VALID, STATUS_CONFLICT, STATUS_NO_MAJORITY)


class Sentiment(IntEnum):
    """Three-way sentiment with fixed class indices (stable across runs)."""

    NEGATIVE = 0
    NEUTRAL = 1
    POSITIVE = 2

    @classmethod
    def from_name(cls, name: str) -> "Sentiment":
        try:
            return cls[name.strip().upper()]
        except KeyError:
            raise DataError(f"unknown sentiment label: {name!r}") from None

    @property
    def label(self) -> str:
        return self.name.lower()


NEGATIVE = Sentiment.NEGATIVE
NEUTRAL = Sentiment.NEUTRAL
POSITIVE = Sentiment.POSITIVE
N_CLASSES = len(Sentiment)


@dataclass(frozen=True)
class AnnotationRecord:
    """Raw per-sample votes: one or three (text, image) label pairs."""

    sample_id: str
    image_labels: tuple[Sentiment, ...]
    text_labels: tuple[Sentiment, ...]

    def __post_init__(self):
        object.__setattr__(self, "image_labels", tuple(self.image_labels))
        object.__setattr__(self, "text_labels", tuple(self.text_labels))
        if len(self.image_labels) != len(self.text_labels):
            raise DataError(f"sample '{self.sample_id}': image/text vote counts differ")
        if len(self.image_labels) not in (1, 3):
            raise DataError(
                f"sample '{self.sample_id}': expected 1 or 3 votes per modality, "
                f"got {len(self.image_labels)}"
            )


@dataclass(frozen=True)
class PooledSample:
    """Pooling outcome for one sample: a label iff status is valid."""

    sample_id: str
    label: Sentiment | None
    status: str

    def __post_init__(self):
        if self.status not in STATUSES:
            raise DataError(f"sample '{self.sample_id}': unknown status '{self.status}'")
        if (self.status == STATUS_VALID) != (self.label is not None):
            raise DataError(f"sample '{self.sample_id}': label/status mismatch")


def pool_modality(labels: Sequence[Sentiment]) -> Sentiment | None:
    """Majority vote within one modality; None when three votes have no majority."""
    if len(labels) == 1:
        return labels[0]
    if len(labels) == 3:
        top, n = Counter(labels).most_common(1)[0]
        return top if n >= 2 else None
    raise DataError(f"expected 1 or 3 votes, got {len(labels)}")


def pool_pair(img: Sentiment, txt: Sentiment) -> Sentiment | None:
    """Cross-modality pooling; None marks an opposite-polarity conflict."""
    if img == txt:
        return img
    if img == NEUTRAL:
        return txt
    if txt == NEUTRAL:
        return img
    return None


def pool_record(record: AnnotationRecord) -> PooledSample:
    img = pool_modality(record.image_labels)
    txt = pool_modality(record.text_labels)
    if img is None or txt is None:
        return PooledSample(record.sample_id, None, STATUS_NO_MAJORITY)
    label = pool_pair(img, txt)
    if label is None:
        return PooledSample(record.sample_id, None, STATUS_CONFLICT)
    return PooledSample(record.sample_id, label, STATUS_VALID)


def class_counts(samples: Sequence[PooledSample]) -> dict[str, int]:
    counts = {s.label: 0 for s in Sentiment}
    for s in samples:
        if s.status == STATUS_VALID:
            counts[s.label.label] += 1
    return counts


def build_dataset(records: Sequence[AnnotationRecord]) -> tuple[list[PooledSample], dict[str, int]]:
    """Pool every record; returns samples (input order) and valid-per-class counts."""
    seen = set()
    samples = []
    for rec in records:
        if rec.sample_id in seen:
            raise DataError(f"duplicate sample id '{rec.sample_id}'")
        seen.add(rec.sample_id)
        samples.append(pool_record(rec))
    return samples, class_counts(samples)


def parse_annotation_file(path: Path | str) -> list[AnnotationRecord]:
    """Parse an MVSA labelResultAll.txt-style file.

    Lines are `sample_id` followed by one or three `text,image` label pairs;
    tabs and commas both act as separators, and a leading `ID ...` header is
    skipped.
    """
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = [p.strip() for p in line.replace("\t", ",").split(",") if p.strip()]
            if lineno == 1 and parts[0].lower() == "id":
                continue
            sample_id, votes = parts[0], parts[1:]
            if len(votes) not in (2, 6):
                raise DataError(
                    f"{path}:{lineno}: expected 1 or 3 label pairs, got {len(votes)} labels"
                )
            try:
                labels = [Sentiment.from_name(v) for v in votes]
            except DataError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            records.append(
                AnnotationRecord(sample_id, image_labels=labels[1::2], text_labels=labels[0::2])
            )
    return records


def write_dataset(samples: Sequence[PooledSample], counts: dict[str, int], path: Path | str) -> Path:
    """Emit dataset.json: pooled samples in order plus valid-per-class counts."""
    return write_json(
        path,
        {
            "samples": [
                {
                    "id": s.sample_id,
                    "label": s.label.label if s.label is not None else None,
                    "status": s.status,
                }
                for s in samples
            ],
            "counts": counts,
        },
    )


def load_dataset(path: Path | str) -> tuple[list[PooledSample], dict[str, int]]:
    obj = read_json(path)
    if not isinstance(obj, dict) or "samples" not in obj or "counts" not in obj:
        raise DataError(f"{path}: not a dataset file (missing 'samples'/'counts')")
    samples = []
    for entry in obj["samples"]:
        label = entry.get("label")
        samples.append(
            PooledSample(
                entry["id"],
                Sentiment.from_name(label) if label is not None else None,
                entry["status"],
            )
        )
    return samples, obj["counts"]


def valid_samples(samples: Sequence[PooledSample]) -> list[PooledSample]:
    return [s for s in samples if s.status == STATUS_VALID]
