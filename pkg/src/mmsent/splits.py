"""Deterministic stratified k-fold split generation and persistence.

Every class is shuffled with a seeded RNG and dealt into k test buckets.
Fold i tests on bucket i, validates on bucket i+1 (mod k), and trains on
the rest, so each sample is tested exactly once and the 8:1:1 ratio holds
for k=10. Remainder samples rotate across buckets class by class, keeping
every bucket within one sample of n/k overall.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError
from .jsonutil import read_json, write_json
from .pooling import PooledSample, Sentiment, valid_samples


@dataclass(frozen=True)
class FoldSpec:
    """One cross-validation fold: disjoint train/val/test id lists."""

    index: int
    train_ids: tuple[str, ...]
    val_ids: tuple[str, ...]
    test_ids: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "train_ids", tuple(self.train_ids))
        object.__setattr__(self, "val_ids", tuple(self.val_ids))
        object.__setattr__(self, "test_ids", tuple(self.test_ids))
        if self.index < 0:
            raise DataError(f"fold index must be non-negative, got {self.index}")
        groups = (set(self.train_ids), set(self.val_ids), set(self.test_ids))
        if sum(len(g) for g in groups) != len(set().union(*groups)):
            raise DataError(f"fold {self.index}: train/val/test ids overlap")

    @property
    def all_ids(self) -> frozenset[str]:
        return frozenset(self.train_ids) | set(self.val_ids) | set(self.test_ids)


@dataclass(frozen=True)
class SplitSet:
    """Folds plus the inputs needed to reproduce or verify them."""

    seed: int
    k: int
    dataset_hash: str
    folds: tuple[FoldSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "folds", tuple(self.folds))


def stratified_kfold(samples: Sequence[PooledSample], k: int, seed: int) -> list[FoldSpec]:
    """Split valid samples into k stratified folds, deterministically per seed.

    Samples with a filtered status are ignored. Each class must have at
    least k members so that every test bucket sees every class.
    """
    if k < 2:
        raise DataError(f"k must be at least 2, got {k}")
    valid = valid_samples(samples)
    by_class: dict[Sentiment, list[str]] = {c: [] for c in Sentiment}
    for s in valid:
        by_class[s.label].append(s.sample_id)
    for c, ids in by_class.items():
        if len(ids) < k:
            raise DataError(f"class '{c.label}' has {len(ids)} samples, fewer than k={k}")

    rng = np.random.default_rng(seed)
    buckets: list[list[str]] = [[] for _ in range(k)]
    # Rotate where each class's n_c mod k extras land so no bucket collects
    # every class's remainder; total bucket sizes then stay within 1 of n/k.
    offset = 0
    for c in Sentiment:
        ids = by_class[c]
        shuffled = [ids[j] for j in rng.permutation(len(ids))]
        base, rem = divmod(len(ids), k)
        pos = 0
        for b in range(k):
            take = base + (1 if (b - offset) % k < rem else 0)
            buckets[b].extend(shuffled[pos : pos + take])
            pos += take
        offset = (offset + rem) % k

    folds = []
    for i in range(k):
        held = {i, (i + 1) % k}
        train = [sid for b in range(k) if b not in held for sid in buckets[b]]
        folds.append(FoldSpec(i, train, buckets[(i + 1) % k], buckets[i]))
    return folds


def validate_splits(folds: Sequence[FoldSpec], samples: Sequence[PooledSample]) -> list[str]:
    """Check fold invariants against the dataset; returns violation messages."""
    violations = []
    valid = valid_samples(samples)
    all_ids = {s.sample_id for s in valid}
    label_of = {s.sample_id: s.label for s in valid}
    k = len(folds)

    for fold in folds:
        for name, ids in (("train", fold.train_ids), ("val", fold.val_ids), ("test", fold.test_ids)):
            unknown = set(ids) - all_ids
            if unknown:
                violations.append(f"fold {fold.index}: {name} has {len(unknown)} unknown ids")
        if fold.all_ids != all_ids:
            violations.append(f"fold {fold.index}: train/val/test do not cover the dataset")

    tested: dict[str, int] = {}
    for fold in folds:
        for sid in fold.test_ids:
            tested[sid] = tested.get(sid, 0) + 1
    never = all_ids - tested.keys()
    if never:
        violations.append(f"{len(never)} ids never tested")
    multi = sorted(sid for sid, n in tested.items() if n > 1)
    for sid in multi:
        violations.append(f"id '{sid}' tested in {tested[sid]} folds")

    class_sizes = {c: sum(1 for s in valid if s.label == c) for c in Sentiment}
    for fold in folds:
        for name, ids in (("val", fold.val_ids), ("test", fold.test_ids)):
            for c in Sentiment:
                got = sum(1 for sid in ids if label_of.get(sid) == c)
                lo, hi = class_sizes[c] // k, -(-class_sizes[c] // k)
                if not lo <= got <= hi:
                    violations.append(
                        f"fold {fold.index}: {name} has {got} '{c.label}' samples, "
                        f"expected {lo}..{hi}"
                    )
    return violations


def save_splits(splits: SplitSet, path: Path | str) -> Path:
    return write_json(
        path,
        {
            "seed": splits.seed,
            "k": splits.k,
            "dataset_hash": splits.dataset_hash,
            "folds": [
                {
                    "index": f.index,
                    "train": list(f.train_ids),
                    "val": list(f.val_ids),
                    "test": list(f.test_ids),
                }
                for f in splits.folds
            ],
        },
    )


def load_splits(path: Path | str) -> SplitSet:
    obj = read_json(path)
    try:
        folds = tuple(
            FoldSpec(f["index"], f["train"], f["val"], f["test"]) for f in obj["folds"]
        )
        return SplitSet(int(obj["seed"]), int(obj["k"]), str(obj["dataset_hash"]), folds)
    except (KeyError, TypeError) as exc:
        raise DataError(f"{path}: not a splits file ({exc})") from None
