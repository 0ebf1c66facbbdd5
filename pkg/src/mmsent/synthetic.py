"""Synthetic class-separated fixtures for exercising the full pipeline.

Feature vectors are isotropic Gaussian noise plus a per-class mean offset
of length `separation` along a random unit direction, so separation=0
carries no signal and large separations are linearly separable.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError
from .pooling import (
    N_CLASSES,
    STATUS_VALID,
    PooledSample,
    Sentiment,
    class_counts,
    write_dataset,
)
from .store import FeatureSpec, write_store

DATASET_FILE = "dataset.json"


def generate_synthetic(
    n_per_class: int,
    features: Sequence[FeatureSpec],
    separation: float,
    seed: int,
    out_dir: Path | str,
) -> tuple[list[PooledSample], dict[str, int]]:
    """Write one store per feature plus dataset.json; returns the samples.

    Labels cycle through the classes, so every class gets exactly
    n_per_class samples. Each FeatureSpec contributes its name and dim;
    the row count is always 3 * n_per_class.
    """
    if n_per_class <= 0:
        raise DataError(f"n_per_class must be positive, got {n_per_class}")
    if separation < 0:
        raise DataError(f"separation must be non-negative, got {separation}")
    if not features:
        raise DataError("at least one feature is required")

    out_dir = Path(out_dir)
    n = N_CLASSES * n_per_class
    ids = [f"s{i:06d}" for i in range(n)]
    labels = [Sentiment(i % N_CLASSES) for i in range(n)]

    rng = np.random.default_rng(seed)
    for spec in features:
        directions = rng.normal(size=(N_CLASSES, spec.dim))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        data = rng.normal(size=(n, spec.dim)) + separation * directions[np.array(labels)]
        write_store(FeatureSpec(spec.name, spec.dim, n), ids, data, out_dir / spec.name)

    samples = [PooledSample(sid, y, STATUS_VALID) for sid, y in zip(ids, labels)]
    counts = class_counts(samples)
    write_dataset(samples, counts, out_dir / DATASET_FILE)
    return samples, counts
