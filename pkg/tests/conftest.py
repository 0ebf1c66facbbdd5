"""Shared helpers for the test suite."""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mmsent import FeatureSpec, PooledSample, Sentiment
from mmsent.pooling import STATUS_VALID


def make_samples(counts: dict[Sentiment, int]) -> list[PooledSample]:
    """Valid samples with the requested per-class counts, ids x000000.."""
    samples = []
    i = 0
    for label, n in counts.items():
        for _ in range(n):
            samples.append(PooledSample(f"x{i:06d}", label, STATUS_VALID))
            i += 1
    return samples


@pytest.fixture
def store_dir(tmp_path):
    """A written 3-row store plus its source arrays."""
    from mmsent import write_store

    ids = ["a", "b", "c"]
    data = np.arange(12, dtype=np.float32).reshape(3, 4)
    path = write_store(FeatureSpec("toy", 4, 3), ids, data, tmp_path / "toy")
    return path, ids, data
