"""Extraction job specs: feature kind, source, checkpoints, output store."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from .errors import ExtractionError
from .textnorm import MODE_RAW, TEXT_MODES

FEATURE_DIMS = {
    "object": 2048,
    "scene": 2048,
    "affect": 2048,
    "face": 512,
    "clip_image": 512,
    "clip_text": 512,
    "roberta_text": 768,
}
TEXT_KINDS = frozenset({"clip_text", "roberta_text"})
IMAGE_KINDS = frozenset(FEATURE_DIMS) - TEXT_KINDS

# checkpoint keys each kind requires before extraction can start
REQUIRED_CHECKPOINTS = {
    "object": ("weights",),
    "scene": ("weights",),
    "affect": ("weights",),
    "face": ("detector", "weights"),
    "clip_image": ("model",),
    "clip_text": ("model",),
    "roberta_text": ("model",),
}


@dataclass(frozen=True)
class ExtractionJob:
    """One extraction run: a media source mapped to one embedding store.

    `source` is a directory of paired media files (`N.jpg` next to `N.txt`);
    text kinds alternatively accept a single tab-separated `id<TAB>text` file.
    `checkpoints` holds the model files by role; nothing is ever downloaded.
    """

    kind: str
    source: Path
    out: Path
    checkpoints: Mapping[str, Path]
    text_mode: str = MODE_RAW
    feature_name: str = ""
    batch_size: int = 16

    def __post_init__(self):
        if self.kind not in FEATURE_DIMS:
            raise ExtractionError(
                f"unknown feature kind '{self.kind}' (expected one of {sorted(FEATURE_DIMS)})"
            )
        if self.text_mode not in TEXT_MODES:
            raise ExtractionError(f"unknown text mode '{self.text_mode}'")
        if self.kind in IMAGE_KINDS and self.text_mode != MODE_RAW:
            raise ExtractionError(f"text mode does not apply to image kind '{self.kind}'")
        if self.batch_size < 1:
            raise ExtractionError("batch_size must be positive")
        object.__setattr__(self, "source", Path(self.source))
        object.__setattr__(self, "out", Path(self.out))
        object.__setattr__(
            self, "checkpoints", {k: Path(v) for k, v in dict(self.checkpoints).items()}
        )
        for role in REQUIRED_CHECKPOINTS[self.kind]:
            if role not in self.checkpoints:
                raise ExtractionError(f"kind '{self.kind}' needs checkpoint '{role}'")
        if not self.feature_name:
            object.__setattr__(self, "feature_name", self.kind)

    @property
    def dim(self) -> int:
        return FEATURE_DIMS[self.kind]

    def checkpoint(self, role: str) -> Path:
        path = self.checkpoints[role]
        if not path.exists():
            raise FileNotFoundError(f"missing checkpoint: {path}")
        return path


def load_job(path: Path | str) -> ExtractionJob:
    """Read a job spec from JSON; relative paths resolve against the file."""
    path = Path(path)
    obj = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(obj, dict):
        raise ExtractionError(f"{path}: job spec must be a JSON object")
    for key in ("kind", "source", "out", "checkpoints"):
        if key not in obj:
            raise ExtractionError(f"{path}: job spec missing '{key}'")
    base = path.parent

    def resolve(p):
        return Path(os.path.normpath(base / p))

    return ExtractionJob(
        kind=obj["kind"],
        source=resolve(obj["source"]),
        out=resolve(obj["out"]),
        checkpoints={k: resolve(v) for k, v in obj["checkpoints"].items()},
        text_mode=obj.get("text_mode", MODE_RAW),
        feature_name=obj.get("feature_name", ""),
        batch_size=int(obj.get("batch_size", 16)),
    )
