"""On-disk embedding stores: manifest + id list + raw float32 matrix.

A store is a directory with three files:

    manifest.json   {"feature", "dim", "count", "dtype": "f32le",
                     "ids_file": "ids.txt", "data_file": "data.bin"}
    ids.txt         one sample id per line, UTF-8, LF-terminated; line order
                    defines row order
    data.bin        count x dim IEEE-754 binary32 little-endian values,
                    row-major, no header

The format is deliberately plain so any language can produce or consume it;
feature extraction and training meet only at this boundary.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError
from .jsonutil import write_json

MANIFEST_FILE = "manifest.json"
IDS_FILE = "ids.txt"
DATA_FILE = "data.bin"
DTYPE_TAG = "f32le"


def _check_ids(ids: Sequence[str], feature: str) -> None:
    seen = set()
    for sid in ids:
        if not isinstance(sid, str) or not sid:
            raise DataError(f"feature '{feature}': sample ids must be non-empty strings")
        if "\n" in sid or "\r" in sid:
            raise DataError(f"feature '{feature}': sample id {sid!r} contains a line break")
        if sid in seen:
            raise DataError(f"feature '{feature}': duplicate sample id '{sid}'")
        seen.add(sid)


@dataclass(frozen=True)
class FeatureSpec:
    """Name and shape of one feature table."""

    name: str
    dim: int
    count: int

    def __post_init__(self):
        if not self.name:
            raise DataError("feature name must be non-empty")
        if self.dim <= 0:
            raise DataError(f"feature '{self.name}': dim must be positive, got {self.dim}")
        if self.count < 0:
            raise DataError(f"feature '{self.name}': count must be non-negative, got {self.count}")


@dataclass(frozen=True)
class EmbeddingMatrix:
    """A feature table: float32 rows keyed by sample id, immutable after creation.

    Row i of ``data`` belongs to ``ids[i]``. The array is stored C-contiguous,
    float32, and marked read-only so loaded features can be shared freely
    across folds.
    """

    spec: FeatureSpec
    ids: tuple[str, ...]
    data: np.ndarray

    def __post_init__(self):
        ids = tuple(self.ids)
        object.__setattr__(self, "ids", ids)
        _check_ids(ids, self.spec.name)
        if len(ids) != self.spec.count:
            raise DataError(
                f"feature '{self.spec.name}': {len(ids)} ids vs declared count {self.spec.count}"
            )
        data = np.asarray(self.data)
        if data.shape != (self.spec.count, self.spec.dim):
            raise DataError(
                f"feature '{self.spec.name}': data shape {data.shape} does not match "
                f"(count, dim) = ({self.spec.count}, {self.spec.dim})"
            )
        if data.dtype != np.float32 or data.flags.writeable or not data.flags.c_contiguous:
            data = np.array(data, dtype=np.float32, order="C")
            data.setflags(write=False)
        if data.size and not np.isfinite(data).all():
            raise DataError(f"feature '{self.spec.name}': data contains NaN or Inf")
        object.__setattr__(self, "data", data)

    def row_index(self) -> dict[str, int]:
        return {sid: i for i, sid in enumerate(self.ids)}


def write_store(spec: FeatureSpec, ids: Sequence[str], data: np.ndarray, path: Path | str) -> Path:
    """Write a store directory; round-trips bit-exactly for float32 input."""
    ids = list(ids)
    _check_ids(ids, spec.name)
    if len(ids) != spec.count:
        raise DataError(f"feature '{spec.name}': {len(ids)} ids vs declared count {spec.count}")
    arr = np.asarray(data)
    if arr.shape != (spec.count, spec.dim):
        raise DataError(
            f"feature '{spec.name}': data shape {arr.shape} does not match "
            f"(count, dim) = ({spec.count}, {spec.dim})"
        )
    arr32 = np.ascontiguousarray(arr, dtype="<f4")
    if arr32.size and not np.isfinite(arr32).all():
        raise DataError(f"feature '{spec.name}': data contains NaN or Inf (after float32 cast)")

    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    (path / DATA_FILE).write_bytes(arr32.tobytes())
    (path / IDS_FILE).write_text("".join(f"{sid}\n" for sid in ids), encoding="utf-8")
    write_json(
        path / MANIFEST_FILE,
        {
            "feature": spec.name,
            "dim": spec.dim,
            "count": spec.count,
            "dtype": DTYPE_TAG,
            "ids_file": IDS_FILE,
            "data_file": DATA_FILE,
        },
    )
    return path


def read_store(path: Path | str) -> EmbeddingMatrix:
    """Read and validate a store directory written by write_store (or any producer)."""
    path = Path(path)
    manifest_path = path / MANIFEST_FILE
    if not manifest_path.is_file():
        raise DataError(f"missing manifest: {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise DataError(f"corrupt manifest {manifest_path}: {exc}") from exc

    if not isinstance(manifest, dict):
        raise DataError(f"corrupt manifest {manifest_path}: not a JSON object")
    for key, kind in (("feature", str), ("dim", int), ("count", int),
                      ("dtype", str), ("ids_file", str), ("data_file", str)):
        if not isinstance(manifest.get(key), kind):
            raise DataError(f"corrupt manifest {manifest_path}: bad or missing field '{key}'")
    if manifest["dtype"] != DTYPE_TAG:
        raise DataError(f"{manifest_path}: unsupported dtype '{manifest['dtype']}'")
    spec = FeatureSpec(manifest["feature"], manifest["dim"], manifest["count"])

    ids_text = (path / manifest["ids_file"]).read_text(encoding="utf-8")
    if ids_text and not ids_text.endswith("\n"):
        raise DataError(f"feature '{spec.name}': ids file is not LF-terminated")
    ids = ids_text.split("\n")[:-1] if ids_text else []
    if len(ids) != spec.count:
        raise DataError(
            f"feature '{spec.name}': ids file has {len(ids)} lines, manifest says {spec.count}"
        )

    raw = (path / manifest["data_file"]).read_bytes()
    expected = spec.count * spec.dim * 4
    if len(raw) != expected:
        raise DataError(
            f"feature '{spec.name}': data file has {len(raw)} bytes, expected {expected}"
        )
    arr = np.frombuffer(raw, dtype="<f4").reshape(spec.count, spec.dim)
    return EmbeddingMatrix(spec, tuple(ids), arr)


def align(matrices: Sequence[EmbeddingMatrix], order: Sequence[str]) -> list[EmbeddingMatrix]:
    """Re-order every matrix's rows to `order`; widths are unchanged.

    Raises DataError naming the feature and the first id absent from it.
    """
    order = list(order)
    out = []
    for m in matrices:
        index = m.row_index()
        rows = np.empty(len(order), dtype=np.intp)
        for k, sid in enumerate(order):
            try:
                rows[k] = index[sid]
            except KeyError:
                raise DataError(f"feature '{m.spec.name}': id '{sid}' not found") from None
        data = m.data[rows]
        out.append(EmbeddingMatrix(FeatureSpec(m.spec.name, m.spec.dim, len(order)), tuple(order), data))
    return out
