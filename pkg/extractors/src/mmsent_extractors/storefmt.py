"""Writer for the embedding-store directory format.

The format is the interchange contract with the training toolkit:

    manifest.json   {"feature", "dim", "count", "dtype": "f32le",
                     "ids_file": "ids.txt", "data_file": "data.bin"}
    ids.txt         one sample id per line, UTF-8, LF-terminated
    data.bin        count x dim binary32 little-endian, row-major, no header

This module intentionally does not import the training package; the bytes on
disk are the whole interface.
"""

from __future__ import annotations

import json
import os
import shutil
import tempfile
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ExtractionError


def write_store(feature: str, ids: Sequence[str], rows: np.ndarray, out_dir: Path | str) -> Path:
    """Atomically write a store: a temp directory is populated next to the
    target and renamed into place, so readers never see a partial store."""
    out_dir = Path(out_dir)
    ids = list(ids)
    rows = np.ascontiguousarray(np.asarray(rows, dtype="<f4"))
    if rows.ndim != 2:
        raise ExtractionError(f"feature '{feature}': rows must be 2-D, got shape {rows.shape}")
    if rows.shape[0] != len(ids):
        raise ExtractionError(
            f"feature '{feature}': {len(ids)} ids vs {rows.shape[0]} rows"
        )
    if not np.isfinite(rows).all():
        raise ExtractionError(f"feature '{feature}': rows contain non-finite values")
    seen = set()
    for sid in ids:
        if not isinstance(sid, str) or not sid:
            raise ExtractionError(f"feature '{feature}': sample ids must be non-empty strings")
        if "\n" in sid or "\r" in sid:
            raise ExtractionError(f"feature '{feature}': sample id {sid!r} contains a line break")
        if sid in seen:
            raise ExtractionError(f"feature '{feature}': duplicate sample id '{sid}'")
        seen.add(sid)

    manifest = {
        "feature": feature,
        "dim": int(rows.shape[1]),
        "count": len(ids),
        "dtype": "f32le",
        "ids_file": "ids.txt",
        "data_file": "data.bin",
    }
    out_dir.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(dir=out_dir.parent, prefix=f".{out_dir.name}."))
    try:
        (tmp / "data.bin").write_bytes(rows.tobytes())
        (tmp / "ids.txt").write_text("".join(sid + "\n" for sid in ids), encoding="utf-8")
        (tmp / "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        if out_dir.exists():
            shutil.rmtree(out_dir)
        os.replace(tmp, out_dir)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return out_dir
