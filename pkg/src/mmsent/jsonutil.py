"""Canonical JSON I/O and hashing.

All files this package emits go through canonical_dumps so that identical
inputs produce byte-identical output files.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path


def canonical_dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_json(path: Path | str, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(canonical_dumps(obj), encoding="utf-8")
    return path


def read_json(path: Path | str):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path: Path | str) -> str:
    return sha256_bytes(Path(path).read_bytes())


def sha256_obj(obj) -> str:
    """Digest of an object's canonical JSON form (key order irrelevant)."""
    return sha256_bytes(canonical_dumps(obj).encode("utf-8"))
