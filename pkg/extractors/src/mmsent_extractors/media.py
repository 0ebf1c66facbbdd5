"""Sample discovery and media loading for paired image/text directories."""

from __future__ import annotations

import logging
from pathlib import Path

from PIL import Image

from .errors import ExtractionError

log = logging.getLogger("mmsent_extractors")

IMAGE_SUFFIXES = (".jpg", ".jpeg", ".png")


def find_images(source: Path) -> list[tuple[str, Path]]:
    """(sample id, path) pairs for every image in the directory, sorted by id."""
    if not source.is_dir():
        raise ExtractionError(f"image source is not a directory: {source}")
    found = [
        (p.stem, p)
        for p in sorted(source.iterdir())
        if p.suffix.lower() in IMAGE_SUFFIXES and p.is_file()
    ]
    if not found:
        raise ExtractionError(f"no images found in {source}")
    return found


def load_image(path: Path) -> Image.Image:
    """Decoded RGB image; raises OSError for unreadable files."""
    with Image.open(path) as img:
        return img.convert("RGB")


def read_texts(source: Path) -> list[tuple[str, str]]:
    """(sample id, tweet) pairs from a directory of `N.txt` files or from a
    single tab-separated `id<TAB>text` file. Unreadable per-sample files are
    skipped and logged; a malformed combined file is an error."""
    if source.is_dir():
        records = []
        for p in sorted(source.glob("*.txt")):
            try:
                records.append((p.stem, p.read_text(encoding="utf-8", errors="replace")))
            except OSError as exc:
                log.warning("skipping %s: %s", p.stem, exc)
        if not records:
            raise ExtractionError(f"no text files found in {source}")
        return records
    if not source.is_file():
        raise ExtractionError(f"text source not found: {source}")
    records = []
    seen = set()
    for lineno, line in enumerate(
        source.read_text(encoding="utf-8", errors="replace").splitlines(), start=1
    ):
        if not line.strip():
            continue
        sid, sep, text = line.partition("\t")
        if not sep or not sid.strip():
            raise ExtractionError(f"{source}:{lineno}: expected 'id<TAB>text'")
        sid = sid.strip()
        if sid in seen:
            raise ExtractionError(f"{source}:{lineno}: duplicate sample id '{sid}'")
        seen.add(sid)
        records.append((sid, text))
    if not records:
        raise ExtractionError(f"no text records found in {source}")
    return records
