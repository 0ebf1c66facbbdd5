"""Tweet text normalization with the three hashtag handling modes."""

from __future__ import annotations

import re

from .errors import ExtractionError

MODE_RAW = "raw"
MODE_KEEP = "keep_hashtags"
MODE_STRIP = "strip_hashtags"
TEXT_MODES = (MODE_RAW, MODE_KEEP, MODE_STRIP)

_URL = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_USER = re.compile(r"@\w+")
_HASHTAG = re.compile(r"#(\w+)")
# word pieces inside a hashtag: runs split at case and letter/digit boundaries
_PIECES = re.compile(r"[A-Z]+(?=[A-Z][a-z])|[A-Z]?[a-z]+|[A-Z]+|\d+")


def segment_hashtag(tag: str) -> str:
    """'HappyDay' -> 'Happy Day', '100days' -> '100 days'; opaque tags pass through."""
    pieces = _PIECES.findall(tag)
    return " ".join(pieces) if pieces else tag


def normalize_text(tweet: str, mode: str) -> str:
    """raw: unchanged. Normalized modes: URLs -> <url>, mentions -> <user>,
    lowercase, whitespace collapsed; hashtags kept as their segmented words or
    stripped entirely depending on the mode."""
    if mode == MODE_RAW:
        return tweet
    if mode not in TEXT_MODES:
        raise ExtractionError(f"unknown text mode '{mode}'")
    s = _URL.sub("<url>", tweet)
    s = _USER.sub("<user>", s)
    if mode == MODE_KEEP:
        s = _HASHTAG.sub(lambda m: segment_hashtag(m.group(1)), s)
    else:
        s = _HASHTAG.sub("", s)
    return " ".join(s.lower().split())
