"""Embedding extraction from pretrained models into mmsent store directories."""

__version__ = "0.1.0"

from .errors import ExtractionError
from .extract import extract
from .jobs import FEATURE_DIMS, IMAGE_KINDS, TEXT_KINDS, ExtractionJob, load_job
from .storefmt import write_store
from .textnorm import TEXT_MODES, normalize_text, segment_hashtag

__all__ = [
    "ExtractionError",
    "ExtractionJob",
    "FEATURE_DIMS",
    "IMAGE_KINDS",
    "TEXT_KINDS",
    "TEXT_MODES",
    "extract",
    "load_job",
    "normalize_text",
    "segment_hashtag",
    "write_store",
    "__version__",
]
