"""Multimodal late-fusion sentiment classification toolkit.

Pools per-modality annotator votes into sample labels, generates
deterministic stratified k-fold splits, trains a fixed three-layer fusion
network (per-feature projections, fusion layer, softmax head) with
label-smoothed cross-entropy and Adam, and reports avg/min/max accuracy
and weighted F1 across folds. Feature vectors come and go through a small
binary embedding-store format, so extraction stays decoupled.
"""

__version__ = "0.1.0"

from .errors import DataError
from .metrics import CvReport, accuracy, aggregate, emit_report, weighted_f1
from .model import (
    ForwardCache,
    ModelConfig,
    ModelParams,
    backward,
    forward,
    init_params,
    load_checkpoint,
    predict,
    predict_batch,
    save_checkpoint,
)
from .pooling import (
    AnnotationRecord,
    PooledSample,
    Sentiment,
    build_dataset,
    load_dataset,
    parse_annotation_file,
    pool_modality,
    pool_pair,
    pool_record,
    write_dataset,
)
from .splits import FoldSpec, SplitSet, load_splits, save_splits, stratified_kfold, validate_splits
from .store import EmbeddingMatrix, FeatureSpec, align, read_store, write_store
from .synthetic import generate_synthetic
from .training import (
    AdamState,
    FoldResult,
    PlateauScheduler,
    TrainConfig,
    adam_step,
    cross_entropy,
    run_cv,
    smooth_labels,
    train_fold,
)

__all__ = [
    "AdamState",
    "AnnotationRecord",
    "CvReport",
    "DataError",
    "EmbeddingMatrix",
    "FeatureSpec",
    "FoldResult",
    "FoldSpec",
    "ForwardCache",
    "ModelConfig",
    "ModelParams",
    "PlateauScheduler",
    "PooledSample",
    "Sentiment",
    "SplitSet",
    "TrainConfig",
    "accuracy",
    "adam_step",
    "aggregate",
    "align",
    "backward",
    "build_dataset",
    "cross_entropy",
    "emit_report",
    "forward",
    "generate_synthetic",
    "init_params",
    "load_checkpoint",
    "load_dataset",
    "load_splits",
    "parse_annotation_file",
    "pool_modality",
    "pool_pair",
    "pool_record",
    "predict",
    "predict_batch",
    "read_store",
    "run_cv",
    "save_checkpoint",
    "save_splits",
    "smooth_labels",
    "stratified_kfold",
    "train_fold",
    "validate_splits",
    "weighted_f1",
    "write_dataset",
    "write_store",
]
