"""Training loop: smoothed cross-entropy, Adam, plateau LR decay, CV runs.

A fold is trained entirely from (fold, data, config, seed): epoch shuffles
and dropout masks are drawn from seeds derived per (seed, fold, epoch,
batch), so folds can run in any order or in parallel processes and still
produce identical results.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DataError
from .metrics import accuracy, weighted_f1
from .model import (
    MODE_TRAIN,
    ModelConfig,
    ModelParams,
    backward,
    forward,
    init_params,
)
from .pooling import N_CLASSES, PooledSample, valid_samples
from .splits import FoldSpec
from .store import EmbeddingMatrix, align

# Stream tags keep init/shuffle/dropout draws independent per (seed, fold).
_SEED_INIT = 0
_SEED_SHUFFLE = 1
_SEED_DROPOUT = 2


def derive_seed(*path: int) -> int:
    """Stable child seed for a tagged position in the run's seed tree."""
    return int(np.random.SeedSequence(tuple(int(p) for p in path)).generate_state(1)[0])


def smooth_labels(label: int, alpha: float, k: int = N_CLASSES) -> np.ndarray:
    """Target distribution: true class 1-alpha, every other class alpha/(k-1)."""
    if not 0.0 <= alpha < 1.0:
        raise DataError(f"alpha must be in [0, 1), got {alpha}")
    if k < 2:
        raise DataError(f"need at least 2 classes, got {k}")
    if not 0 <= int(label) < k:
        raise DataError(f"label {label} outside 0..{k - 1}")
    if alpha == 0.0:
        target = np.zeros(k)
    else:
        target = np.full(k, alpha / (k - 1))
    target[int(label)] = 1.0 - alpha
    return target


def smooth_label_batch(labels: Sequence[int], alpha: float, k: int = N_CLASSES) -> np.ndarray:
    return np.stack([smooth_labels(y, alpha, k) for y in labels])


def cross_entropy(probs: np.ndarray, targets: np.ndarray) -> float:
    """Mean over the batch of -sum(target * log(prob))."""
    probs = np.atleast_2d(np.asarray(probs, dtype=np.float64))
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    if probs.shape != targets.shape:
        raise DataError(f"probs shape {probs.shape} != targets shape {targets.shape}")
    for name, rows in (("probs", probs), ("targets", targets)):
        sums = rows.sum(axis=1)
        if np.abs(sums - 1.0).max() > 1e-6:
            raise DataError(f"{name} rows do not sum to 1")
    if probs.min() <= 0.0:
        raise DataError("probabilities must be strictly positive")
    return float(-(targets * np.log(probs)).sum(axis=1).mean())


@dataclass
class AdamState:
    """First/second moment accumulators, one pair per parameter array."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0

    @classmethod
    def for_params(cls, params: ModelParams) -> "AdamState":
        return cls(
            m=[np.zeros_like(a) for a in params.arrays()],
            v=[np.zeros_like(a) for a in params.arrays()],
        )


def adam_step(
    params: ModelParams,
    grads: ModelParams,
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> ModelParams:
    """One bias-corrected Adam update, applied to params in place."""
    for name, g in grads.named_arrays():
        if not np.all(np.isfinite(g)):
            raise DataError(f"non-finite gradient for '{name}'")
    state.t += 1
    c1 = 1.0 - beta1**state.t
    c2 = 1.0 - beta2**state.t
    for theta, g, m, v in zip(params.arrays(), grads.arrays(), state.m, state.v):
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * np.square(g)
        theta -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
    return params


class PlateauScheduler:
    """Divide lr by a factor after `patience` epochs without strict improvement.

    The patience counter resets on every decay, and the rate never
    increases. update() is called once per epoch with that epoch's
    validation loss and returns the rate to use from the next epoch on.
    """

    def __init__(self, lr: float, patience: int, factor: float):
        if lr <= 0 or patience < 1 or factor <= 1:
            raise DataError("scheduler needs lr > 0, patience >= 1, factor > 1")
        self.lr = lr
        self.patience = patience
        self.factor = factor
        self.best = None
        self.bad_epochs = 0

    def update(self, val_loss: float) -> float:
        if self.best is None or val_loss < self.best:
            self.best = val_loss
            self.bad_epochs = 0
        else:
            self.bad_epochs += 1
            if self.bad_epochs >= self.patience:
                self.lr /= self.factor
                self.bad_epochs = 0
        return self.lr


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 2e-5
    epochs: int = 100
    batch_size: int = 32
    smoothing_alpha: float = 0.0
    plateau_patience: int = 5
    lr_decay_factor: float = 10.0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.lr <= 0:
            raise DataError(f"lr must be positive, got {self.lr}")
        if not 0.0 <= self.smoothing_alpha < 1.0:
            raise DataError(f"smoothing_alpha must be in [0, 1), got {self.smoothing_alpha}")
        if self.epochs < 1 or self.batch_size < 1 or self.plateau_patience < 1:
            raise DataError("epochs, batch_size, and plateau_patience must be positive")
        if self.seed < 0:
            raise DataError(f"seed must be non-negative, got {self.seed}")

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    @classmethod
    def from_json(cls, obj: dict) -> "TrainConfig":
        try:
            return cls(**{k: obj[k] for k in cls.__dataclass_fields__ if k in obj})
        except TypeError as exc:
            raise DataError(f"bad training config: {exc}") from None


@dataclass
class FoldResult:
    index: int
    params: ModelParams
    best_epoch: int
    best_val_loss: float
    history: list[dict]
    test_accuracy: float
    test_weighted_f1: float


def _feature_arrays(embeddings: Sequence[EmbeddingMatrix], ids: Sequence[str]) -> list[np.ndarray]:
    return [m.data.astype(np.float64) for m in align(list(embeddings), list(ids))]


def train_fold(
    fold: FoldSpec,
    samples: Sequence[PooledSample],
    embeddings: Sequence[EmbeddingMatrix],
    model_config: ModelConfig,
    config: TrainConfig,
) -> FoldResult:
    """Train on one fold and evaluate its best-by-val-loss params on the test ids."""
    for name, ids in (("train", fold.train_ids), ("val", fold.val_ids), ("test", fold.test_ids)):
        if not ids:
            raise DataError(f"empty {name} list")
    dims = tuple(m.spec.dim for m in embeddings)
    if dims != model_config.feature_dims:
        raise DataError(f"store dims {dims} do not match model feature_dims {model_config.feature_dims}")

    label_of = {s.sample_id: int(s.label) for s in valid_samples(samples)}
    for sid in (*fold.train_ids, *fold.val_ids, *fold.test_ids):
        if sid not in label_of:
            raise DataError(f"no valid label for id '{sid}'")

    train_x = _feature_arrays(embeddings, fold.train_ids)
    val_x = _feature_arrays(embeddings, fold.val_ids)
    test_x = _feature_arrays(embeddings, fold.test_ids)

    alpha, k = config.smoothing_alpha, model_config.n_classes
    train_y = smooth_label_batch([label_of[i] for i in fold.train_ids], alpha, k)
    val_y = smooth_label_batch([label_of[i] for i in fold.val_ids], alpha, k)
    test_labels = [label_of[i] for i in fold.test_ids]

    params = init_params(model_config, derive_seed(config.seed, fold.index, _SEED_INIT))
    adam = AdamState.for_params(params)
    scheduler = PlateauScheduler(config.lr, config.plateau_patience, config.lr_decay_factor)
    lr = config.lr
    n_train = len(fold.train_ids)

    history: list[dict] = []
    best_params, best_epoch, best_val = None, 0, np.inf
    for epoch in range(1, config.epochs + 1):
        shuffle = np.random.default_rng(
            derive_seed(config.seed, fold.index, _SEED_SHUFFLE, epoch)
        )
        order = shuffle.permutation(n_train)
        loss_sum = 0.0
        for b, start in enumerate(range(0, n_train, config.batch_size)):
            idx = order[start : start + config.batch_size]
            batch = [x[idx] for x in train_x]
            _, cache = forward(
                params,
                batch,
                model_config,
                MODE_TRAIN,
                derive_seed(config.seed, fold.index, _SEED_DROPOUT, epoch, b),
            )
            grads, loss = backward(cache, params, train_y[idx])
            adam_step(params, grads, adam, lr, config.adam_beta1, config.adam_beta2, config.adam_eps)
            loss_sum += loss * len(idx)

        val_loss = cross_entropy(forward(params, val_x, model_config), val_y)
        history.append(
            {"epoch": epoch, "train_loss": loss_sum / n_train, "val_loss": val_loss, "lr": lr}
        )
        if val_loss < best_val:
            best_params, best_epoch, best_val = params.copy(), epoch, val_loss
        lr = scheduler.update(val_loss)

    probs = forward(best_params, test_x, model_config)
    preds = [int(i) for i in np.argmax(probs, axis=1)]
    return FoldResult(
        index=fold.index,
        params=best_params,
        best_epoch=best_epoch,
        best_val_loss=best_val,
        history=history,
        test_accuracy=accuracy(preds, test_labels),
        test_weighted_f1=weighted_f1(preds, test_labels, k),
    )


def run_cv(
    folds: Sequence[FoldSpec],
    samples: Sequence[PooledSample],
    embeddings: Sequence[EmbeddingMatrix],
    model_config: ModelConfig,
    config: TrainConfig,
    fold_indices: Sequence[int] | None = None,
) -> list[FoldResult]:
    """Train the selected folds (all by default); order does not affect results."""
    wanted = None if fold_indices is None else set(fold_indices)
    if wanted is not None:
        unknown = sorted(wanted - {f.index for f in folds})
        if unknown:
            raise DataError(f"unknown fold indices: {unknown}")
    results = []
    for fold in folds:
        if wanted is not None and fold.index not in wanted:
            continue
        try:
            results.append(train_fold(fold, samples, embeddings, model_config, config))
        except DataError as exc:
            raise DataError(f"fold {fold.index}: {exc}") from None
    return results
