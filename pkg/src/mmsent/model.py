"""Late-fusion sentiment network: projection, fusion, softmax head.

Each input feature is projected to a common width, activations pass
through ReLU and inverted dropout, the projections are concatenated into
a fusion layer, and a final linear layer produces three class
probabilities via softmax. The backward pass is hand-derived for this
fixed architecture and certified against finite differences in the test
suite, so there is no autodiff dependency.

All arithmetic runs at 64-bit; checkpoints are stored at 32-bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError
from .jsonutil import read_json, write_json
from .pooling import N_CLASSES, Sentiment

MODE_TRAIN = "train"
MODE_EVAL = "eval"

CHECKPOINT_MANIFEST = "manifest.json"
CHECKPOINT_DATA = "params.bin"


@dataclass(frozen=True)
class ModelConfig:
    feature_dims: tuple[int, ...]
    proj_dim: int = 128
    fusion_dim: int = 256
    n_classes: int = N_CLASSES
    dropout_rate: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "feature_dims", tuple(int(d) for d in self.feature_dims))
        if len(self.feature_dims) < 1:
            raise DataError("at least one feature is required")
        if min(self.feature_dims) <= 0 or self.proj_dim <= 0 or self.fusion_dim <= 0:
            raise DataError("all layer widths must be positive")
        if self.n_classes < 2:
            raise DataError(f"need at least 2 classes, got {self.n_classes}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise DataError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")

    @property
    def n_features(self) -> int:
        return len(self.feature_dims)

    def to_json(self) -> dict:
        return {
            "feature_dims": list(self.feature_dims),
            "proj_dim": self.proj_dim,
            "fusion_dim": self.fusion_dim,
            "n_classes": self.n_classes,
            "dropout_rate": self.dropout_rate,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ModelConfig":
        try:
            return cls(**{k: obj[k] for k in cls.__dataclass_fields__ if k in obj})
        except TypeError as exc:
            raise DataError(f"bad model config: {exc}") from None


@dataclass
class ModelParams:
    """All weights and biases; mutated in place by the optimizer."""

    proj_w: list[np.ndarray]
    proj_b: list[np.ndarray]
    fusion_w: np.ndarray
    fusion_b: np.ndarray
    out_w: np.ndarray
    out_b: np.ndarray

    def named_arrays(self) -> list[tuple[str, np.ndarray]]:
        """Parameters in the fixed serialization order of the checkpoint blob."""
        named = []
        for i, (w, b) in enumerate(zip(self.proj_w, self.proj_b)):
            named.append((f"proj_w.{i}", w))
            named.append((f"proj_b.{i}", b))
        named.append(("fusion_w", self.fusion_w))
        named.append(("fusion_b", self.fusion_b))
        named.append(("out_w", self.out_w))
        named.append(("out_b", self.out_b))
        return named

    def arrays(self) -> list[np.ndarray]:
        return [a for _, a in self.named_arrays()]

    def copy(self) -> "ModelParams":
        return ModelParams(
            [w.copy() for w in self.proj_w],
            [b.copy() for b in self.proj_b],
            self.fusion_w.copy(),
            self.fusion_b.copy(),
            self.out_w.copy(),
            self.out_b.copy(),
        )

    def check_finite(self):
        for name, a in self.named_arrays():
            if not np.all(np.isfinite(a)):
                raise DataError(f"non-finite values in parameter '{name}'")


def init_params(config: ModelConfig, seed: int) -> ModelParams:
    """Weights uniform in ±sqrt(6/fan_in), biases zero; deterministic per seed."""
    rng = np.random.default_rng(seed)

    def uniform(fan_in: int, shape: tuple[int, int]) -> np.ndarray:
        bound = np.sqrt(6.0 / fan_in)
        return rng.uniform(-bound, bound, shape)

    proj_w = [uniform(d, (config.proj_dim, d)) for d in config.feature_dims]
    proj_b = [np.zeros(config.proj_dim) for _ in config.feature_dims]
    fused = config.proj_dim * config.n_features
    return ModelParams(
        proj_w=proj_w,
        proj_b=proj_b,
        fusion_w=uniform(fused, (config.fusion_dim, fused)),
        fusion_b=np.zeros(config.fusion_dim),
        out_w=uniform(config.fusion_dim, (config.n_classes, config.fusion_dim)),
        out_b=np.zeros(config.n_classes),
    )


@dataclass
class ForwardCache:
    """Everything the backward pass needs from one train-mode forward."""

    inputs: list[np.ndarray]
    proj_pre: list[np.ndarray]
    proj_masks: list[np.ndarray]
    fused: np.ndarray
    fusion_pre: np.ndarray
    fusion_mask: np.ndarray
    fusion_out: np.ndarray
    logits: np.ndarray
    probs: np.ndarray


def _as_batch(features: Sequence[np.ndarray], config: ModelConfig) -> list[np.ndarray]:
    if len(features) != config.n_features:
        raise DataError(
            f"expected {config.n_features} feature arrays, got {len(features)}"
        )
    xs = []
    rows = None
    for i, (x, d) in enumerate(zip(features, config.feature_dims)):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x[np.newaxis, :]
        if x.ndim != 2 or x.shape[1] != d:
            raise DataError(f"feature {i}: expected width {d}, got shape {x.shape}")
        if rows is None:
            rows = x.shape[0]
        elif x.shape[0] != rows:
            raise DataError(f"feature {i}: batch size {x.shape[0]} != {rows}")
        xs.append(x)
    return xs


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def forward(
    params: ModelParams,
    features: Sequence[np.ndarray],
    config: ModelConfig,
    mode: str = MODE_EVAL,
    rng_seed: int | None = None,
):
    """Class probabilities for a batch; train mode also returns the cache.

    Train mode draws inverted-dropout masks (kept units scaled by
    1/(1-rate)) from a generator seeded with rng_seed, so outputs are a
    pure function of (params, features, rng_seed). Eval mode applies no
    dropout and needs no seed.
    """
    if mode not in (MODE_TRAIN, MODE_EVAL):
        raise DataError(f"unknown mode '{mode}'")
    xs = _as_batch(features, config)
    train = mode == MODE_TRAIN
    rate = config.dropout_rate
    if train and rate > 0 and rng_seed is None:
        raise DataError("train-mode forward with dropout requires rng_seed")
    rng = np.random.default_rng(rng_seed) if train and rate > 0 else None

    def mask_like(a: np.ndarray) -> np.ndarray:
        if rng is None:
            return np.ones_like(a)
        return (rng.random(a.shape) >= rate) / (1.0 - rate)

    proj_pre, proj_masks, dropped = [], [], []
    for x, w, b in zip(xs, params.proj_w, params.proj_b):
        a = x @ w.T + b
        m = mask_like(a)
        proj_pre.append(a)
        proj_masks.append(m)
        dropped.append(np.maximum(a, 0.0) * m)

    fused = np.concatenate(dropped, axis=1)
    u = fused @ params.fusion_w.T + params.fusion_b
    m2 = mask_like(u)
    z = np.maximum(u, 0.0) * m2
    logits = z @ params.out_w.T + params.out_b
    probs = _softmax(logits)

    if not train:
        return probs
    cache = ForwardCache(
        inputs=xs,
        proj_pre=proj_pre,
        proj_masks=proj_masks,
        fused=fused,
        fusion_pre=u,
        fusion_mask=m2,
        fusion_out=z,
        logits=logits,
        probs=probs,
    )
    return probs, cache


def backward(
    cache: ForwardCache, params: ModelParams, targets: np.ndarray
) -> tuple[ModelParams, float]:
    """Gradients of mean cross-entropy over the batch, plus the loss value.

    Reuses the dropout masks recorded in the cache, so gradients match the
    exact stochastic function the forward pass computed.
    """
    targets = np.asarray(targets, dtype=np.float64)
    if targets.shape != cache.probs.shape:
        raise DataError(
            f"targets shape {targets.shape} != probabilities shape {cache.probs.shape}"
        )
    n = cache.probs.shape[0]

    # Loss from log-softmax of the cached logits (stable for extreme logits).
    shifted = cache.logits - cache.logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    loss = float(-(targets * log_probs).sum() / n)

    dlogits = (cache.probs - targets) / n
    d_out_w = dlogits.T @ cache.fusion_out
    d_out_b = dlogits.sum(axis=0)

    dz = dlogits @ params.out_w
    du = dz * cache.fusion_mask * (cache.fusion_pre > 0)
    d_fusion_w = du.T @ cache.fused
    d_fusion_b = du.sum(axis=0)

    d_fused = du @ params.fusion_w
    proj_dim = cache.proj_pre[0].shape[1]
    d_proj_w, d_proj_b = [], []
    for i, (x, a, m) in enumerate(zip(cache.inputs, cache.proj_pre, cache.proj_masks)):
        dh = d_fused[:, i * proj_dim : (i + 1) * proj_dim]
        da = dh * m * (a > 0)
        d_proj_w.append(da.T @ x)
        d_proj_b.append(da.sum(axis=0))

    grads = ModelParams(d_proj_w, d_proj_b, d_fusion_w, d_fusion_b, d_out_w, d_out_b)
    return grads, loss


def predict(params: ModelParams, features: Sequence[np.ndarray], config: ModelConfig) -> Sentiment:
    """Most probable class for one sample; ties resolve to the lowest index."""
    probs = forward(params, [np.atleast_1d(x) for x in features], config)
    return Sentiment(int(np.argmax(probs[0])))


def predict_batch(
    params: ModelParams, features: Sequence[np.ndarray], config: ModelConfig
) -> list[Sentiment]:
    probs = forward(params, features, config)
    return [Sentiment(int(i)) for i in np.argmax(probs, axis=1)]


def save_checkpoint(
    params: ModelParams,
    config: ModelConfig,
    path: Path | str,
    seed: int,
    epoch: int,
    val_loss: float,
) -> Path:
    """Write manifest.json plus a flat 32-bit little-endian parameter blob."""
    params.check_finite()
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    named = params.named_arrays()
    blob = np.concatenate([a.ravel() for _, a in named]).astype("<f4")
    (path / CHECKPOINT_DATA).write_bytes(blob.tobytes())
    write_json(
        path / CHECKPOINT_MANIFEST,
        {
            "config": config.to_json(),
            "seed": seed,
            "epoch": epoch,
            "val_loss": val_loss,
            "dtype": "f32le",
            "params_file": CHECKPOINT_DATA,
            "order": [name for name, _ in named],
        },
    )
    return path


def load_checkpoint(path: Path | str) -> tuple[ModelParams, ModelConfig, dict]:
    path = Path(path)
    manifest_path = path / CHECKPOINT_MANIFEST
    if not manifest_path.is_file():
        raise DataError(f"missing checkpoint manifest: {manifest_path}")
    manifest = read_json(manifest_path)
    config = ModelConfig.from_json(manifest.get("config", {}))
    if manifest.get("dtype") != "f32le":
        raise DataError(f"{manifest_path}: unsupported dtype {manifest.get('dtype')!r}")

    raw = (path / manifest.get("params_file", CHECKPOINT_DATA)).read_bytes()
    flat = np.frombuffer(raw, dtype="<f4").astype(np.float64)
    m, p, f, k = config.n_features, config.proj_dim, config.fusion_dim, config.n_classes
    shapes = []
    for d in config.feature_dims:
        shapes.extend([(p, d), (p,)])
    shapes.extend([(f, p * m), (f,), (k, f), (k,)])
    expected = sum(int(np.prod(s)) for s in shapes)
    if flat.size != expected:
        raise DataError(
            f"{path}: parameter blob has {flat.size} values, expected {expected}"
        )

    chunks = []
    pos = 0
    for s in shapes:
        size = int(np.prod(s))
        chunks.append(flat[pos : pos + size].reshape(s))
        pos += size
    proj_w = [chunks[2 * i] for i in range(m)]
    proj_b = [chunks[2 * i + 1] for i in range(m)]
    params = ModelParams(proj_w, proj_b, chunks[2 * m], chunks[2 * m + 1], chunks[2 * m + 2], chunks[2 * m + 3])
    return params, config, manifest
