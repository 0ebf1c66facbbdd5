"""Command-line pipeline: pool -> split -> train -> report (plus synth).

Stages communicate only through files (dataset.json, splits.json, store
directories, run output directories), so fold subsets can run in separate
processes and later be merged by `report`. Every command writes a
provenance record with the config digest, seed, and library versions.

Exit codes: 0 success, 1 usage error, 2 data or validation error.
"""

from __future__ import annotations

import argparse
import json
import os
import platform
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .errors import DataError
from .jsonutil import read_json, sha256_file, sha256_obj, write_json
from .metrics import CvReport, emit_report, format_table
from .model import ModelConfig, save_checkpoint
from .pooling import build_dataset, load_dataset, parse_annotation_file, write_dataset
from .splits import SplitSet, load_splits, save_splits, stratified_kfold, validate_splits
from .store import FeatureSpec, read_store
from .synthetic import generate_synthetic
from .training import TrainConfig, run_cv

OUT_ROOT_ENV = "MMSENT_OUT_ROOT"


class UsageError(Exception):
    """Bad invocation detected after parsing; maps to exit code 1."""


class _ArgumentParser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; the CLI contract reserves 2
    # for data errors, so usage problems are remapped to 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _feature_list(text: str) -> list[tuple[str, int]]:
    specs = []
    for part in text.split(","):
        name, _, dim = part.partition(":")
        if not name.strip() or not dim.isdigit() or int(dim) <= 0:
            raise argparse.ArgumentTypeError(f"bad feature spec '{part}' (want name:dim)")
        specs.append((name.strip(), int(dim)))
    return specs


def _fold_list(text: str) -> list[int]:
    try:
        folds = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad fold list '{text}' (want e.g. 0,3,7)")
    if not folds:
        raise argparse.ArgumentTypeError("empty fold list")
    return folds


def _out_path(explicit: str | None, default_name: str) -> Path:
    if explicit:
        return Path(explicit)
    root = os.environ.get(OUT_ROOT_ENV)
    if not root:
        raise UsageError(f"--out not given and {OUT_ROOT_ENV} is not set")
    return Path(root) / default_name


def _versions() -> dict[str, str]:
    return {
        "mmsent": __version__,
        "numpy": np.__version__,
        "python": platform.python_version(),
    }


def _write_provenance(path: Path, command: str, digest: str, seed: int | None) -> Path:
    """Sidecar record tying an output to its inputs; no timestamps, so
    reruns of the same command produce identical bytes."""
    return write_json(
        path,
        {"command": command, "config_digest": digest, "seed": seed, "versions": _versions()},
    )


def _provenance_for_file(out_file: Path) -> Path:
    return out_file.with_suffix(".provenance.json")


def cmd_pool(args) -> None:
    out = _out_path(args.out, "dataset.json")
    records = parse_annotation_file(args.annotations)
    samples, counts = build_dataset(records)
    write_dataset(samples, counts, out)
    digest = sha256_obj({"command": "pool", "annotations": str(args.annotations)})
    _write_provenance(_provenance_for_file(out), "pool", digest, None)
    n_valid = sum(counts.values())
    print(f"pooled {len(samples)} records -> {n_valid} valid {counts}")
    print(f"wrote {out}")


def cmd_split(args) -> None:
    out = _out_path(args.out, "splits.json")
    samples, _ = load_dataset(args.dataset)
    folds = stratified_kfold(samples, args.k, args.seed)
    violations = validate_splits(folds, samples)
    if violations:
        raise DataError("generated splits failed validation: " + "; ".join(violations))
    dataset_hash = sha256_file(args.dataset)
    save_splits(SplitSet(args.seed, args.k, dataset_hash, tuple(folds)), out)
    digest = sha256_obj(
        {"command": "split", "k": args.k, "seed": args.seed, "dataset_hash": dataset_hash}
    )
    _write_provenance(_provenance_for_file(out), "split", digest, args.seed)
    sizes = sorted({(len(f.train_ids), len(f.val_ids), len(f.test_ids)) for f in folds})
    print(f"{args.k} folds, train/val/test sizes {sizes}")
    print(f"wrote {out}")


def cmd_synth(args) -> None:
    out_dir = _out_path(args.out, "synth")
    if args.n <= 0 or args.n % 3 != 0:
        raise DataError(f"--n must be a positive multiple of 3, got {args.n}")
    specs = [FeatureSpec(name, dim, 0) for name, dim in args.features]
    samples, counts = generate_synthetic(args.n // 3, specs, args.separation, args.seed, out_dir)
    digest = sha256_obj(
        {
            "command": "synth",
            "n": args.n,
            "features": [[name, dim] for name, dim in args.features],
            "separation": args.separation,
            "seed": args.seed,
        }
    )
    _write_provenance(out_dir / "provenance.json", "synth", digest, args.seed)
    print(f"generated {len(samples)} samples {counts}")
    print(f"wrote {out_dir}")


@dataclass(frozen=True)
class RunSpec:
    """Parsed run config: where the data lives and how to train on it."""

    name: str
    dataset: Path
    splits: Path
    features: tuple[Path, ...]
    model_json: dict
    training_json: dict
    out: Path | None
    digest: str


def _load_run_spec(config_path: Path) -> RunSpec:
    obj = read_json(config_path)
    if not isinstance(obj, dict):
        raise DataError(f"{config_path}: run config must be a JSON object")
    for key in ("dataset", "splits", "features"):
        if key not in obj:
            raise DataError(f"{config_path}: run config missing '{key}'")
    if not isinstance(obj["features"], list) or not obj["features"]:
        raise DataError(f"{config_path}: 'features' must be a non-empty list of store paths")
    base = config_path.parent
    out = obj.get("out")
    return RunSpec(
        name=str(obj.get("name") or config_path.stem),
        dataset=base / obj["dataset"],
        splits=base / obj["splits"],
        features=tuple(base / p for p in obj["features"]),
        model_json=dict(obj.get("model", {})),
        training_json=dict(obj.get("training", {})),
        out=base / out if out else None,
        digest=sha256_obj(obj),
    )


def cmd_train(args) -> None:
    spec = _load_run_spec(Path(args.config))
    out_dir = Path(args.out) if args.out else (spec.out or _out_path(None, spec.name))

    samples, _ = load_dataset(spec.dataset)
    splits = load_splits(spec.splits)
    dataset_hash = sha256_file(spec.dataset)
    if splits.dataset_hash != dataset_hash:
        raise DataError(
            f"{spec.splits}: splits were generated from a different dataset "
            f"(hash {splits.dataset_hash[:12]}.. != {dataset_hash[:12]}..)"
        )

    embeddings = [read_store(p) for p in spec.features]
    dims = tuple(m.spec.dim for m in embeddings)
    model_json = dict(spec.model_json)
    declared = model_json.pop("feature_dims", None)
    if declared is not None and tuple(declared) != dims:
        raise DataError(f"run config feature_dims {declared} do not match stores {list(dims)}")
    model_config = ModelConfig.from_json({**model_json, "feature_dims": dims})
    train_config = TrainConfig.from_json(spec.training_json)

    results = run_cv(
        splits.folds, samples, embeddings, model_config, train_config, fold_indices=args.folds
    )
    for r in results:
        fold_dir = out_dir / f"fold_{r.index:02d}"
        write_json(fold_dir / "history.json", r.history)
        write_json(
            fold_dir / "metrics.json",
            {
                "index": r.index,
                "accuracy": r.test_accuracy,
                "weighted_f1": r.test_weighted_f1,
                "best_epoch": r.best_epoch,
                "best_val_loss": r.best_val_loss,
            },
        )
        save_checkpoint(
            r.params,
            model_config,
            fold_dir / "checkpoint",
            seed=train_config.seed,
            epoch=r.best_epoch,
            val_loss=r.best_val_loss,
        )
        print(
            f"fold {r.index}: accuracy={r.test_accuracy:.4f} "
            f"weighted_f1={r.test_weighted_f1:.4f} (best epoch {r.best_epoch})"
        )

    # Identical for every fold subset of the same run, so parallel
    # invocations sharing out_dir agree on the bytes they both write.
    write_json(
        out_dir / "run_meta.json",
        {
            "name": spec.name,
            "seed": train_config.seed,
            "config_digest": spec.digest,
            "k": splits.k,
            "dataset_hash": splits.dataset_hash,
        },
    )
    _write_provenance(out_dir / "provenance.json", "train", spec.digest, train_config.seed)
    print(f"wrote {out_dir}")


def _collect_run(run_dir: Path) -> CvReport:
    meta_path = run_dir / "run_meta.json"
    if not meta_path.is_file():
        raise DataError(f"{run_dir}: missing run_meta.json (not a run directory?)")
    meta = read_json(meta_path)
    folds = []
    for metrics_path in sorted(run_dir.glob("fold_*/metrics.json")):
        m = read_json(metrics_path)
        folds.append(
            {"index": m["index"], "accuracy": m["accuracy"], "weighted_f1": m["weighted_f1"]}
        )
    if not folds:
        raise DataError(f"{run_dir}: no fold metrics found")
    indices = [f["index"] for f in folds]
    if len(set(indices)) != len(indices):
        raise DataError(f"{run_dir}: duplicate fold indices {sorted(indices)}")
    return CvReport.from_folds(meta["name"], folds, meta["seed"], meta["config_digest"])


def cmd_report(args) -> None:
    out = _out_path(args.out, "report.json")
    reports = [_collect_run(Path(d)) for d in args.runs]
    emit_report(reports, out, args.format)
    digest = sha256_obj(
        {"command": "report", "runs": [r.config_digest for r in reports], "format": args.format}
    )
    _write_provenance(_provenance_for_file(out), "report", digest, None)
    if args.format == "table":
        print(format_table(reports), end="")
    print(f"wrote {out}")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="mmsent", description="Multimodal sentiment late-fusion pipeline."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pool", help="pool annotator votes into dataset.json")
    p.add_argument("--annotations", required=True, help="MVSA-style annotation file")
    p.add_argument("--out", help=f"output dataset.json (default: ${OUT_ROOT_ENV}/dataset.json)")
    p.set_defaults(func=cmd_pool)

    p = sub.add_parser("split", help="generate stratified k-fold splits")
    p.add_argument("--dataset", required=True, help="dataset.json from pool or synth")
    p.add_argument("--k", type=int, default=10, help="number of folds (default 10)")
    p.add_argument("--seed", type=int, required=True, help="shuffle seed")
    p.add_argument("--out", help=f"output splits.json (default: ${OUT_ROOT_ENV}/splits.json)")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("synth", help="generate a synthetic dataset with feature stores")
    p.add_argument("--n", type=int, required=True, help="total samples (multiple of 3)")
    p.add_argument(
        "--features", type=_feature_list, required=True, help="comma list of name:dim"
    )
    p.add_argument("--separation", type=float, default=0.0, help="class mean offset")
    p.add_argument("--seed", type=int, required=True, help="generation seed")
    p.add_argument("--out", help=f"output directory (default: ${OUT_ROOT_ENV}/synth)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train one run of cross-validation folds")
    p.add_argument("--config", required=True, help="run config JSON")
    p.add_argument("--out", help="run output directory (default: config 'out' field)")
    p.add_argument(
        "--folds", type=_fold_list, help="train only these fold indices (e.g. 0,3,7)"
    )
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("report", help="aggregate run directories into report.json")
    p.add_argument("--runs", nargs="+", required=True, help="run output directories")
    p.add_argument("--format", choices=("json", "table"), default="json")
    p.add_argument("--out", help=f"output report.json (default: ${OUT_ROOT_ENV}/report.json)")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 0
    try:
        args.func(args)
    except UsageError as exc:
        print(f"mmsent: usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"mmsent: error: {exc}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"mmsent: error: invalid JSON: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"mmsent: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
