"""Job execution: media in, one embedding store out."""

from __future__ import annotations

import logging

import numpy as np
import torch
from torchvision.transforms.functional import to_tensor

from . import backbones
from .jobs import ExtractionJob
from .media import find_images, load_image, read_texts
from .storefmt import write_store
from .textnorm import normalize_text

log = logging.getLogger("mmsent_extractors")


def extract(job: ExtractionJob):
    """Run one extraction job and atomically write its store directory.

    Unreadable media files are skipped and logged by sample id; everything
    else about the job is strict.
    """
    if job.kind in ("object", "scene", "affect"):
        ids, rows = _resnet_rows(job)
    elif job.kind == "face":
        ids, rows = _face_rows(job)
    elif job.kind == "clip_image":
        ids, rows = _clip_image_rows(job)
    elif job.kind == "clip_text":
        ids, rows = _clip_text_rows(job)
    else:
        ids, rows = _roberta_rows(job)
    return write_store(job.feature_name, ids, np.asarray(rows, dtype=np.float32), job.out)


def _readable_images(job):
    for sid, path in find_images(job.source):
        try:
            yield sid, load_image(path)
        except OSError as exc:
            log.warning("skipping %s: %s", sid, exc)


def _batched(items, size):
    batch = []
    for item in items:
        batch.append(item)
        if len(batch) == size:
            yield batch
            batch = []
    if batch:
        yield batch


def _resnet_rows(job):
    model = backbones.load_resnet(job.kind, job.checkpoint("weights"))
    ids, rows = [], []
    with torch.no_grad():
        for batch in _batched(_readable_images(job), job.batch_size):
            pixel = torch.stack([backbones.imagenet_preprocess(img) for _, img in batch])
            feats = backbones.resnet_embed(model, pixel)
            ids.extend(sid for sid, _ in batch)
            rows.extend(feats.numpy())
    return ids, rows


def _face_rows(job):
    detector = backbones.load_face_detector(job.checkpoint("detector"))
    net = backbones.load_expression_net(job.checkpoint("weights"))
    ids, rows = [], []
    with torch.no_grad():
        for sid, img in _readable_images(job):
            gray = to_tensor(img.convert("L"))[0]
            boxes = detector(gray)
            ids.append(sid)
            rows.append(backbones.face_embed(gray, boxes, net).numpy())
    return ids, rows


def _clip_image_rows(job):
    model, processor, _ = backbones.load_clip(job.checkpoint("model"))
    ids, rows = [], []
    with torch.no_grad():
        for batch in _batched(_readable_images(job), job.batch_size):
            pixel = processor(images=[img for _, img in batch], return_tensors="pt")["pixel_values"]
            feats = backbones.pooled_output(model.get_image_features(pixel_values=pixel))
            ids.extend(sid for sid, _ in batch)
            rows.extend(feats.numpy())
    return ids, rows


def _normalized_texts(job):
    return [(sid, normalize_text(text, job.text_mode)) for sid, text in read_texts(job.source)]


def _clip_text_rows(job):
    model, _, tokenizer = backbones.load_clip(job.checkpoint("model"))
    max_len = model.config.text_config.max_position_embeddings
    ids, rows = [], []
    with torch.no_grad():
        for batch in _batched(_normalized_texts(job), job.batch_size):
            enc = tokenizer(
                [text for _, text in batch],
                padding=True, truncation=True, max_length=max_len, return_tensors="pt",
            )
            feats = backbones.pooled_output(
                model.get_text_features(
                    input_ids=enc["input_ids"], attention_mask=enc["attention_mask"]
                )
            )
            ids.extend(sid for sid, _ in batch)
            rows.extend(feats.numpy())
    return ids, rows


def _roberta_rows(job):
    model, tokenizer = backbones.load_roberta(job.checkpoint("model"))
    # position slots 0 and 1 are reserved, hence the -2
    max_len = model.config.max_position_embeddings - 2
    ids, rows = [], []
    with torch.no_grad():
        for batch in _batched(_normalized_texts(job), job.batch_size):
            enc = tokenizer(
                [text for _, text in batch],
                padding=True, truncation=True, max_length=max_len,
                return_tensors="pt", return_special_tokens_mask=True,
            )
            out = model(
                input_ids=enc["input_ids"], attention_mask=enc["attention_mask"],
                output_hidden_states=True,
            )
            # mean of the last four layers, then mean over real word tokens
            stack = torch.stack(out.hidden_states[-4:]).mean(dim=0)
            keep = (enc["attention_mask"] == 1) & (enc["special_tokens_mask"] == 0)
            empty = ~keep.any(dim=1)
            if empty.any():
                # a tweet that normalized to nothing has only special tokens;
                # average those rather than divide by zero
                keep[empty] = enc["attention_mask"][empty] == 1
            denom = keep.sum(dim=1, keepdim=True).to(stack.dtype)
            feats = (stack * keep.unsqueeze(-1)).sum(dim=1) / denom
            ids.extend(sid for sid, _ in batch)
            rows.extend(feats.numpy())
    return ids, rows
