"""Session fixtures: tiny local checkpoints and a paired media directory.

Every model here is randomly initialized and saved to disk once per session,
so the suite runs fully offline while still exercising the real load paths.
"""

from __future__ import annotations

import json

import numpy as np
import pytest
import torch
from PIL import Image

from mmsent_extractors.jobs import ExtractionJob

FACE_IMAGE_ID = "3"
FLAT_IMAGE_ID = "7"
HASHTAG_ONLY_ID = "5"

TWEETS = {
    "1": "Sunny morning #HappyDay http://t.co/abc",
    "2": "so tired of this rain @weather",
    "3": "BEST game ever #Win100 #GoTeam",
    "4": "coffee time",
    "5": "#mondayMotivation",
    "6": "check www.example.com/x #news",
    "7": "quiet",
    "8": "love this #100days challenge",
    "9": "meh",
    "10": "RT @bob: lol #funny",
}


class BlobDetector(torch.nn.Module):
    """Stand-in detector: one box around all pixels brighter than 0.8."""

    def forward(self, gray: torch.Tensor) -> torch.Tensor:
        mask = gray > 0.8
        if not bool(mask.any()):
            return torch.zeros((0, 4))
        ys, xs = torch.where(mask)
        box = torch.stack([xs.min(), ys.min(), xs.max() + 1, ys.max() + 1])
        return box.to(torch.float32).unsqueeze(0)


@pytest.fixture(scope="session")
def ckpt_root(tmp_path_factory):
    return tmp_path_factory.mktemp("ckpts")


@pytest.fixture(scope="session")
def resnet_ckpts(ckpt_root):
    from torchvision.models import resnet50, resnet101

    torch.manual_seed(0)
    paths = {}
    for kind, builder, classes in (
        ("object", resnet50, 10),
        ("scene", resnet101, 10),
        ("affect", resnet50, 8),
    ):
        path = ckpt_root / f"{kind}.pth"
        torch.save(builder(weights=None, num_classes=classes).state_dict(), path)
        paths[kind] = path
    return paths


@pytest.fixture(scope="session")
def face_ckpts(ckpt_root):
    from torchvision.models import vgg19

    torch.manual_seed(1)
    detector = ckpt_root / "detector.pt"
    torch.jit.save(torch.jit.script(BlobDetector()), str(detector))
    weights = ckpt_root / "expression.pth"
    torch.save(vgg19(weights=None).features.state_dict(), weights)
    return {"detector": detector, "weights": weights}


@pytest.fixture(scope="session")
def clip_dir(ckpt_root):
    from transformers import CLIPConfig, CLIPImageProcessor, CLIPModel, CLIPTokenizer

    d = ckpt_root / "clip"
    d.mkdir()
    vocab = ["l", "o", "w", "e", "r", "s", "t", "i", "d", "n", "lo", "l</w>", "w</w>",
             "r</w>", "t</w>", "low</w>", "er</w>", "lowest</w>", "newer</w>", "wider",
             "<unk>", "<|startoftext|>", "<|endoftext|>"]
    (d / "vocab.json").write_text(json.dumps({t: i for i, t in enumerate(vocab)}))
    (d / "merges.txt").write_text("\n".join(["#version: 0.2", "l o", "lo w</w>", "e r</w>"]) + "\n")
    config = CLIPConfig(
        text_config={"hidden_size": 32, "intermediate_size": 37, "num_hidden_layers": 2,
                     "num_attention_heads": 4, "vocab_size": 99,
                     "max_position_embeddings": 77, "bos_token_id": 21, "eos_token_id": 22},
        vision_config={"hidden_size": 32, "intermediate_size": 37, "num_hidden_layers": 2,
                       "num_attention_heads": 4, "image_size": 32, "patch_size": 8},
        projection_dim=512,
    )
    torch.manual_seed(2)
    CLIPModel(config).save_pretrained(d)
    CLIPTokenizer(str(d / "vocab.json"), str(d / "merges.txt")).save_pretrained(d)
    CLIPImageProcessor(size={"shortest_edge": 32},
                       crop_size={"height": 32, "width": 32}).save_pretrained(d)
    return d


@pytest.fixture(scope="session")
def roberta_dir(ckpt_root):
    from transformers import RobertaConfig, RobertaModel, RobertaTokenizer

    d = ckpt_root / "roberta"
    d.mkdir()
    vocab = ["<s>", "<pad>", "</s>", "<unk>", "l", "o", "w", "e", "r", "s", "t", "i", "d",
             "n", "Ġ", "Ġl", "Ġlo", "Ġlow", "er", "Ġlowest",
             "Ġnewer", "Ġwider", "<mask>"]
    (d / "vocab.json").write_text(json.dumps({t: i for i, t in enumerate(vocab)}))
    (d / "merges.txt").write_text(
        "\n".join(["#version: 0.2", "Ġ l", "Ġl o", "Ġlo w", "e r"]) + "\n"
    )
    config = RobertaConfig(vocab_size=60, hidden_size=768, num_hidden_layers=5,
                           num_attention_heads=4, intermediate_size=128,
                           max_position_embeddings=64)
    torch.manual_seed(3)
    RobertaModel(config, add_pooling_layer=False).save_pretrained(d)
    RobertaTokenizer(str(d / "vocab.json"), str(d / "merges.txt")).save_pretrained(d)
    return d


@pytest.fixture(scope="session")
def media_dir(tmp_path_factory):
    """Ten paired N.jpg / N.txt samples. Sample 3 carries a bright blob the
    test detector will box; sample 7 is a flat dark image with nothing in it."""
    d = tmp_path_factory.mktemp("media")
    rng = np.random.default_rng(5)
    for sid, tweet in TWEETS.items():
        if sid == FLAT_IMAGE_ID:
            arr = np.full((64, 64, 3), 20, dtype=np.uint8)
        else:
            arr = rng.integers(0, 150, (64, 64, 3), dtype=np.uint8)
            if sid == FACE_IMAGE_ID:
                arr[8:24, 10:26] = 255
        Image.fromarray(arr).save(d / f"{sid}.jpg", quality=95)
        (d / f"{sid}.txt").write_text(tweet, encoding="utf-8")
    return d


@pytest.fixture
def make_job(media_dir, resnet_ckpts, face_ckpts, clip_dir, roberta_dir, tmp_path):
    def _make(kind, text_mode="raw", source=None, out=None, **kw):
        if kind in resnet_ckpts:
            checkpoints = {"weights": resnet_ckpts[kind]}
        elif kind == "face":
            checkpoints = dict(face_ckpts)
        elif kind.startswith("clip"):
            checkpoints = {"model": clip_dir}
        else:
            checkpoints = {"model": roberta_dir}
        return ExtractionJob(
            kind=kind,
            source=source or media_dir,
            out=out or tmp_path / f"store_{kind}_{text_mode}",
            checkpoints=checkpoints,
            text_mode=text_mode,
            **kw,
        )

    return _make
