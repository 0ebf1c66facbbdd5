"""Model loading and per-kind embedding primitives.

All models run on CPU in eval mode under no_grad, so repeated extraction of
the same inputs is bit-identical. Checkpoints are always explicit file paths;
nothing is fetched from the network.
"""

from __future__ import annotations

from pathlib import Path

import torch
import torchvision.transforms as T
from torchvision.models import resnet50, resnet101, vgg19

from .errors import ExtractionError

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)

# resize + center crop used for all residual-network image kinds
imagenet_preprocess = T.Compose([
    T.Resize(256),
    T.CenterCrop(224),
    T.ToTensor(),
    T.Normalize(IMAGENET_MEAN, IMAGENET_STD),
])

FACE_CROP_SIZE = 48

_RESNET_BUILDERS = {"object": resnet50, "scene": resnet101, "affect": resnet50}


def _load_state(path: Path) -> dict:
    try:
        return torch.load(path, map_location="cpu", weights_only=True)
    except FileNotFoundError:
        raise
    except Exception as exc:
        raise ExtractionError(f"cannot load checkpoint {path}: {exc}") from exc


def load_resnet(kind: str, weights: Path) -> torch.nn.Module:
    """Residual network with its classifier head sized from the checkpoint."""
    state = _load_state(weights)
    if "fc.weight" not in state:
        raise ExtractionError(f"{weights}: checkpoint has no classifier head ('fc.weight')")
    model = _RESNET_BUILDERS[kind](weights=None, num_classes=state["fc.weight"].shape[0])
    model.load_state_dict(state)
    return model.eval()


def resnet_embed(model: torch.nn.Module, batch: torch.Tensor) -> torch.Tensor:
    """Global average of the last convolution block: (B, 3, H, W) -> (B, 2048)."""
    x = model.conv1(batch)
    x = model.bn1(x)
    x = model.relu(x)
    x = model.maxpool(x)
    x = model.layer1(x)
    x = model.layer2(x)
    x = model.layer3(x)
    x = model.layer4(x)
    x = model.avgpool(x)
    return torch.flatten(x, 1)


def load_face_detector(path: Path) -> torch.jit.ScriptModule:
    """TorchScript detector: grayscale (H, W) in [0, 1] -> (N, 4) boxes as
    [x1, y1, x2, y2]; an empty (0, 4) tensor means no faces."""
    try:
        return torch.jit.load(str(path), map_location="cpu").eval()
    except Exception as exc:
        raise ExtractionError(f"cannot load detector {path}: {exc}") from exc


def load_expression_net(weights: Path) -> torch.nn.Module:
    """Convolutional trunk of a VGG-19 expression model; emits 512 channels."""
    net = vgg19(weights=None).features
    net.load_state_dict(_load_state(weights))
    return net.eval()


def face_embed(gray: torch.Tensor, boxes: torch.Tensor, net: torch.nn.Module) -> torch.Tensor:
    """Average 512-d expression embedding over detected crops; zeros if none.

    Crops are resized to 48x48, mapped to [-1, 1], and repeated to 3 channels
    to match the trunk's input width.
    """
    crops = []
    h, w = gray.shape
    for x1, y1, x2, y2 in boxes.round().to(torch.int64).tolist():
        x1, y1 = max(x1, 0), max(y1, 0)
        x2, y2 = min(x2, w), min(y2, h)
        if x2 - x1 < 2 or y2 - y1 < 2:
            continue
        crop = gray[y1:y2, x1:x2][None, None]
        crop = torch.nn.functional.interpolate(
            crop, size=(FACE_CROP_SIZE, FACE_CROP_SIZE), mode="bilinear", align_corners=False
        )
        crops.append((crop - 0.5) / 0.5)
    if not crops:
        return torch.zeros(512)
    batch = torch.cat(crops).repeat(1, 3, 1, 1)
    feats = net(batch).mean(dim=(2, 3))
    return feats.mean(dim=0)


def load_clip(model_dir: Path):
    from transformers import CLIPImageProcessor, CLIPModel, CLIPTokenizer

    model = CLIPModel.from_pretrained(model_dir).eval()
    processor = CLIPImageProcessor.from_pretrained(model_dir)
    tokenizer = CLIPTokenizer.from_pretrained(model_dir)
    return model, processor, tokenizer


def load_roberta(model_dir: Path):
    from transformers import RobertaModel, RobertaTokenizer

    model = RobertaModel.from_pretrained(model_dir, add_pooling_layer=False).eval()
    tokenizer = RobertaTokenizer.from_pretrained(model_dir)
    return model, tokenizer


def pooled_output(out) -> torch.Tensor:
    # newer transformers return an output object from get_*_features
    return out if isinstance(out, torch.Tensor) else out.pooler_output
