"""Backbone catalog: tap points and the feature shapes they must produce.

Each entry lists, per pyramid level, the module to hook and the expected
(resolution divisor, channel count). Taps sit at the last activation of
each resolution stage, so level i comes out at 1/2^i of the (padded) input
resolution with the channel counts below:

    vgg16              128, 256, 512, 512
    resnet18            64,  64, 128, 256
    mobilenet_v3_large  16,  24,  40, 112
    mobilenet_v3_small  16,  16,  24,  48
"""

from __future__ import annotations

from dataclasses import dataclass, field

import torch
from torchvision import models


class UnknownBackbone(Exception):
    pass


class ShapeMismatch(Exception):
    pass


# per backbone: (constructor, weights enum name, [(tap path, channels), ...])
_CATALOG = {
    "vgg16": ("vgg16", "VGG16_Weights",
              [("features.8", 128), ("features.15", 256),
               ("features.22", 512), ("features.29", 512)]),
    "resnet18": ("resnet18", "ResNet18_Weights",
                 [("relu", 64), ("layer1", 64),
                  ("layer2", 128), ("layer3", 256)]),
    "mobilenet_v3_large": ("mobilenet_v3_large", "MobileNet_V3_Large_Weights",
                           [("features.1", 16), ("features.3", 24),
                            ("features.6", 40), ("features.12", 112)]),
    "mobilenet_v3_small": ("mobilenet_v3_small", "MobileNet_V3_Small_Weights",
                           [("features.0", 16), ("features.1", 16),
                            ("features.3", 24), ("features.8", 48)]),
}

IMAGENET_MEAN = [0.485, 0.456, 0.406]
IMAGENET_STD = [0.229, 0.224, 0.225]


@dataclass
class ExportSpec:
    """What to export: backbone, tap points, and the shapes they must have."""

    backbone: str
    levels: int = 3
    pretrained: bool = True
    seed: int = 0  # weight-init seed when pretrained is off
    taps: list[str] = field(default_factory=list)
    expected: list[tuple[int, int]] = field(default_factory=list)  # (divisor, C)

    def __post_init__(self):
        if self.backbone not in _CATALOG:
            raise UnknownBackbone(
                f"{self.backbone!r}; known: {sorted(_CATALOG)}")
        if not 2 <= self.levels <= 4:
            raise ValueError("levels must be in [2, 4]")
        _, _, table = _CATALOG[self.backbone]
        if not self.taps:
            self.taps = [path for path, _ in table[:self.levels]]
        if not self.expected:
            self.expected = [(2 ** (i + 1), ch)
                             for i, (_, ch) in enumerate(table[:self.levels])]


def _resolve(model: torch.nn.Module, path: str) -> torch.nn.Module:
    mod = model
    for part in path.split("."):
        mod = mod[int(part)] if part.isdigit() else getattr(mod, part)
    return mod


def build_model(spec: ExportSpec) -> torch.nn.Module:
    ctor_name, weights_name, _ = _CATALOG[spec.backbone]
    ctor = getattr(models, ctor_name)
    if spec.pretrained:
        weights = getattr(models, weights_name).IMAGENET1K_V1
        model = ctor(weights=weights)
    else:
        torch.manual_seed(spec.seed)
        model = ctor(weights=None)
    model.eval()
    return model


def extract_pyramid(model: torch.nn.Module, spec: ExportSpec,
                    batch: torch.Tensor) -> list[torch.Tensor]:
    """Run the backbone once and collect the tapped activations in order.

    Raises ShapeMismatch when a tap's output disagrees with the catalog
    shape for the padded input resolution.
    """
    captured: dict[str, torch.Tensor] = {}
    hooks = []
    for path in spec.taps:
        def make(p):
            def hook(_mod, _inp, out):
                captured[p] = out.detach()
            return hook
        hooks.append(_resolve(model, path).register_forward_hook(make(path)))
    try:
        with torch.no_grad():
            model(batch)
    finally:
        for h in hooks:
            h.remove()

    _, _, hin, win = batch.shape
    out = []
    for path, (div, ch) in zip(spec.taps, spec.expected):
        if path not in captured:
            raise ShapeMismatch(f"tap {path} produced no output")
        t = captured[path]
        got = tuple(t.shape[1:])
        want = (ch, hin // div, win // div)
        if got != want:
            raise ShapeMismatch(f"tap {path}: got {got}, expected {want}")
        out.append(t)
    return out
