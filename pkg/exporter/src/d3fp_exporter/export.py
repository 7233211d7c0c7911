"""Stereo-pair feature export: images in, one D3FP file per view out."""

from __future__ import annotations

import numpy as np
import torch
from PIL import Image

from .backbones import ExportSpec, build_model, extract_pyramid
from .d3fp import write_d3fp

from .backbones import IMAGENET_MEAN, IMAGENET_STD


def _load_rgb(path) -> np.ndarray:
    img = Image.open(path).convert("RGB")
    return np.asarray(img, dtype=np.float32) / 255.0


def _pad_to_multiple(arr: np.ndarray, multiple: int) -> tuple[np.ndarray, int, int]:
    h, w, _ = arr.shape
    ph = (-h) % multiple
    pw = (-w) % multiple
    if ph or pw:
        arr = np.pad(arr, ((0, ph), (0, pw), (0, 0)), mode="reflect")
    return arr, ph, pw


def _to_batch(arr: np.ndarray) -> torch.Tensor:
    mean = np.asarray(IMAGENET_MEAN, np.float32)
    std = np.asarray(IMAGENET_STD, np.float32)
    arr = (arr - mean) / std
    return torch.from_numpy(arr.transpose(2, 0, 1)[None]).float()


def export(left_path, right_path, spec: ExportSpec,
           out_left, out_right, sidecar=None) -> dict:
    """Write `<out_left>` / `<out_right>` D3FP pyramids for a stereo pair.

    Inputs are padded (reflect) to a multiple of 2^levels so every tap halves
    exactly; the padding and the normalization constants are recorded in the
    optional sidecar text file.
    """
    left = _load_rgb(left_path)
    right = _load_rgb(right_path)
    if left.shape != right.shape:
        raise ValueError("stereo pair dimensions differ")

    multiple = 2 ** spec.levels
    left_p, ph, pw = _pad_to_multiple(left, multiple)
    right_p, _, _ = _pad_to_multiple(right, multiple)

    model = build_model(spec)
    info = {"backbone": spec.backbone, "levels": spec.levels,
            "pretrained": spec.pretrained, "pad_bottom": ph, "pad_right": pw,
            "mean": IMAGENET_MEAN, "std": IMAGENET_STD}

    for arr, out_path in ((left_p, out_left), (right_p, out_right)):
        feats = extract_pyramid(model, spec, _to_batch(arr))
        levels = [np.ascontiguousarray(
            t[0].permute(1, 2, 0).numpy().astype(np.float32)) for t in feats]
        write_d3fp(levels, out_path)

    if sidecar is not None:
        with open(sidecar, "w", encoding="utf-8") as f:
            for k, v in info.items():
                f.write(f"{k}={v}\n")
    return info
