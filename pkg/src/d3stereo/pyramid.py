"""Cost-volume pyramid construction.

Two cost sources are supported: NCC block matching on downsampled image
pairs, and cosine similarity on externally extracted feature pyramids.
Costs are normalized to [0, 1] via (1 - similarity) / 2 so that lower is
better; disparities pointing outside the opposite view carry sentinel cost
1.0 and are flagged invalid.

Both a left-reference and a right-reference volume are produced per level.
The right-reference volume is derived exactly from the left one through
C_R(p, d) = C_L(p + (d, 0), d), which holds cell-for-cell because both views
score the same pixel pairing over the same clipped window.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import CostVolume, GrayImage, PipelineConfig
from .errors import DimensionMismatch, TooSmallForDepth

_VAR_EPS = 1e-6  # intensity variance below this counts as textureless


@dataclass
class FeaturePyramid:
    """Per-level feature maps, level i at half the resolution of level i-1."""

    levels: list[np.ndarray]  # each (H, W, C) float32
    side: str | None = None

    def __post_init__(self):
        for i, lv in enumerate(self.levels):
            if lv.ndim != 3:
                raise ValueError("feature levels must be (H, W, C)")
            self.levels[i] = np.ascontiguousarray(lv, dtype=np.float32)
        for (ph, pw, _), (h, w, _) in zip(
                (lv.shape for lv in self.levels),
                (lv.shape for lv in self.levels[1:])):
            ok_h = h == (ph + 1) // 2 or 2 * h == ph
            ok_w = w == (pw + 1) // 2 or 2 * w == pw
            if not (ok_h and ok_w):
                raise ValueError(f"level {h}x{w} does not halve {ph}x{pw}")

    @property
    def depth(self) -> int:
        return len(self.levels)


@dataclass
class ImagePyramid:
    """Downsampled grayscale images, level 1 = full resolution."""

    levels: list[GrayImage] = field(default_factory=list)

    @property
    def depth(self) -> int:
        return len(self.levels)


def _halve(img: GrayImage) -> GrayImage:
    """2x2 box-average then decimation; partial edge blocks average what exists."""
    h, w = img.data.shape
    data = img.data
    mask = img.valid
    if h % 2:
        data = np.vstack([data, data[-1:]])
        if mask is not None:
            mask = np.vstack([mask, mask[-1:]])
    if w % 2:
        data = np.hstack([data, data[:, -1:]])
        if mask is not None:
            mask = np.hstack([mask, mask[:, -1:]])
    hh, ww = data.shape
    blocks = data.reshape(hh // 2, 2, ww // 2, 2)
    out = blocks.mean(axis=(1, 3)).astype(np.float32)
    out_mask = None
    if mask is not None:
        # strict: a parent is valid only when all contributing pixels are
        out_mask = mask.reshape(hh // 2, 2, ww // 2, 2).all(axis=(1, 3))
    return GrayImage(out, out_mask)


def build_image_pyramid(img: GrayImage, k: int) -> ImagePyramid:
    """k-level pyramid; each level is the 2x2 box-average of the previous one."""
    if k < 2:
        raise TooSmallForDepth("pyramid depth must be >= 2")
    coarsest = -(-min(img.width, img.height) // (2 ** (k - 1)))
    if coarsest < 2:
        raise TooSmallForDepth(
            f"{img.width}x{img.height} image cannot support depth {k}")
    levels = [img]
    for _ in range(k - 1):
        levels.append(_halve(levels[-1]))
    return ImagePyramid(levels)


def resize_bilinear(data: np.ndarray, height: int, width: int) -> np.ndarray:
    """Bilinear resize used to match guide images to feature-level dims."""
    h, w = data.shape
    if (h, w) == (height, width):
        return data.astype(np.float32, copy=True)
    vs = (np.arange(height) + 0.5) * h / height - 0.5
    us = (np.arange(width) + 0.5) * w / width - 0.5
    v0 = np.clip(np.floor(vs).astype(int), 0, h - 1)
    u0 = np.clip(np.floor(us).astype(int), 0, w - 1)
    v1 = np.minimum(v0 + 1, h - 1)
    u1 = np.minimum(u0 + 1, w - 1)
    fv = np.clip(vs - v0, 0.0, 1.0)[:, None]
    fu = np.clip(us - u0, 0.0, 1.0)[None, :]
    a = data[np.ix_(v0, u0)] * (1 - fv) * (1 - fu)
    b = data[np.ix_(v0, u1)] * (1 - fv) * fu
    c = data[np.ix_(v1, u0)] * fv * (1 - fu)
    d = data[np.ix_(v1, u1)] * fv * fu
    return (a + b + c + d).astype(np.float32)


# --------------------------------------------------------------------------
# NCC block matching
# --------------------------------------------------------------------------

def _window_sum(arr: np.ndarray, radius: int) -> np.ndarray:
    """Clipped-window box sums via a padded summed-area table (float64)."""
    h, w = arr.shape
    sat = np.zeros((h + 1, w + 1), dtype=np.float64)
    np.cumsum(arr, axis=0, dtype=np.float64, out=sat[1:, 1:])
    np.cumsum(sat[1:, 1:], axis=1, out=sat[1:, 1:])
    v = np.arange(h)
    u = np.arange(w)
    v0 = np.clip(v - radius, 0, None)
    v1 = np.clip(v + radius + 1, None, h)
    u0 = np.clip(u - radius, 0, None)
    u1 = np.clip(u + radius + 1, None, w)
    return (sat[np.ix_(v1, u1)] - sat[np.ix_(v0, u1)]
            - sat[np.ix_(v1, u0)] + sat[np.ix_(v0, u0)])


def _ncc_plane(left: np.ndarray, right_shifted: np.ndarray, joint: np.ndarray,
               radius: int) -> np.ndarray:
    """Cost plane for one disparity given the aligned right view and joint mask."""
    m = joint.astype(np.float64)
    n = _window_sum(m, radius)
    sl = _window_sum(m * left, radius)
    sr = _window_sum(m * right_shifted, radius)
    sll = _window_sum(m * left * left, radius)
    srr = _window_sum(m * right_shifted * right_shifted, radius)
    slr = _window_sum(m * left * right_shifted, radius)
    with np.errstate(invalid="ignore", divide="ignore"):
        ml = sl / n
        mr = sr / n
        var_l = sll / n - ml * ml
        var_r = srr / n - mr * mr
        cov = slr / n - ml * mr
        ncc = cov / np.sqrt(var_l * var_r)
    cost = (1.0 - np.clip(ncc, -1.0, 1.0)) / 2.0
    textureless = ~((var_l > _VAR_EPS) & (var_r > _VAR_EPS))
    cost = np.where(textureless | (n < 1), 1.0, cost)
    return cost.astype(np.float32)


def cost_volume_ncc(left: GrayImage, right: GrayImage, d_max: int,
                    block_radius: int, level: int = 1,
                    threads: int | None = None) -> CostVolume:
    """Left-reference NCC cost volume.

    cost(p, d) = (1 - NCC(block_L(p), block_R(p - (d, 0)))) / 2, with blocks
    clipped at image borders and masked-out pixels excluded from window
    statistics. Zero-variance blocks score 1.0; disparities pointing left of
    the image are sentinel 1.0 / invalid.
    """
    if left.data.shape != right.data.shape:
        raise DimensionMismatch("left/right image shapes differ")
    h, w = left.data.shape
    ml = left.valid_mask()
    mr = right.valid_mask()
    ldata = left.data.astype(np.float64)
    rdata = right.data.astype(np.float64)

    data = np.ones((h, w, d_max + 1), dtype=np.float32)
    valid = np.zeros((h, w, d_max + 1), dtype=bool)

    def one_plane(d: int) -> None:
        shifted = np.zeros_like(rdata)
        joint = np.zeros((h, w), dtype=bool)
        if d < w:
            shifted[:, d:] = rdata[:, :w - d]
            joint[:, d:] = ml[:, d:] & mr[:, :w - d]
        data[:, :, d] = _ncc_plane(ldata, shifted, joint, block_radius)
        valid[:, :, d] = joint
        data[:, :, d][~joint] = 1.0

    from .parallel import map_indices
    map_indices(one_plane, d_max + 1, threads)
    return CostVolume(data, valid, level, "left")


# --------------------------------------------------------------------------
# Cosine similarity on feature maps
# --------------------------------------------------------------------------

def cost_volume_cosine(left_feat: np.ndarray, right_feat: np.ndarray,
                       d_max: int, level: int,
                       threads: int | None = None) -> CostVolume:
    """Left-reference cosine-similarity cost volume for one feature level."""
    if left_feat.shape != right_feat.shape:
        raise DimensionMismatch("feature level shapes differ")
    h, w, _ = left_feat.shape
    lf = left_feat.astype(np.float64)
    rf = right_feat.astype(np.float64)
    l_norm = np.sqrt((lf * lf).sum(axis=2))
    r_norm = np.sqrt((rf * rf).sum(axis=2))

    data = np.ones((h, w, d_max + 1), dtype=np.float32)
    valid = np.zeros((h, w, d_max + 1), dtype=bool)

    def one_plane(d: int) -> None:
        if d >= w:
            return
        dot = np.einsum("vuc,vuc->vu", lf[:, d:], rf[:, :w - d])
        denom = l_norm[:, d:] * r_norm[:, :w - d]
        with np.errstate(invalid="ignore", divide="ignore"):
            cos = dot / denom
        cost = (1.0 - np.clip(cos, -1.0, 1.0)) / 2.0
        cost = np.where(denom > 0, cost, 1.0)
        data[:, d:, d] = cost.astype(np.float32)
        valid[:, d:, d] = True

    from .parallel import map_indices
    map_indices(one_plane, d_max + 1, threads)
    return CostVolume(data, valid, level, "left")


def derive_right_volume(cv: CostVolume) -> CostVolume:
    """Right-reference volume via C_R(p, d) = C_L(p + (d, 0), d)."""
    if cv.reference != "left":
        raise ValueError("expected a left-reference volume")
    h, w, dd = cv.data.shape
    data = np.ones((h, w, dd), dtype=np.float32)
    valid = np.zeros((h, w, dd), dtype=bool)
    for d in range(dd):
        if d < w:
            data[:, :w - d, d] = cv.data[:, d:, d]
            valid[:, :w - d, d] = cv.valid[:, d:, d]
    return CostVolume(data, valid, cv.level, "right")


def build_cost_pyramid(config: PipelineConfig,
                       left_images: ImagePyramid | None = None,
                       right_images: ImagePyramid | None = None,
                       left_features: FeaturePyramid | None = None,
                       right_features: FeaturePyramid | None = None,
                       threads: int | None = None,
                       ) -> list[tuple[CostVolume, CostVolume]]:
    """Per-level (left-reference, right-reference) volume pairs, level 1 first.

    Level i uses d_max_i = ceil(d_max_full / 2^(i-1)).
    """
    pairs: list[tuple[CostVolume, CostVolume]] = []
    if config.cost_mode == "ncc":
        if left_images is None or right_images is None:
            raise ValueError("ncc mode needs image pyramids")
        if left_images.depth != right_images.depth:
            raise DimensionMismatch("pyramid depths differ")
        for i in range(1, left_images.depth + 1):
            cl = cost_volume_ncc(left_images.levels[i - 1],
                                 right_images.levels[i - 1],
                                 config.d_max_at(i), config.block_radius,
                                 level=i, threads=threads)
            pairs.append((cl, derive_right_volume(cl)))
    else:
        if left_features is None or right_features is None:
            raise ValueError("cosine mode needs feature pyramids")
        if left_features.depth != right_features.depth:
            raise DimensionMismatch("feature pyramid depths differ")
        for i in range(1, left_features.depth + 1):
            cl = cost_volume_cosine(left_features.levels[i - 1],
                                    right_features.levels[i - 1],
                                    config.d_max_at(i), level=i,
                                    threads=threads)
            pairs.append((cl, derive_right_volume(cl)))
    return pairs
