"""Synthetic stereo pairs with exact disparity ground truth.

The generators sample both views from one wide, band-limited texture so
every left pixel whose match falls inside the right image has an exact,
known disparity. Ground truth is NaN where the match would fall off the
left edge of the right view.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import gaussian_filter

from .core import GrayImage


def _texture(height: int, width: int, rng: np.random.Generator,
             smooth: float = 1.2, lo: float = 20.0, hi: float = 235.0
             ) -> np.ndarray:
    """Band-limited random texture with strong local contrast."""
    t = gaussian_filter(rng.standard_normal((height, width)), smooth)
    t -= t.min()
    t /= max(t.max(), 1e-9)
    return (lo + (hi - lo) * t).astype(np.float32)


def _sample_row(tex_row: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Linear interpolation of one texture row at fractional positions."""
    w = tex_row.size
    x0 = np.clip(np.floor(x).astype(np.int64), 0, w - 2)
    f = np.clip(x - x0, 0.0, 1.0)
    return (tex_row[x0] * (1.0 - f) + tex_row[x0 + 1] * f).astype(np.float32)


def linear_road_scene(height: int, width: int, alpha0: float, alpha1: float,
                      seed: int = 0, noise: float = 0.0
                      ) -> tuple[GrayImage, GrayImage, np.ndarray]:
    """Stereo pair whose disparity is d(v) = alpha0 + alpha1 * v.

    Returns (left, right, gt); gt is float32 with NaN where u < d(v).
    Optional zero-mean Gaussian photometric noise perturbs the right view.
    """
    rng = np.random.default_rng(seed)
    d_of_v = alpha0 + alpha1 * np.arange(height, dtype=np.float64)
    max_d = int(np.ceil(d_of_v.max()))
    tex = _texture(height, width + max_d + 2, rng)

    left = tex[:, :width].copy()
    right = np.empty((height, width), dtype=np.float32)
    us = np.arange(width, dtype=np.float64)
    for v in range(height):
        right[v] = _sample_row(tex[v], us + d_of_v[v])
    if noise > 0:
        right = np.clip(right + rng.normal(0.0, noise, right.shape), 0, 255)
        right = right.astype(np.float32)

    gt = np.tile(d_of_v.astype(np.float32)[:, None], (1, width))
    gt[us[None, :] < d_of_v[:, None]] = np.nan
    return GrayImage(left), GrayImage(right), gt


def constant_scene(height: int, width: int, d: int, seed: int = 0
                   ) -> tuple[GrayImage, GrayImage, np.ndarray]:
    """Fronto-parallel scene with a single integer disparity everywhere."""
    return linear_road_scene(height, width, float(d), 0.0, seed)


def two_plane_scene(height: int, width: int, boundary_u: int,
                    d_fg: int = 20, d_bg: int = 5, seed: int = 0
                    ) -> tuple[GrayImage, GrayImage, np.ndarray]:
    """Two fronto-parallel planes split at a vertical boundary.

    The foreground plane (larger disparity) occupies u < boundary_u so that
    every left pixel keeps a visible match; the dis-occluded band in the
    right view gets independent texture.
    """
    if not 0 < boundary_u < width:
        raise ValueError("boundary must be interior")
    if d_fg <= d_bg:
        raise ValueError("foreground disparity must exceed background")
    rng = np.random.default_rng(seed)
    tex = _texture(height, width + d_fg + 2, rng)
    gap_tex = _texture(height, width, np.random.default_rng(seed + 1))

    row = np.where(np.arange(width) < boundary_u,
                   np.float32(d_fg), np.float32(d_bg))
    gt = np.tile(row, (height, 1))
    left = tex[:, :width].copy()

    right = gap_tex.copy()
    ur = np.arange(width)
    fg_cols = ur + d_fg < boundary_u          # foreground projections
    bg_cols = ur + d_bg >= boundary_u         # background projections
    right[:, fg_cols] = tex[:, ur[fg_cols] + d_fg]
    right[:, bg_cols] = tex[:, ur[bg_cols] + d_bg]

    gt[np.arange(width)[None, :] < gt] = np.nan
    return GrayImage(left), GrayImage(right), gt
