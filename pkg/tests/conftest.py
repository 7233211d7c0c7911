"""Shared fixtures and planted-volume builders used across test modules."""

import numpy as np
import pytest
from scipy.ndimage import gaussian_filter

from d3stereo.core import CostVolume, DisparityMap, UNKNOWN
from d3stereo.pyramid import derive_right_volume


def smooth_disparity_field(height, width, d_max, rng, smooth=8.0,
                           per_row=False):
    """Integer disparity field varying slowly enough for tau=1 diffusion.

    per_row=True varies the field only along v, which keeps every right-view
    cost row single-minimum (no two left pixels share a projected pixel).
    """
    if per_row:
        f = gaussian_filter(rng.standard_normal(height), smooth)
        f = np.tile(f[:, None], (1, width))
    else:
        f = gaussian_filter(rng.standard_normal((height, width)), smooth)
    f -= f.min()
    f /= max(f.max(), 1e-9)
    d = np.rint(f * min(d_max, width // 3)).astype(np.int32)
    # keep the planted minimum inside the valid (u >= d) wedge
    us = np.arange(width)[None, :]
    return np.minimum(d, us).astype(np.int32)


def planted_volume_pair(height, width, d_max, rng, gt=None,
                        lo=(0.02, 0.08), hi=(0.3, 0.9), level=1):
    """Left/right cost volumes with a unique deep minimum at the planted gt.

    Returns (c_left, c_right, gt). The right volume is derived through the
    exact C_R(p, d) = C_L(p + (d, 0), d) relation.
    """
    if gt is None:
        gt = smooth_disparity_field(height, width, d_max, rng)
    data = rng.uniform(hi[0], hi[1], (height, width, d_max + 1)).astype(np.float32)
    vv, uu = np.mgrid[0:height, 0:width]
    data[vv, uu, gt] = rng.uniform(lo[0], lo[1], (height, width)).astype(np.float32)
    valid = np.ones_like(data, dtype=bool)
    for d in range(d_max + 1):
        valid[:, :d, d] = False
    data[~valid] = 1.0
    c_left = CostVolume(data, valid, level, "left")
    return c_left, derive_right_volume(c_left), gt


def seed_map_from(gt, fraction, rng, level=1):
    """Sparse decisive map holding the planted disparity at random pixels."""
    h, w = gt.shape
    states = np.full((h, w), UNKNOWN, np.int32)
    n = max(1, int(fraction * h * w))
    idx = rng.choice(h * w, size=n, replace=False)
    states.ravel()[idx] = gt.ravel()[idx]
    return DisparityMap(states, level)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
