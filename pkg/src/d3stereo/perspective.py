"""Perspective transformation of the right road image.

For a planar road under rectified stereo, disparity is affine in the image
row. A row-linear model fitted to the coarsest dense disparity map shifts
each right-image row so that residual disparities concentrate in a narrow
band, shrinking the search range at the finer levels. Shifts are integer
column moves (no resampling), and vacated columns are marked invalid.

To keep residual disparities non-negative when the true disparity falls
below the model line, the applied shift is the model prediction minus a
fixed bias tau_pt; the shift table stores the effective applied shifts, so
true disparity = residual + table[v].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DisparityMap, GrayImage
from .errors import DegenerateFit, InsufficientSeeds

MIN_FIT_SAMPLES = 50


@dataclass(frozen=True)
class RoadDisparityModel:
    alpha0: float  # disparity intercept, full-resolution pixels
    alpha1: float  # disparity slope per full-resolution image row
    inlier_fraction: float

    def predict(self, v: np.ndarray | float):
        return self.alpha0 + self.alpha1 * np.asarray(v, dtype=np.float64)


def fit_road_model(dense_k: DisparityMap, level_scale: int) -> RoadDisparityModel:
    """Least-squares d = a0 + a1*v over decisive pixels, one outlier re-fit.

    level_scale is 2^(k-1); samples are lifted to full resolution before
    fitting so the model applies directly to the full-resolution image.
    Residuals beyond 2 px (full resolution) are discarded once.
    """
    dec = dense_k.states >= 0
    vs, us = np.nonzero(dec)
    if vs.size < MIN_FIT_SAMPLES:
        raise InsufficientSeeds(
            f"{vs.size} decisive pixels < {MIN_FIT_SAMPLES}")
    if np.unique(vs).size <= 2:
        raise DegenerateFit("decisive pixels span too few rows")

    v_full = vs.astype(np.float64) * level_scale
    d_full = dense_k.states[vs, us].astype(np.float64) * level_scale

    def lsq(v, d):
        a = np.stack([np.ones_like(v), v], axis=1)
        coef, *_ = np.linalg.lstsq(a, d, rcond=None)
        return coef

    a0, a1 = lsq(v_full, d_full)
    resid = np.abs(d_full - (a0 + a1 * v_full))
    inliers = resid <= 2.0
    if inliers.sum() >= MIN_FIT_SAMPLES and np.unique(vs[inliers]).size > 2:
        a0, a1 = lsq(v_full[inliers], d_full[inliers])
    return RoadDisparityModel(float(a0), float(a1),
                              float(inliers.mean()))


def apply_pt(right: GrayImage, model: RoadDisparityModel,
             tau_pt: int = 0) -> tuple[GrayImage, np.ndarray]:
    """Shift each right-image row right by round(model(v)) - tau_pt.

    Returns the transformed image (vacated pixels zero-filled and masked
    invalid) and the per-row effective shift table. Negative effective
    shifts move the row left and vacate right-edge columns.
    """
    h, w = right.data.shape
    shifts = np.rint(model.predict(np.arange(h))).astype(np.int64) - tau_pt
    out = np.zeros((h, w), dtype=np.float32)
    mask = np.zeros((h, w), dtype=bool)
    src_mask = right.valid_mask()
    for v in range(h):
        s = int(shifts[v])
        if s >= w or s <= -w:
            continue
        if s >= 0:
            out[v, s:] = right.data[v, :w - s]
            mask[v, s:] = src_mask[v, :w - s]
        else:
            out[v, :w + s] = right.data[v, -s:]
            mask[v, :w + s] = src_mask[v, -s:]
    return GrayImage(out, mask), shifts.astype(np.float32)


def to_residual(parent_map: DisparityMap, shift_table: np.ndarray,
                level_scale: int) -> DisparityMap:
    """Express a true-disparity map in residual units of the transformed pair.

    The shift table lives at full resolution; at a level whose pixels are
    level_scale times coarser, row v samples the table at v*level_scale and
    the shift scales down by level_scale. Residuals falling below zero mark
    the pixel unknown (the transform cannot represent them).
    """
    h, w = parent_map.states.shape
    vs = np.arange(h) * level_scale
    vs = np.clip(vs, 0, shift_table.size - 1)
    row_shift = np.rint(shift_table[vs] / level_scale).astype(np.int32)
    states = parent_map.states.copy()
    dec = states >= 0
    resid = states - row_shift[:, None]
    states = np.where(dec & (resid >= 0), resid, states)
    states[dec & (resid < 0)] = -1
    return DisparityMap(states, parent_map.level)


def compose_disparity(residual: np.ndarray, shift_table: np.ndarray) -> np.ndarray:
    """True disparity raster = residual + per-row effective shift (NaN kept)."""
    return (residual + shift_table[:residual.shape[0], None]).astype(np.float32)
