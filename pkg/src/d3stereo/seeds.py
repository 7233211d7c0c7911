"""Coarse decisive-disparity initialization at the deepest pyramid level.

A pixel becomes a seed when its best match is distinctive in both views
(peak-ratio-naive score above gamma on the left and at the projected right
pixel) and the two views agree on the disparity (left-right disparity
consistency within a tolerance).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import UNKNOWN, CostVolume, DisparityMap, Pixel
from .errors import InsufficientCandidates


@dataclass(frozen=True)
class PkrnScore:
    best_d: int
    best_cost: float
    second_cost: float
    ratio: float


def _ratio(best: np.ndarray, second: np.ndarray) -> np.ndarray:
    """second/best with the conventions ratio(0, x>0) = inf, ratio(0, 0) = 1."""
    out = np.ones_like(best, dtype=np.float64)
    pos = best > 0
    np.divide(second, best, out=out, where=pos)
    out[(~pos) & (second > 0)] = np.inf
    return out


def pkrn(costs: np.ndarray, valid: np.ndarray | None = None) -> PkrnScore:
    """Peak-ratio-naive score of one per-disparity cost row.

    Ties break toward the smaller disparity. Raises InsufficientCandidates
    when fewer than two valid entries exist.
    """
    costs = np.asarray(costs, dtype=np.float64)
    if valid is None:
        valid = np.ones(costs.shape, dtype=bool)
    masked = np.where(valid, costs, np.inf)
    if int(valid.sum()) < 2:
        raise InsufficientCandidates("pkrn needs at least 2 valid costs")
    best_d = int(np.argmin(masked))
    best = float(masked[best_d])
    rest = masked.copy()
    rest[best_d] = np.inf
    second = float(rest.min())
    ratio = float(_ratio(np.float64(best), np.float64(second)))
    return PkrnScore(best_d, best, second, ratio)


def wta_map(volume: CostVolume) -> tuple[np.ndarray, np.ndarray]:
    """Per-pixel argmin disparity and its cost; -1 where no cell is valid."""
    masked = np.where(volume.valid, volume.data, np.float32(np.inf))
    best_d = np.argmin(masked, axis=2).astype(np.int32)
    best_c = np.take_along_axis(masked, best_d[:, :, None].astype(np.int64),
                                axis=2)[:, :, 0]
    none_valid = ~volume.valid.any(axis=2)
    best_d[none_valid] = -1
    return best_d, best_c


def _pkrn_fields(volume: CostVolume):
    """Vectorized pkrn over a whole volume."""
    masked = np.where(volume.valid, volume.data.astype(np.float64), np.inf)
    best_d = np.argmin(masked, axis=2)
    best = np.take_along_axis(masked, best_d[:, :, None], axis=2)[:, :, 0]
    rest = masked.copy()
    np.put_along_axis(rest, best_d[:, :, None], np.inf, axis=2)
    second = rest.min(axis=2)
    count = volume.valid.sum(axis=2)
    ratio = _ratio(best, second)
    return best_d.astype(np.int32), best, ratio, count


def lrdc_check(d_left: DisparityMap, d_right: DisparityMap, p: Pixel,
               tol: int) -> bool:
    """Left-right disparity consistency for a single decisive left pixel."""
    dl = int(d_left.states[p.v, p.u])
    if dl < 0:
        raise ValueError("pixel is not decisive in the left map")
    pu = p.u - dl
    if pu < 0 or pu >= d_right.width:
        return False
    dr = int(d_right.states[p.v, pu])
    if dr < 0:
        return False
    return abs(dl - dr) <= tol


def init_seeds(c_left: CostVolume, c_right: CostVolume, gamma: float,
               lrdc_tol: int) -> DisparityMap:
    """Sparse seed map at the deepest level.

    A pixel is decisive iff its left pkrn ratio exceeds gamma, the projected
    right pixel's pkrn ratio exceeds gamma, and the two winner disparities
    agree within lrdc_tol.
    """
    if c_left.data.shape != c_right.data.shape:
        raise ValueError("volume shapes differ")
    h, w, _ = c_left.data.shape
    bd_l, _, ratio_l, count_l = _pkrn_fields(c_left)
    bd_r, _, ratio_r, count_r = _pkrn_fields(c_right)

    vv, uu = np.mgrid[0:h, 0:w]
    proj_u = uu - bd_l
    in_b = (proj_u >= 0) & (count_l >= 2) & (ratio_l > gamma)
    proj_u_safe = np.clip(proj_u, 0, w - 1)
    ratio_r_at = ratio_r[vv, proj_u_safe]
    count_r_at = count_r[vv, proj_u_safe]
    bd_r_at = bd_r[vv, proj_u_safe]
    ok = (in_b & (count_r_at >= 2) & (ratio_r_at > gamma)
          & (np.abs(bd_l - bd_r_at) <= lrdc_tol))

    states = np.where(ok, bd_l, UNKNOWN).astype(np.int32)
    return DisparityMap(states, c_left.level)
