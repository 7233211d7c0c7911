"""Inter-scale decisive disparity inheritance.

A decisive parent pixel at level i+1 expands into a pair of 2x2 patches at
level i (left patch = its four children, right patch = the children of its
match). Matching runs between co-row pixel sets; the patch must first pass
a reliability test (mean within-patch cost strictly below the cheapest
flanking-disparity cost, in both directions), then each co-row pairing must
be a strict local minimum against its disparity neighbors and the flank
costs, again in both directions. Surviving pairings seed the child map; a
child claimed twice keeps the cheaper assignment.

Inherited disparities also have to agree with the right volume's
winner-take-all at the projected pixel, mirroring the consistency rule the
intra-scale diffusion enforces, so that a post-hoc sweep holds for every
decisive pixel regardless of which stage minted it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import UNKNOWN, CostVolume, DisparityMap, Pixel
from .errors import PatchOutOfBounds
from .seeds import wta_map


@dataclass
class PatchPair:
    """Co-row pixel sets of one expanded match, plus their flank pixels."""

    s_top_l: list[Pixel]
    s_bot_l: list[Pixel]
    s_top_r: list[Pixel]
    s_bot_r: list[Pixel]
    g_top_l: list[Pixel]
    g_bot_l: list[Pixel]
    g_top_r: list[Pixel]
    g_bot_r: list[Pixel]
    base_d: int


def expand_match(parent: Pixel, parent_d: int,
                 level_dims: tuple[int, int]) -> PatchPair:
    """Children of a parent match at the next-finer level.

    level_dims is (height, width) of the child level. Raises
    PatchOutOfBounds when any patch pixel falls outside the child raster
    (negative right-patch columns in particular abandon the match).
    """
    h, w = level_dims
    lu, lv = 2 * parent.u, 2 * parent.v
    ru = lu - 2 * parent_d
    if ru < 0:
        raise PatchOutOfBounds("right patch has negative columns")
    if lu + 1 >= w or lv + 1 >= h:
        raise PatchOutOfBounds("left patch exceeds child level dims")

    def row(u0: int, v: int) -> list[Pixel]:
        return [Pixel(u0, v), Pixel(u0 + 1, v)]

    def flanks(u0: int, v: int) -> list[Pixel]:
        out = []
        if u0 - 1 >= 0:
            out.append(Pixel(u0 - 1, v))
        if u0 + 2 < w:
            out.append(Pixel(u0 + 2, v))
        return out

    return PatchPair(
        s_top_l=row(lu, lv), s_bot_l=row(lu, lv + 1),
        s_top_r=row(ru, lv), s_bot_r=row(ru, lv + 1),
        g_top_l=flanks(lu, lv), g_bot_l=flanks(lu, lv + 1),
        g_top_r=flanks(ru, lv), g_bot_r=flanks(ru, lv + 1),
        base_d=2 * parent_d,
    )


def theta(v_ref: list[Pixel], v_other: list[Pixel],
          volume: CostVolume) -> list[float]:
    """Per-reference-pixel minimum cost over co-row pairings.

    The disparity of a pairing is the L1 distance between the co-row pixels;
    pairings whose disparity falls outside [0, d_max] are skipped, and a
    reference pixel left with no pairing contributes sentinel cost 1.0.
    """
    out: list[float] = []
    for pr in v_ref:
        best = np.inf
        for po in v_other:
            d = pr.u - po.u if volume.reference == "left" else po.u - pr.u
            if d < 0 or d > volume.d_max:
                continue
            c = float(volume.data[pr.v, pr.u, d])
            if c < best:
                best = c
        out.append(1.0 if not np.isfinite(best) else best)
    return out


def _mean(values: list[float], groups: list[int], mode: str) -> float:
    if mode == "per-set":
        parts = []
        start = 0
        for g in groups:
            parts.append(sum(values[start:start + g]) / g)
            start += g
        return sum(parts) / len(parts)
    return sum(values) / len(values)


def _flank_min(patch: PatchPair, volume: CostVolume) -> float:
    if volume.reference == "left":
        costs = (theta(patch.s_top_l, patch.g_top_r, volume)
                 + theta(patch.s_bot_l, patch.g_bot_r, volume))
    else:
        costs = (theta(patch.s_top_r, patch.g_top_l, volume)
                 + theta(patch.s_bot_r, patch.g_bot_l, volume))
    return min(costs)


def patch_reliable(patch: PatchPair, c_left: CostVolume, c_right: CostVolume,
                   prc_mean: str = "union") -> bool:
    """Patch reliability constraint, evaluated in both directions."""
    th_t = theta(patch.s_top_l, patch.s_top_r, c_left)
    th_b = theta(patch.s_bot_l, patch.s_bot_r, c_left)
    ok_l = (_mean(th_t + th_b, [len(th_t), len(th_b)], prc_mean)
            < _flank_min(patch, c_left))

    th_t_r = theta(patch.s_top_r, patch.s_top_l, c_right)
    th_b_r = theta(patch.s_bot_r, patch.s_bot_l, c_right)
    ok_r = (_mean(th_t_r + th_b_r, [len(th_t_r), len(th_b_r)], prc_mean)
            < _flank_min(patch, c_right))
    return bool(ok_l and ok_r)


def _cost_or_one(volume: CostVolume, p: Pixel, d: int) -> float:
    if d < 0 or d > volume.d_max:
        return 1.0
    return float(volume.data[p.v, p.u, d])


def local_minimum_ok(p_left: Pixel, d: int, patch: PatchPair,
                     c_left: CostVolume, c_right: CostVolume) -> bool:
    """Strict local-minimum constraint for one co-row pairing, bidirectional."""
    if d < 0 or d > c_left.d_max:
        return False
    c = float(c_left.data[p_left.v, p_left.u, d])
    bound_l = min(_cost_or_one(c_left, p_left, d - 1),
                  _cost_or_one(c_left, p_left, d + 1),
                  _flank_min(patch, c_left))
    if not c < bound_l:
        return False

    p_right = Pixel(p_left.u - d, p_left.v)
    if p_right.u < 0:
        return False
    cr = float(c_right.data[p_right.v, p_right.u, d])
    bound_r = min(_cost_or_one(c_right, p_right, d - 1),
                  _cost_or_one(c_right, p_right, d + 1),
                  _flank_min(patch, c_right))
    return bool(cr < bound_r)


# --------------------------------------------------------------------------
# Vectorized inheritance over a whole parent map
# --------------------------------------------------------------------------

def _gather(volume: CostVolume, v, u, d):
    """Stored costs with out-of-range disparities read as 1.0."""
    d_max = volume.d_max
    ok = (d >= 0) & (d <= d_max)
    di = np.clip(d, 0, d_max)
    vals = volume.data[v, u, di]
    return np.where(ok, vals, np.float32(1.0))


def _theta_min_arrays(volume: CostVolume, v, ref_u, other_us):
    """Vectorized theta: per reference pixel, min pairing cost else 1.0.

    v, ref_u: (N,) reference pixel coords; other_us: list of (N,) candidate
    columns with -1 marking a clipped-away pixel.
    """
    sign = 1 if volume.reference == "left" else -1
    best = np.full(v.shape, np.inf, dtype=np.float64)
    for ou in other_us:
        d = sign * (ref_u - ou)
        ok = (ou >= 0) & (d >= 0) & (d <= volume.d_max)
        cost = _gather(volume, v, ref_u, np.where(ok, d, 0))
        best = np.where(ok, np.minimum(best, cost), best)
    return np.where(np.isfinite(best), best, 1.0)


def inherit(dense_parent: DisparityMap, c_left: CostVolume,
            c_right: CostVolume, prc_mean: str = "union",
            lrdc_tol: int = 1) -> DisparityMap:
    """Sparse child seed map from a (quasi-)dense parent map."""
    h, w, _ = c_left.data.shape
    d_max = c_left.d_max
    out = np.full((h, w), UNKNOWN, np.int32)

    dec = dense_parent.states >= 0
    if not dec.any():
        return DisparityMap(out, c_left.level)
    pv, pu = np.nonzero(dec)
    pd = dense_parent.states[pv, pu].astype(np.int64)

    lu0 = 2 * pu.astype(np.int64)
    lv0 = 2 * pv.astype(np.int64)
    ru0 = lu0 - 2 * pd
    keep = (ru0 >= 0) & (lu0 + 1 < w) & (lv0 + 1 < h)
    if not keep.any():
        return DisparityMap(out, c_left.level)
    lu0, lv0, ru0, pd = lu0[keep], lv0[keep], ru0[keep], pd[keep]
    n = lu0.size

    wta_r, _ = wta_map(c_right)

    # flank columns; -1 = clipped away
    g_r = [np.where(ru0 - 1 >= 0, ru0 - 1, -1),
           np.where(ru0 + 2 < w, ru0 + 2, -1)]
    g_l = [np.where(lu0 - 1 >= 0, lu0 - 1, -1),
           np.where(lu0 + 2 < w, lu0 + 2, -1)]

    rows = [lv0, lv0 + 1]
    lcols = [lu0, lu0 + 1]
    rcols = [ru0, ru0 + 1]

    # theta over the patch pairs and over the flanks, both directions
    th_patch_l = []   # 4 arrays: per row, per left pixel
    th_flank_l = []
    th_patch_r = []
    th_flank_r = []
    for vrow in rows:
        for lj in lcols:
            th_patch_l.append(_theta_min_arrays(c_left, vrow, lj, rcols))
            th_flank_l.append(_theta_min_arrays(c_left, vrow, lj, g_r))
        for rk in rcols:
            th_patch_r.append(_theta_min_arrays(c_right, vrow, rk, lcols))
            th_flank_r.append(_theta_min_arrays(c_right, vrow, rk, g_l))

    def prc_side(patch4: list[np.ndarray], flank4: list[np.ndarray]):
        if prc_mean == "per-set":
            m = ((patch4[0] + patch4[1]) / 2.0 + (patch4[2] + patch4[3]) / 2.0) / 2.0
        else:
            m = (patch4[0] + patch4[1] + patch4[2] + patch4[3]) / 4.0
        fmin = np.minimum(np.minimum(flank4[0], flank4[1]),
                          np.minimum(flank4[2], flank4[3]))
        return m < fmin, fmin

    prc_l, fmin_l = prc_side(th_patch_l, th_flank_l)
    prc_r, fmin_r = prc_side(th_patch_r, th_flank_r)
    prc = prc_l & prc_r

    # evaluate the 8 co-row pairings
    cand_idx: list[np.ndarray] = []
    cand_d: list[np.ndarray] = []
    cand_cost: list[np.ndarray] = []
    for vrow in rows:
        for lj in lcols:
            for rk in rcols:
                d = lj - rk
                ok = prc & (d >= 0) & (d <= d_max)
                cl = _gather(c_left, vrow, lj, d)
                cl_lo = _gather(c_left, vrow, lj, d - 1)
                cl_hi = _gather(c_left, vrow, lj, d + 1)
                ok &= (cl < cl_lo) & (cl < cl_hi) & (cl < fmin_l)
                cr = _gather(c_right, vrow, rk, d)
                cr_lo = _gather(c_right, vrow, rk, d - 1)
                cr_hi = _gather(c_right, vrow, rk, d + 1)
                ok &= (cr < cr_lo) & (cr < cr_hi) & (cr < fmin_r)
                wr = wta_r[vrow, rk]
                ok &= (wr >= 0) & (np.abs(d - wr) <= lrdc_tol)
                if ok.any():
                    cand_idx.append(vrow[ok] * w + lj[ok])
                    cand_d.append(d[ok])
                    cand_cost.append(cl[ok].astype(np.float64))

    if not cand_idx:
        return DisparityMap(out, c_left.level)
    flat = np.concatenate(cand_idx)
    ds = np.concatenate(cand_d)
    cs = np.concatenate(cand_cost)
    # keep the cheapest assignment per child pixel, ties to the smaller d
    order = np.lexsort((ds, cs, flat))
    flat, ds = flat[order], ds[order]
    first = np.ones(flat.size, dtype=bool)
    first[1:] = flat[1:] != flat[:-1]
    out.ravel()[flat[first]] = ds[first].astype(np.int32)
    return DisparityMap(out, c_left.level)
