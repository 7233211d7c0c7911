"""Intra-scale decisive disparity diffusion.

Sparse decisive disparities grow into a dense map by repeatedly (1) forming
per-pixel candidate sets from decisive neighbors' disparities within a
search tolerance, (2) taking the cheapest candidate, and (3) accepting it
only when its matching cost is a strict local minimum along the disparity
axis and the right view agrees. The right-view agreement compares against
the full-range winner-take-all disparity of the right-reference volume at
the projected pixel, which a post-hoc sweep can verify exactly.

Each iteration reads the previous iteration's map (Jacobi update), so the
result is independent of pixel visit order. An adversarial rule lets
already-decisive pixels switch state only when the new candidate's cost is
at least as good as the best cost the pixel ever held; otherwise the
historical state stands.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import CostVolume, DisparityMap, DisparityState, Pixel, neighborhood
from .errors import DiffusionDiverged, DimensionMismatch
from .seeds import wta_map

_BIG = np.int32(1 << 30)


def candidate_set(p: Pixel, dmap: DisparityMap, tau: int, kappa_d: int,
                  d_max: int) -> set[int]:
    """Union over decisive neighbors q of {d(q) + r, |r| <= tau}, within range."""
    out: set[int] = set()
    for q in neighborhood(p, kappa_d, dmap.width, dmap.height):
        dq = int(dmap.states[q.v, q.u])
        if dq < 0:
            continue
        for r in range(-tau, tau + 1):
            c = dq + r
            if 0 <= c <= d_max:
                out.add(c)
    return out


def _cost_at(volume: CostVolume, v: int, u: int, d: int) -> float:
    """Stored cost with out-of-range disparities treated as 1.0."""
    if d < 0 or d > volume.d_max:
        return 1.0
    return float(volume.data[v, u, d])


def evaluate_state(p: Pixel, candidates, c_left: CostVolume,
                   c_right: CostVolume, lrdc_tol: int,
                   wta_right: np.ndarray | None = None) -> DisparityState:
    """Cheapest candidate, kept only if it passes the two hypotheses.

    Hypothesis (2): the matching cost at the chosen disparity is a strict
    local minimum against its disparity neighbors. Hypothesis (3): the
    right-reference winner-take-all disparity at the projected pixel agrees
    within lrdc_tol.
    """
    cands = sorted(int(c) for c in candidates)
    if not cands:
        raise ValueError("candidate set must be non-empty")
    best_d, best_c = -1, np.inf
    for c in cands:
        if 0 <= c <= c_left.d_max and c_left.valid[p.v, p.u, c]:
            cc = float(c_left.data[p.v, p.u, c])
            if cc < best_c:
                best_d, best_c = c, cc
    if best_d < 0:
        return DisparityState.unknown()

    if not (best_c < _cost_at(c_left, p.v, p.u, best_d - 1)
            and best_c < _cost_at(c_left, p.v, p.u, best_d + 1)):
        return DisparityState.unknown()

    pu = p.u - best_d
    if pu < 0 or pu >= c_right.width:
        return DisparityState.unknown()
    if wta_right is None:
        wta_right = wta_map(c_right)[0]
    wr = int(wta_right[p.v, pu])
    if wr < 0 or abs(best_d - wr) > lrdc_tol:
        return DisparityState.unknown()
    return DisparityState.decisive(best_d)


def adversarial_ok(new_state_cost: float, history_best_cost: float) -> bool:
    """True when the update may proceed; ties favor the newer state."""
    return new_state_cost <= history_best_cost


@dataclass
class DiffusionFrontier:
    """Mutable loop state of one diffusion run.

    pending holds sorted unique flat indices of pixels to re-evaluate;
    cost_history is +inf wherever a pixel has never held a decisive state.
    """

    pending: np.ndarray
    iteration: int
    cost_history: np.ndarray


@dataclass
class DiffusionResult:
    dmap: DisparityMap
    iterations: int


def _dilate_excl(decisive: np.ndarray, radius: int) -> np.ndarray:
    """Pixels having at least one decisive pixel within Chebyshev radius."""
    h, w = decisive.shape
    out = np.zeros((h, w), dtype=bool)
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            if dy == 0 and dx == 0:
                continue
            ov0, ov1 = max(0, -dy), h - max(0, dy)
            ou0, ou1 = max(0, -dx), w - max(0, dx)
            if ov0 >= ov1 or ou0 >= ou1:
                continue
            out[ov0:ov1, ou0:ou1] |= decisive[ov0 + dy:ov1 + dy,
                                              ou0 + dx:ou1 + dx]
    return out


def diffuse(sparse: DisparityMap, c_left: CostVolume, c_right: CostVolume,
            tau: int = 1, kappa_d: int = 1, lrdc_tol: int = 1,
            max_iters: int | None = None) -> DiffusionResult:
    """Grow a sparse decisive map to a dense one at a single level."""
    h, w, _ = c_left.data.shape
    if sparse.states.shape != (h, w):
        raise DimensionMismatch("seed map does not match volume dims")
    d_max = c_left.d_max
    if int(sparse.states.max(initial=-1)) > d_max:
        raise ValueError("seed disparity exceeds the volume range")
    cap = max_iters if max_iters is not None else h * w

    states = sparse.states.copy()
    hist = np.full((h, w), np.inf, dtype=np.float64)
    seed_mask = states >= 0
    if seed_mask.any():
        sv, su = np.nonzero(seed_mask)
        hist[sv, su] = c_left.data[sv, su, states[sv, su]]

    wta_r, _ = wta_map(c_right)
    offsets = [(dy, dx)
               for dy in range(-kappa_d, kappa_d + 1)
               for dx in range(-kappa_d, kappa_d + 1)
               if (dy, dx) != (0, 0)]
    radii = np.arange(-tau, tau + 1, dtype=np.int32)

    fr = DiffusionFrontier(
        pending=np.flatnonzero(_dilate_excl(states >= 0, kappa_d)),
        iteration=0, cost_history=hist)
    data = c_left.data
    valid = c_left.valid
    while fr.pending.size:
        fr.iteration += 1
        if fr.iteration > cap:
            raise DiffusionDiverged(f"no convergence after {cap} iterations")

        v = (fr.pending // w).astype(np.int64)
        u = (fr.pending % w).astype(np.int64)
        n = fr.pending.size
        k = len(offsets) * radii.size
        cand = np.full((n, k), -1, dtype=np.int32)
        col = 0
        for dy, dx in offsets:
            nv = v + dy
            nu = u + dx
            inb = (nv >= 0) & (nv < h) & (nu >= 0) & (nu < w)
            ns = np.where(inb, states[np.clip(nv, 0, h - 1),
                                      np.clip(nu, 0, w - 1)], -1)
            src_ok = ns >= 0
            for r in radii:
                cand[:, col] = np.where(src_ok, ns + r, -1)
                col += 1
        cand_ok = (cand >= 0) & (cand <= d_max)
        cand_idx = np.clip(cand, 0, d_max).astype(np.int64)
        costs = data[v[:, None], u[:, None], cand_idx]
        cell_ok = valid[v[:, None], u[:, None], cand_idx]
        costs = np.where(cand_ok & cell_ok, costs, np.float32(np.inf))

        best_c = costs.min(axis=1)
        has = np.isfinite(best_c)
        best_d = np.where(costs == best_c[:, None], cand_idx, _BIG).min(axis=1)
        best_d = best_d.astype(np.int64)

        lo = np.where(best_d > 0,
                      data[v, u, np.clip(best_d - 1, 0, d_max)],
                      np.float32(1.0))
        hi = np.where(best_d < d_max,
                      data[v, u, np.clip(best_d + 1, 0, d_max)],
                      np.float32(1.0))
        local_min = (best_c < lo) & (best_c < hi)

        pu = u - best_d
        pu_ok = pu >= 0
        wr = wta_r[v, np.clip(pu, 0, w - 1)]
        lrdc = pu_ok & (wr >= 0) & (np.abs(best_d - wr) <= lrdc_tol)

        prev = states[v, u]
        hyp = has & local_min & lrdc
        accept = np.where(prev >= 0,
                          hyp & (best_c <= fr.cost_history[v, u]),
                          hyp)
        changed = accept & (best_d != prev)
        if not changed.any():
            break

        cv_ = v[changed]
        cu_ = u[changed]
        new_states = states.copy()
        new_states[cv_, cu_] = best_d[changed].astype(np.int32)
        fr.cost_history[cv_, cu_] = best_c[changed]
        states = new_states

        nxt = []
        for dy, dx in offsets:
            nv = cv_ + dy
            nu = cu_ + dx
            inb = (nv >= 0) & (nv < h) & (nu >= 0) & (nu < w)
            nxt.append(nv[inb] * w + nu[inb])
        fr.pending = (np.unique(np.concatenate(nxt)) if nxt
                      else np.array([], np.int64))

    return DiffusionResult(DisparityMap(states, sparse.level), fr.iteration)


def validate_decisive(dmap: DisparityMap, c_left: CostVolume,
                      c_right: CostVolume, lrdc_tol: int) -> np.ndarray:
    """Post-hoc sweep: per-pixel pass/fail of local-minimum + LRDC checks.

    Returns a boolean (H, W) array which is True at every decisive pixel
    that passes both checks and False at decisive pixels that fail;
    non-decisive pixels are True (nothing to check).
    """
    h, w = dmap.states.shape
    d_max = c_left.d_max
    ok = np.ones((h, w), dtype=bool)
    dec = dmap.states >= 0
    if not dec.any():
        return ok
    v, u = np.nonzero(dec)
    d = dmap.states[v, u].astype(np.int64)
    c = c_left.data[v, u, d]
    lo = np.where(d > 0, c_left.data[v, u, np.clip(d - 1, 0, d_max)],
                  np.float32(1.0))
    hi = np.where(d < d_max, c_left.data[v, u, np.clip(d + 1, 0, d_max)],
                  np.float32(1.0))
    good = (c < lo) & (c < hi) & c_left.valid[v, u, d]

    wta_r, _ = wta_map(c_right)
    pu = u - d
    pu_ok = pu >= 0
    wr = wta_r[v, np.clip(pu, 0, w - 1)]
    good &= pu_ok & (wr >= 0) & (np.abs(d - wr) <= lrdc_tol)
    ok[v, u] = good
    return ok
