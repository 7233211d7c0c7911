"""Cost aggregation via recursive bilateral filtering.

The recursive variant applies a small (2*kappa_a+1)^2 bilateral kernel
t_max times; each iteration reads the previous buffer and writes a fresh
one, so results do not depend on pixel visit order. A single-pass
traditional bilateral filter with an arbitrary radius shares the same inner
pass, which also makes the t_max=1 / radius=1 equivalence exact.

Kernel weights follow

    K(q) = exp(-||p - q||^2 / sigma1^2 - (I(p) - I(q))^2 / sigma2^2)

with K(p) = 1. Sentinel cells (out-of-range disparities) are excluded from
both the weighted sum and its normalizer and stay at cost 1.0.

Instrumented runs count the multiply-add that folds one neighbor cell into
one output cell; the traditional-vs-recursive work ratio for an equal
receptive field is (1/9)(4*t + 1/t + 4).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import CostVolume, GrayImage, Pixel, neighborhood
from .errors import DimensionMismatch
from .parallel import map_indices


@dataclass
class RbfKernelParams:
    sigma1: float = 2.0
    sigma2: float = 10.0
    kappa_a: int = 1
    t_max: int = 4

    def __post_init__(self):
        if self.sigma1 <= 0 or self.sigma2 <= 0:
            raise ValueError("sigma1 and sigma2 must be > 0")
        if self.kappa_a < 1 or self.t_max < 1:
            raise ValueError("kappa_a and t_max must be >= 1")


@dataclass
class OpCounter:
    """Accumulates per-cell multiply-add counts across filter passes."""

    macs: int = 0
    passes: int = 0


def rbf_weights(guide: GrayImage, p: Pixel, params: RbfKernelParams
                ) -> list[tuple[Pixel, float]]:
    """Kernel weights for q in N_p (radius kappa_a) plus p itself.

    Reference implementation; the aggregation below vectorizes the same
    arithmetic.
    """
    out = [(p, 1.0)]
    ip = float(guide.data[p.v, p.u])
    for q in neighborhood(p, params.kappa_a, guide.width, guide.height):
        spatial = (q.u - p.u) ** 2 + (q.v - p.v) ** 2
        di = float(guide.data[q.v, q.u]) - ip
        w = math.exp(-spatial / params.sigma1 ** 2 - di * di / params.sigma2 ** 2)
        out.append((q, w))
    return out


def _filter_pass(cost: np.ndarray, valid_f: np.ndarray, guide: np.ndarray,
                 radius: int, sigma1: float, sigma2: float,
                 counter: OpCounter | None, threads: int | None) -> np.ndarray:
    """One bilateral pass over all disparity planes.

    cost: (H, W, D) float32 with sentinel cells already at 1.0
    valid_f: (H, W, D) float32 0/1 mask

    Planes are partitioned into contiguous chunks for the worker pool; every
    cell is produced by exactly one worker through the same offset sequence,
    so the result is independent of the worker count.
    """
    h, w, dd = cost.shape
    out = np.ones((h, w, dd), dtype=np.float32)
    cv = cost * valid_f  # masked costs, float32
    inv_s1 = 1.0 / (sigma1 * sigma1)
    inv_s2 = 1.0 / (sigma2 * sigma2)

    from .parallel import thread_count
    workers = thread_count() if threads is None else max(1, threads)
    n_chunks = min(max(1, workers), dd)
    bounds = np.linspace(0, dd, n_chunks + 1).astype(int)
    mac_counts = [0] * n_chunks

    def one_chunk(ci: int) -> None:
        d0, d1 = bounds[ci], bounds[ci + 1]
        if d0 == d1:
            return
        num = np.zeros((h, w, d1 - d0), dtype=np.float64)
        den = np.zeros((h, w, d1 - d0), dtype=np.float64)
        cvc = cv[:, :, d0:d1]
        vfc = valid_f[:, :, d0:d1]
        macs = 0
        for dy in range(-radius, radius + 1):
            for dx in range(-radius, radius + 1):
                ov0, ov1 = max(0, -dy), h - max(0, dy)
                ou0, ou1 = max(0, -dx), w - max(0, dx)
                if ov0 >= ov1 or ou0 >= ou1:
                    continue
                dst = (slice(ov0, ov1), slice(ou0, ou1))
                src = (slice(ov0 + dy, ov1 + dy), slice(ou0 + dx, ou1 + dx))
                if dy == 0 and dx == 0:
                    wgt = np.ones((ov1 - ov0, ou1 - ou0), dtype=np.float32)
                else:
                    di = guide[dst] - guide[src]
                    wgt = np.exp(-((dy * dy + dx * dx) * inv_s1
                                   + di * di * inv_s2)).astype(np.float32)
                num[dst] += wgt[:, :, None] * cvc[src]
                den[dst] += wgt[:, :, None] * vfc[src]
                if counter is not None:
                    macs += int((vfc[src] * vfc[dst]).sum(dtype=np.float64))
        keep = vfc > 0
        with np.errstate(invalid="ignore", divide="ignore"):
            filtered = (num / den).astype(np.float32)
        chunk_out = out[:, :, d0:d1]
        chunk_out[keep] = filtered[keep]
        mac_counts[ci] = macs

    map_indices(one_chunk, n_chunks, threads=n_chunks if workers > 1 else 1)
    if counter is not None:
        counter.macs += sum(mac_counts)
        counter.passes += 1
    return out


def _check_guide(volume: CostVolume, guide: GrayImage) -> None:
    if guide.data.shape != volume.data.shape[:2]:
        raise DimensionMismatch("guide image does not match volume dims")


def rbf_aggregate(volume: CostVolume, guide: GrayImage,
                  params: RbfKernelParams,
                  counter: OpCounter | None = None,
                  threads: int | None = None) -> CostVolume:
    """t_max double-buffered small-kernel bilateral passes."""
    _check_guide(volume, guide)
    valid_f = volume.valid.astype(np.float32)
    cur = volume.data
    for _ in range(params.t_max):
        cur = _filter_pass(cur, valid_f, guide.data, params.kappa_a,
                           params.sigma1, params.sigma2, counter, threads)
    return CostVolume(cur, volume.valid.copy(), volume.level, volume.reference)


def bf_aggregate(volume: CostVolume, guide: GrayImage, radius: int,
                 sigma1: float, sigma2: float,
                 counter: OpCounter | None = None,
                 threads: int | None = None) -> CostVolume:
    """Single-pass traditional bilateral filter with a (2r+1)^2 kernel."""
    _check_guide(volume, guide)
    if radius < 1:
        raise ValueError("radius must be >= 1")
    valid_f = volume.valid.astype(np.float32)
    out = _filter_pass(volume.data, valid_f, guide.data, radius,
                       sigma1, sigma2, counter, threads)
    return CostVolume(out, volume.valid.copy(), volume.level, volume.reference)


def op_count_ratio(t_max: int) -> float:
    """Work ratio of one (2t+1)^2 bilateral pass vs t recursive 3x3 passes."""
    if t_max < 1:
        raise ValueError("t_max must be >= 1")
    return (4.0 * t_max + 1.0 / t_max + 4.0) / 9.0
