"""Evaluation suite: disparity accuracy and reconstruction similarity.

Disparity accuracy against ground truth uses mean absolute end-point error
and the percentage of pixels whose absolute error strictly exceeds a
tolerance delta. When no ground truth exists, the right image is warped
into the left view with the estimated disparities and compared against the
original left image via MSE, PSNR, and SSIM.

Estimates with Unknown/Invalid pixels are NaN in raster form; metrics
evaluate only where both inputs are valid and report the evaluated
fraction so density cannot be gamed.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import correlate

from .core import CostVolume, DisparityMap, GrayImage
from .errors import ImageTooSmall, NoValidPixels, NoValidWindows

PSNR_SENTINEL = 99.0  # reported when mse == 0


@dataclass
class MetricReport:
    epe: float | None = None
    pep: dict[float, float] = field(default_factory=dict)
    psnr: float | None = None
    mse: float | None = None
    ssim: float | None = None
    valid_fraction: float = 0.0

    def to_text(self) -> str:
        lines = []
        if self.epe is not None:
            lines.append(f"epe={self.epe:.6f}")
        for delta in sorted(self.pep):
            lines.append(f"pep[{delta:g}]={self.pep[delta]:.4f}")
        if self.mse is not None:
            lines.append(f"mse={self.mse:.6f}")
        if self.psnr is not None:
            lines.append(f"psnr={self.psnr:.4f}")
        if self.ssim is not None:
            lines.append(f"ssim={self.ssim:.6f}")
        lines.append(f"valid_fraction={self.valid_fraction:.6f}")
        return "\n".join(lines) + "\n"

    def ledger_fields(self) -> list[str]:
        def fmt(x):
            return "-" if x is None else f"{x:.6g}"
        peps = ";".join(f"{d:g}:{p:.4f}" for d, p in sorted(self.pep.items()))
        return [fmt(self.epe), peps or "-", fmt(self.psnr), fmt(self.mse),
                fmt(self.ssim), f"{self.valid_fraction:.4f}"]


def _joint_valid(est: np.ndarray, gt: np.ndarray) -> np.ndarray:
    if est.shape != gt.shape:
        raise ValueError("raster shapes differ")
    return np.isfinite(est) & np.isfinite(gt)


def epe(est: np.ndarray, gt: np.ndarray) -> float:
    """Mean absolute disparity error over jointly valid pixels."""
    m = _joint_valid(est, gt)
    if not m.any():
        raise NoValidPixels("no jointly valid pixels")
    return float(np.abs(est[m].astype(np.float64) - gt[m]).mean())


def pep(est: np.ndarray, gt: np.ndarray, delta: float) -> float:
    """Percentage of jointly valid pixels with |error| strictly above delta."""
    m = _joint_valid(est, gt)
    if not m.any():
        raise NoValidPixels("no jointly valid pixels")
    err = np.abs(est[m].astype(np.float64) - gt[m])
    return float(100.0 * (err > delta).mean())


def warp_right_to_left(right: GrayImage, est: np.ndarray
                       ) -> tuple[GrayImage, np.ndarray]:
    """Reconstruct the left view by sampling the right image at u - d.

    Fractional disparities interpolate linearly along the row. Returns the
    warped image and a validity mask (False where the estimate is unknown or
    the sample falls outside the right image).
    """
    h, w = right.data.shape
    if est.shape != (h, w):
        raise ValueError("estimate shape differs from image")
    us = np.arange(w, dtype=np.float64)[None, :]
    x = us - est.astype(np.float64)
    ok = np.isfinite(x) & (x >= 0) & (x <= w - 1)
    x_safe = np.where(ok, x, 0.0)
    x0 = np.minimum(np.floor(x_safe), w - 2).astype(np.int64)
    f = x_safe - x0
    rows = np.arange(h)[:, None]
    a = right.data[rows, x0]
    b = right.data[rows, np.minimum(x0 + 1, w - 1)]
    out = (a * (1.0 - f) + b * f).astype(np.float32)
    rmask = right.valid_mask()
    ok &= rmask[rows, x0] & rmask[rows, np.minimum(x0 + 1, w - 1)]
    out[~ok] = 0.0
    return GrayImage(out), ok


def psnr_mse(a: GrayImage, b: GrayImage, mask: np.ndarray
             ) -> tuple[float, float]:
    """(psnr dB, mse) over masked pixels; identical inputs report 99 dB."""
    if a.data.shape != b.data.shape or mask.shape != a.data.shape:
        raise ValueError("shape mismatch")
    if not mask.any():
        raise NoValidPixels("empty mask")
    diff = a.data[mask].astype(np.float64) - b.data[mask]
    mse = float((diff * diff).mean())
    if mse == 0.0:
        return PSNR_SENTINEL, 0.0
    return 10.0 * math.log10(255.0 ** 2 / mse), mse


def _gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    r = size // 2
    g = np.exp(-np.arange(-r, r + 1, dtype=np.float64) ** 2 / (2 * sigma * sigma))
    win = np.outer(g, g)
    return win / win.sum()


def ssim(a: GrayImage, b: GrayImage, mask: np.ndarray | None = None,
         window_size: int = 11, sigma: float = 1.5) -> float:
    """Mean SSIM over windows fully inside the image and the mask."""
    if a.data.shape != b.data.shape:
        raise ValueError("shape mismatch")
    h, w = a.data.shape
    if h < window_size or w < window_size:
        raise ImageTooSmall(f"SSIM needs at least {window_size}x{window_size}")
    if mask is None:
        mask = np.ones((h, w), dtype=bool)
    r = window_size // 2
    win = _gaussian_window(window_size, sigma)

    x = a.data.astype(np.float64)
    y = b.data.astype(np.float64)
    mu_x = correlate(x, win, mode="constant")
    mu_y = correlate(y, win, mode="constant")
    xx = correlate(x * x, win, mode="constant")
    yy = correlate(y * y, win, mode="constant")
    xy = correlate(x * y, win, mode="constant")
    var_x = xx - mu_x * mu_x
    var_y = yy - mu_y * mu_y
    cov = xy - mu_x * mu_y

    c1 = (0.01 * 255.0) ** 2
    c2 = (0.03 * 255.0) ** 2
    num = (2 * mu_x * mu_y + c1) * (2 * cov + c2)
    den = (mu_x ** 2 + mu_y ** 2 + c1) * (var_x + var_y + c2)
    smap = num / den

    inside = np.zeros((h, w), dtype=bool)
    ones = np.ones((window_size, window_size))
    full = correlate(mask.astype(np.float64), ones, mode="constant")
    inside[r:h - r, r:w - r] = full[r:h - r, r:w - r] >= window_size ** 2 - 0.5
    if not inside.any():
        raise NoValidWindows("no window fits fully inside the mask")
    return float(smap[inside].mean())


def refine_subpixel(dmap: DisparityMap, volume: CostVolume) -> np.ndarray:
    """Parabolic sub-pixel refinement of decisive integer disparities.

    d* = d + (c(d-1) - c(d+1)) / (2 (c(d-1) - 2 c(d) + c(d+1))) whenever the
    parabola opens upward; pixels at the range ends stay integer. Returns a
    float32 raster with NaN at non-decisive pixels.
    """
    out = dmap.to_raster()
    d_max = volume.d_max
    dec = (dmap.states >= 1) & (dmap.states <= d_max - 1)
    if not dec.any():
        return out
    v, u = np.nonzero(dec)
    d = dmap.states[v, u].astype(np.int64)
    c0 = volume.data[v, u, d - 1].astype(np.float64)
    c1 = volume.data[v, u, d].astype(np.float64)
    c2 = volume.data[v, u, d + 1].astype(np.float64)
    denom = c0 - 2.0 * c1 + c2
    ok = denom > 0
    off = np.zeros_like(denom)
    off[ok] = (c0[ok] - c2[ok]) / (2.0 * denom[ok])
    out[v, u] = (d + np.clip(off, -0.5, 0.5)).astype(np.float32)
    return out


def full_report(est: np.ndarray, gt: np.ndarray | None,
                left: GrayImage | None, right: GrayImage | None,
                deltas: tuple[float, ...] = (0.5, 1.0)) -> MetricReport:
    """All metrics computable from the given inputs."""
    rep = MetricReport()
    est_valid = np.isfinite(est)
    rep.valid_fraction = float(est_valid.mean())
    if gt is not None:
        rep.epe = epe(est, gt)
        rep.pep = {d: pep(est, gt, d) for d in deltas}
        joint = _joint_valid(est, gt)
        rep.valid_fraction = float(joint.sum() / max(1, np.isfinite(gt).sum()))
    if left is not None and right is not None:
        warped, mask = warp_right_to_left(right, est)
        if mask.any():
            rep.psnr, rep.mse = psnr_mse(left, warped, mask)
            try:
                rep.ssim = ssim(left, warped, mask)
            except (ImageTooSmall, NoValidWindows):
                rep.ssim = None
    return rep


def append_results_row(path, dataset: str, pair: str, config_hash: str,
                       report: MetricReport) -> None:
    """One tab-separated line per run in a plain-text results ledger."""
    new = not os.path.exists(path)
    with open(path, "a", encoding="utf-8") as f:
        if new:
            f.write("dataset\tpair\tconfig\tepe\tpep\tpsnr\tmse\tssim\tvalid_fraction\n")
        f.write("\t".join([dataset, pair, config_hash]
                          + report.ledger_fields()) + "\n")
