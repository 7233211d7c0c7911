"""Color-mapped PNG rendering of disparity rasters for quick inspection."""

from __future__ import annotations

import numpy as np
from PIL import Image


def _jet(x: np.ndarray) -> np.ndarray:
    """Classic jet-style colormap, x in [0, 1] -> uint8 RGB."""
    r = np.clip(1.5 - np.abs(4.0 * x - 3.0), 0.0, 1.0)
    g = np.clip(1.5 - np.abs(4.0 * x - 2.0), 0.0, 1.0)
    b = np.clip(1.5 - np.abs(4.0 * x - 1.0), 0.0, 1.0)
    return (np.stack([r, g, b], axis=-1) * 255.0 + 0.5).astype(np.uint8)


def disparity_to_png(raster: np.ndarray, path) -> None:
    """Render a disparity raster; invalid (NaN) pixels are black."""
    valid = np.isfinite(raster)
    if valid.any():
        lo = float(raster[valid].min())
        hi = float(raster[valid].max())
        span = hi - lo if hi > lo else 1.0
        norm = np.where(valid, (raster - lo) / span, 0.0)
    else:
        norm = np.zeros_like(raster)
    rgb = _jet(np.clip(norm, 0.0, 1.0))
    rgb[~valid] = 0
    Image.fromarray(rgb, "RGB").save(path)
