"""Writer for the D3FP feature-pyramid container.

Wire format (all integers little-endian u32):

    magic "D3FP" | version=1 | level count N |
    N x (height, width, channels) | N payloads

Each payload is height*width*channels float32 little-endian samples stored
channel-minor: index = (v*W + u)*C + c. Levels are ordered finest first and
each level is exactly half the resolution of the previous one.
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"D3FP"
VERSION = 1


def write_d3fp(levels: list[np.ndarray], path) -> None:
    """levels: (H, W, C) float32 arrays, finest first, strictly halving."""
    if len(levels) < 2:
        raise ValueError("D3FP needs at least 2 levels")
    for prev, cur in zip(levels, levels[1:]):
        ph, pw = prev.shape[:2]
        h, w = cur.shape[:2]
        if not ((h == (ph + 1) // 2 or 2 * h == ph)
                and (w == (pw + 1) // 2 or 2 * w == pw)):
            raise ValueError(f"level {h}x{w} does not halve {ph}x{pw}")
    blob = bytearray()
    blob += MAGIC
    blob += struct.pack("<II", VERSION, len(levels))
    for lv in levels:
        if lv.ndim != 3:
            raise ValueError("levels must be (H, W, C)")
        if not np.all(np.isfinite(lv)):
            raise ValueError("non-finite feature value")
        h, w, c = lv.shape
        blob += struct.pack("<III", h, w, c)
    with open(path, "wb") as f:
        f.write(bytes(blob))
        for lv in levels:
            f.write(np.ascontiguousarray(lv, dtype="<f4").tobytes())
