"""Bit-exact readers/writers for images, disparity rasters, and feature pyramids.

Formats:

* PFM ("Pf"): ASCII header ``Pf\\n<W> <H>\\n<scale>\\n`` followed by W*H
  float32 samples stored bottom-up; negative scale means little-endian.
* D3FP: custom container for feature pyramids. Layout (all integers u32
  little-endian): magic ``D3FP``, version (=1), level count, then one
  (height, width, channels) triple per level, then the level payloads in
  order as float32 little-endian, channel-minor
  (index = (v*W + u)*C + c).
* PGM/PPM binary (P5/P6, maxval <= 255) and 8-bit PNG.

All hand-parsed readers reject trailing bytes after the declared payload.
"""

from __future__ import annotations

import struct

import numpy as np
from PIL import Image, UnidentifiedImageError

from . import errors
from .core import GrayImage
from .pyramid import FeaturePyramid

D3FP_MAGIC = b"D3FP"
D3FP_VERSION = 1


# --------------------------------------------------------------------------
# PFM
# --------------------------------------------------------------------------

def _read_pfm_token(buf: bytes, pos: int) -> tuple[bytes, int]:
    while pos < len(buf) and buf[pos] in b" \t\r\n":
        pos += 1
    start = pos
    while pos < len(buf) and buf[pos] not in b" \t\r\n":
        pos += 1
    if start == pos:
        raise errors.UnexpectedEof("truncated PFM header")
    return buf[start:pos], pos


def read_pfm(path) -> tuple[np.ndarray, float]:
    """Read a single-channel PFM file.

    Returns (raster, scale) with the raster flipped to top-down row order.
    NaN entries are preserved; interpret them (and +/-Inf) as invalid when
    the raster is a disparity map.
    """
    try:
        with open(path, "rb") as f:
            buf = f.read()
    except OSError as e:
        raise errors.IoFailure(str(e)) from e

    magic, pos = _read_pfm_token(buf, 0)
    if magic == b"PF":
        raise errors.ColorPfmUnsupported("3-channel PFM is not supported")
    if magic != b"Pf":
        raise errors.MalformedHeader(f"bad PFM magic {magic!r}")
    try:
        tok, pos = _read_pfm_token(buf, pos)
        width = int(tok)
        tok, pos = _read_pfm_token(buf, pos)
        height = int(tok)
        tok, pos = _read_pfm_token(buf, pos)
        scale = float(tok)
    except ValueError as e:
        raise errors.MalformedHeader(f"bad PFM header field: {e}") from e
    if width <= 0 or height <= 0:
        raise errors.MalformedHeader("non-positive PFM dimensions")
    if scale == 0:
        raise errors.MalformedHeader("PFM scale must be nonzero")
    # exactly one whitespace byte terminates the header
    if pos >= len(buf):
        raise errors.UnexpectedEof("missing PFM payload")
    pos += 1

    n = width * height
    payload = buf[pos:]
    if len(payload) < 4 * n:
        raise errors.UnexpectedEof(
            f"PFM payload has {len(payload)} bytes, expected {4 * n}")
    if len(payload) > 4 * n:
        raise errors.TrailingGarbage("bytes after PFM payload")
    dt = np.dtype("<f4") if scale < 0 else np.dtype(">f4")
    raster = np.frombuffer(payload, dtype=dt).reshape(height, width)
    raster = np.ascontiguousarray(raster[::-1].astype(np.float32))
    return raster, scale


def write_pfm(raster: np.ndarray, path, scale: float = -1.0) -> None:
    """Write a 2D float raster as little-endian PFM (scale -1.0 by default)."""
    raster = np.asarray(raster, dtype=np.float32)
    if raster.ndim != 2 or raster.size == 0:
        raise errors.MalformedInput("PFM raster must be non-empty and 2D")
    if scale >= 0:
        raise errors.MalformedInput("only little-endian output is supported")
    h, w = raster.shape
    try:
        with open(path, "wb") as f:
            f.write(f"Pf\n{w} {h}\n{scale}\n".encode("ascii"))
            f.write(np.ascontiguousarray(raster[::-1]).astype("<f4").tobytes())
    except OSError as e:
        raise errors.IoFailure(str(e)) from e


def load_disparity_pfm(path) -> np.ndarray:
    """Read a PFM disparity map; NaN/Inf entries become NaN (invalid)."""
    raster, _ = read_pfm(path)
    raster[~np.isfinite(raster)] = np.nan
    return raster


# --------------------------------------------------------------------------
# D3FP feature pyramids
# --------------------------------------------------------------------------

def read_feature_pyramid(path) -> FeaturePyramid:
    try:
        with open(path, "rb") as f:
            buf = f.read()
    except OSError as e:
        raise errors.IoFailure(str(e)) from e

    if len(buf) < 12:
        raise errors.UnexpectedEof("file too small for a D3FP header")
    if buf[:4] != D3FP_MAGIC:
        raise errors.BadMagic(f"bad magic {buf[:4]!r}")
    version, levels = struct.unpack_from("<II", buf, 4)
    if version != D3FP_VERSION:
        raise errors.UnsupportedVersion(f"D3FP version {version}")
    if levels < 2:
        raise errors.MalformedHeader("D3FP needs at least 2 levels")
    pos = 12
    dims = []
    for _ in range(levels):
        if pos + 12 > len(buf):
            raise errors.UnexpectedEof("truncated D3FP level table")
        h, w, c = struct.unpack_from("<III", buf, pos)
        pos += 12
        if h == 0 or w == 0 or c == 0:
            raise errors.MalformedHeader("zero D3FP level dimension")
        dims.append((h, w, c))

    for (ph, pw, _), (h, w, _) in zip(dims, dims[1:]):
        ok_h = (h == (ph + 1) // 2) or (2 * h == ph)
        ok_w = (w == (pw + 1) // 2) or (2 * w == pw)
        if not (ok_h and ok_w):
            raise errors.NonHalvingResolution(
                f"level {h}x{w} does not halve {ph}x{pw}")

    maps = []
    for h, w, c in dims:
        n = h * w * c
        if pos + 4 * n > len(buf):
            raise errors.UnexpectedEof("truncated D3FP payload")
        arr = np.frombuffer(buf, dtype="<f4", count=n, offset=pos)
        pos += 4 * n
        if not np.all(np.isfinite(arr)):
            raise errors.NonFiniteFeature("non-finite feature value")
        maps.append(np.ascontiguousarray(arr.reshape(h, w, c).astype(np.float32)))
    if pos != len(buf):
        raise errors.TrailingGarbage("bytes after D3FP payload")
    return FeaturePyramid(levels=maps)


def write_feature_pyramid(pyr: FeaturePyramid, path) -> None:
    header = bytearray()
    header += D3FP_MAGIC
    header += struct.pack("<II", D3FP_VERSION, len(pyr.levels))
    for lv in pyr.levels:
        h, w, c = lv.shape
        header += struct.pack("<III", h, w, c)
    try:
        with open(path, "wb") as f:
            f.write(bytes(header))
            for lv in pyr.levels:
                f.write(np.ascontiguousarray(lv).astype("<f4").tobytes())
    except OSError as e:
        raise errors.IoFailure(str(e)) from e


# --------------------------------------------------------------------------
# Images (PGM/PPM/PNG)
# --------------------------------------------------------------------------

def _pnm_tokens(buf: bytes, pos: int, count: int) -> tuple[list[int], int]:
    """Read whitespace/comment-separated ASCII integers from a PNM header."""
    out: list[int] = []
    while len(out) < count:
        while pos < len(buf) and buf[pos] in b" \t\r\n":
            pos += 1
        if pos < len(buf) and buf[pos:pos + 1] == b"#":
            while pos < len(buf) and buf[pos] not in b"\r\n":
                pos += 1
            continue
        start = pos
        while pos < len(buf) and buf[pos] not in b" \t\r\n":
            pos += 1
        if start == pos:
            raise errors.UnexpectedEof("truncated PNM header")
        try:
            out.append(int(buf[start:pos]))
        except ValueError as e:
            raise errors.MalformedHeader("bad PNM header token") from e
    return out, pos


def _luminance(rgb: np.ndarray) -> np.ndarray:
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    return (0.299 * r + 0.587 * g + 0.114 * b).astype(np.float32)


def read_image(path) -> GrayImage:
    """Read an 8-bit PGM/PPM/PNG image as grayscale luminance."""
    path = str(path)
    try:
        with open(path, "rb") as f:
            buf = f.read()
    except OSError as e:
        raise errors.IoFailure(str(e)) from e

    if buf[:2] in (b"P5", b"P6"):
        (w, h, maxval), pos = _pnm_tokens(buf, 2, 3)
        if maxval > 255 or maxval <= 0:
            raise errors.UnsupportedFormat("only 8-bit PNM is supported")
        pos += 1  # single whitespace byte after maxval
        ch = 3 if buf[:2] == b"P6" else 1
        n = w * h * ch
        payload = buf[pos:]
        if len(payload) < n:
            raise errors.UnexpectedEof("truncated PNM payload")
        if len(payload) > n:
            raise errors.TrailingGarbage("bytes after PNM payload")
        arr = np.frombuffer(payload, dtype=np.uint8)
        if ch == 1:
            return GrayImage(arr.reshape(h, w).astype(np.float32))
        return GrayImage(_luminance(arr.reshape(h, w, 3).astype(np.float32)))

    try:
        img = Image.open(path)
        img.load()
    except (UnidentifiedImageError, OSError, SyntaxError) as e:
        raise errors.DecodeError(f"cannot decode image: {e}") from e
    if img.format not in ("PNG",):
        raise errors.UnsupportedFormat(f"unsupported image format {img.format}")
    if img.mode in ("I", "I;16", "I;16B", "I;16L", "F"):
        raise errors.UnsupportedFormat("16-bit PNG is not supported")
    if img.mode == "L":
        return GrayImage(np.asarray(img, dtype=np.float32))
    if img.mode in ("RGB", "RGBA"):
        rgb = np.asarray(img.convert("RGB"), dtype=np.float32)
        return GrayImage(_luminance(rgb))
    if img.mode == "P":
        rgb = np.asarray(img.convert("RGB"), dtype=np.float32)
        return GrayImage(_luminance(rgb))
    raise errors.UnsupportedFormat(f"unsupported PNG mode {img.mode}")


def write_pgm(img: GrayImage, path) -> None:
    data = np.clip(np.rint(img.data), 0, 255).astype(np.uint8)
    try:
        with open(path, "wb") as f:
            f.write(f"P5\n{img.width} {img.height}\n255\n".encode("ascii"))
            f.write(data.tobytes())
    except OSError as e:
        raise errors.IoFailure(str(e)) from e
