"""Shared domain types and disparity-state machinery.

Conventions used everywhere in this package:

* ``u`` is the column index, ``v`` the row index, origin at the top-left.
* Rasters are stored row-major as numpy arrays indexed ``[v, u]``.
* The left image is the reference view. Disparities are non-negative and the
  match of left pixel ``(u, v)`` at disparity ``d`` is right pixel
  ``(u - d, v)``.
* Disparities are integers while maps are being grown; the final output is
  refined to float32.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, asdict
from typing import NamedTuple

import numpy as np

from .errors import ConfigError

# Disparity-state codes stored in DisparityMap.states. Non-negative entries
# are decisive integer disparities.
UNKNOWN = np.int32(-1)
INVALID = np.int32(-2)


class Pixel(NamedTuple):
    """2D pixel position, u = column, v = row."""

    u: int
    v: int


@dataclass(frozen=True)
class DisparityState:
    """Per-pixel label: unknown, invalid, or a decisive integer disparity."""

    code: int

    @staticmethod
    def unknown() -> "DisparityState":
        return DisparityState(int(UNKNOWN))

    @staticmethod
    def invalid() -> "DisparityState":
        return DisparityState(int(INVALID))

    @staticmethod
    def decisive(d: int) -> "DisparityState":
        if d < 0:
            raise ValueError("decisive disparity must be >= 0")
        return DisparityState(int(d))

    @property
    def is_decisive(self) -> bool:
        return self.code >= 0

    @property
    def d(self) -> int:
        if not self.is_decisive:
            raise ValueError("state holds no disparity")
        return self.code


@dataclass
class GrayImage:
    """Single-channel f32 raster with intensities in [0, 255].

    ``valid`` is an optional per-pixel mask; ``None`` means every pixel is
    valid. The perspective transform marks vacated columns invalid through it.
    """

    data: np.ndarray
    valid: np.ndarray | None = None

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.float32)
        if self.data.ndim != 2:
            raise ValueError("GrayImage.data must be 2D")
        if self.valid is not None:
            self.valid = np.ascontiguousarray(self.valid, dtype=bool)
            if self.valid.shape != self.data.shape:
                raise ValueError("valid mask shape mismatch")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def valid_mask(self) -> np.ndarray:
        if self.valid is None:
            return np.ones(self.data.shape, dtype=bool)
        return self.valid


@dataclass
class CostVolume:
    """H x W x (d_max+1) matching-cost tensor, lower cost = better match.

    Every finite cost lies in [0, 1]. Cells whose disparity points outside
    the opposite image (or into masked-out pixels) carry sentinel cost 1.0
    and are flagged False in ``valid``.
    """

    data: np.ndarray
    valid: np.ndarray
    level: int
    reference: str = "left"  # "left" | "right"

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.float32)
        self.valid = np.ascontiguousarray(self.valid, dtype=bool)
        if self.data.ndim != 3 or self.valid.shape != self.data.shape:
            raise ValueError("CostVolume data/valid must be matching 3D arrays")
        if self.reference not in ("left", "right"):
            raise ValueError("reference must be 'left' or 'right'")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def d_max(self) -> int:
        return self.data.shape[2] - 1


@dataclass
class DisparityMap:
    """H x W map of per-pixel disparity state at one pyramid level.

    ``states`` is int32: UNKNOWN (-1), INVALID (-2), or a decisive d >= 0.
    """

    states: np.ndarray
    level: int

    def __post_init__(self):
        self.states = np.ascontiguousarray(self.states, dtype=np.int32)
        if self.states.ndim != 2:
            raise ValueError("DisparityMap.states must be 2D")

    @property
    def height(self) -> int:
        return self.states.shape[0]

    @property
    def width(self) -> int:
        return self.states.shape[1]

    @staticmethod
    def empty(height: int, width: int, level: int) -> "DisparityMap":
        return DisparityMap(np.full((height, width), UNKNOWN, np.int32), level)

    def state_at(self, p: Pixel) -> DisparityState:
        return DisparityState(int(self.states[p.v, p.u]))

    def set_state(self, p: Pixel, s: DisparityState) -> None:
        self.states[p.v, p.u] = s.code

    def decisive_mask(self) -> np.ndarray:
        return self.states >= 0

    def to_raster(self) -> np.ndarray:
        """Float32 view: decisive disparities as values, the rest NaN."""
        out = self.states.astype(np.float32)
        out[self.states < 0] = np.nan
        return out

    def save_npz(self, path) -> None:
        np.savez(path, states=self.states, level=np.int32(self.level))

    @staticmethod
    def load_npz(path) -> "DisparityMap":
        with np.load(path) as f:
            return DisparityMap(f["states"], int(f["level"]))


def neighborhood(p: Pixel, radius: int, width: int, height: int) -> list[Pixel]:
    """All in-bounds pixels q != p with Chebyshev distance <= radius.

    Returned in row-major order; radius 1 gives the eight-connected ring.
    """
    if radius < 1:
        raise ValueError("radius must be >= 1")
    out = []
    for v in range(max(0, p.v - radius), min(height, p.v + radius + 1)):
        for u in range(max(0, p.u - radius), min(width, p.u + radius + 1)):
            if u != p.u or v != p.v:
                out.append(Pixel(u, v))
    return out


def density(dmap: DisparityMap) -> float:
    """Fraction of pixels holding a decisive disparity."""
    return float(np.count_nonzero(dmap.states >= 0)) / dmap.states.size


@dataclass
class PipelineConfig:
    """All tunables of the matching pipeline.

    Defaults follow the hyperparameter study: tau = kappa_d = 1 performs
    best; sigma1/sigma2/t_max come from a brute-force search (see
    scripts/rbf_param_search.py).
    """

    k: int = 4
    d_max_full: int = 64
    tau: int = 1
    kappa_d: int = 1
    kappa_a: int = 1
    t_max: int = 4
    sigma1: float = 2.0
    sigma2: float = 10.0
    gamma: float = 1.05
    lrdc_tol: int = 1
    cost_mode: str = "ncc"  # "ncc" | "cosine"
    block_radius: int = 2
    use_pt: bool = False
    tau_pt: int = 8
    prc_mean: str = "union"  # "union" | "per-set"

    def validate(self) -> None:
        if self.k < 2:
            raise ConfigError("k must be >= 2")
        if self.d_max_full < 1:
            raise ConfigError("d_max_full must be >= 1")
        if self.tau < 1 or self.kappa_d < 1 or self.kappa_a < 1 or self.t_max < 1:
            raise ConfigError("tau, kappa_d, kappa_a, t_max must all be >= 1")
        if self.sigma1 <= 0 or self.sigma2 <= 0:
            raise ConfigError("sigma1 and sigma2 must be > 0")
        if self.gamma <= 1.0:
            raise ConfigError("gamma must be > 1")
        if self.lrdc_tol < 0:
            raise ConfigError("lrdc_tol must be >= 0")
        if self.cost_mode not in ("ncc", "cosine"):
            raise ConfigError("cost_mode must be 'ncc' or 'cosine'")
        if self.cost_mode == "ncc" and self.block_radius < 1:
            raise ConfigError("block_radius must be >= 1")
        if self.use_pt and self.cost_mode != "ncc":
            raise ConfigError("perspective transformation requires ncc cost mode")
        if self.prc_mean not in ("union", "per-set"):
            raise ConfigError("prc_mean must be 'union' or 'per-set'")
        if self.tau_pt < 1:
            raise ConfigError("tau_pt must be >= 1")

    def d_max_at(self, level: int) -> int:
        """Ceiling-halved disparity range for pyramid level i (1-based)."""
        return -(-self.d_max_full // (2 ** (level - 1)))

    def config_hash(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]
