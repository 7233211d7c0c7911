"""Full matching pipeline: cost pyramid, aggregation, seeding, and the
alternating inherit/diffuse refinement from the coarsest level down.

Stage order per level i < k: build raw volumes, inherit seeds from the
level above, aggregate the volumes, re-validate the inherited seeds against
the aggregated volumes, then diffuse. Re-validation is required because
inheritance runs on raw volumes while diffusion (and any post-hoc sweep)
judges costs after aggregation.

With the perspective transform enabled, the coarsest level runs on the
original pair, a row-linear disparity model is fitted to its dense map, and
levels k-1..1 are rebuilt against the shifted right image with a narrow
residual search range; the final map recomposes true disparity as residual
plus the per-row shift.
"""

from __future__ import annotations

import os
import time
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from .core import DisparityMap, GrayImage, PipelineConfig, density
from .diffusion import DiffusionResult, diffuse, validate_decisive
from .errors import ConfigError, D3StereoError, DimensionMismatch
from .inheritance import inherit
from .metrics import MetricReport, full_report, refine_subpixel
from .perspective import (RoadDisparityModel, apply_pt, compose_disparity,
                          fit_road_model, to_residual)
from .pyramid import (FeaturePyramid, build_image_pyramid,
                      cost_volume_cosine, cost_volume_ncc,
                      derive_right_volume, resize_bilinear)
from .rbf import RbfKernelParams, rbf_aggregate
from .seeds import init_seeds


@dataclass
class LevelStats:
    level: int
    t_build: float = 0.0
    t_aggregate: float = 0.0
    t_seed: float = 0.0
    t_diffuse: float = 0.0
    seed_density: float = 0.0
    dense_density: float = 0.0
    iterations: int = 0


@dataclass
class RunManifest:
    config_hash: str
    config: PipelineConfig
    levels: list[LevelStats] = field(default_factory=list)
    t_pyramid: float = 0.0
    t_pt: float = 0.0
    t_refine: float = 0.0
    t_metrics: float = 0.0
    t_total: float = 0.0
    pt_model: RoadDisparityModel | None = None
    notes: list[str] = field(default_factory=list)

    def stage_sum(self) -> float:
        s = self.t_pyramid + self.t_pt + self.t_refine + self.t_metrics
        for lv in self.levels:
            s += lv.t_build + lv.t_aggregate + lv.t_seed + lv.t_diffuse
        return s

    def to_text(self) -> str:
        lines = [f"config_hash={self.config_hash}"]
        for k, v in vars(self.config).items():
            lines.append(f"config.{k}={v}")
        for lv in sorted(self.levels, key=lambda s: s.level):
            lines.append(
                f"level{lv.level}: build={lv.t_build:.3f}s "
                f"aggregate={lv.t_aggregate:.3f}s seed={lv.t_seed:.3f}s "
                f"diffuse={lv.t_diffuse:.3f}s seed_density={lv.seed_density:.4f} "
                f"dense_density={lv.dense_density:.4f} iters={lv.iterations}")
        if self.pt_model is not None:
            lines.append(
                f"pt: alpha0={self.pt_model.alpha0:.4f} "
                f"alpha1={self.pt_model.alpha1:.6f} "
                f"inliers={self.pt_model.inlier_fraction:.4f} "
                f"tau_pt={self.config.tau_pt}")
        lines.append(f"t_pyramid={self.t_pyramid:.3f}s t_pt={self.t_pt:.3f}s "
                     f"t_refine={self.t_refine:.3f}s t_metrics={self.t_metrics:.3f}s")
        lines.append(f"t_total={self.t_total:.3f}s (stages {self.stage_sum():.3f}s)")
        for n in self.notes:
            lines.append(f"note: {n}")
        return "\n".join(lines) + "\n"


@dataclass
class PipelineResult:
    raster: np.ndarray            # float32 disparity, NaN = no estimate
    dmap: DisparityMap            # integer-state map at level 1
    report: MetricReport | None
    manifest: RunManifest
    shift_table: np.ndarray | None
    final_volumes: tuple | None = None  # aggregated level-1 (left, right)


def _filter_seeds(sparse: DisparityMap, c_left, c_right, lrdc_tol: int
                  ) -> DisparityMap:
    """Drop seeds that no longer pass the checks after aggregation."""
    ok = validate_decisive(sparse, c_left, c_right, lrdc_tol)
    states = sparse.states.copy()
    states[(states >= 0) & ~ok] = -1
    return DisparityMap(states, sparse.level)


@contextmanager
def _stage(name: str):
    """Tag stage failures with the stage name for diagnostics."""
    try:
        yield
    except D3StereoError as e:
        raise type(e)(f"[{name}] {e}").with_traceback(e.__traceback__) from None


def _dump_level(debug_dir, level: int, tag: str, dmap: DisparityMap) -> None:
    if debug_dir is None:
        return
    from .io import write_pfm
    os.makedirs(debug_dir, exist_ok=True)
    write_pfm(dmap.to_raster(), os.path.join(debug_dir,
                                             f"level{level}.{tag}.pfm"))


def _guides_for_features(img: GrayImage, feats: FeaturePyramid) -> list[GrayImage]:
    return [GrayImage(resize_bilinear(img.data, lv.shape[0], lv.shape[1]))
            for lv in feats.levels]


def run_pipeline(left: GrayImage, right: GrayImage, config: PipelineConfig,
                 gt: np.ndarray | None = None,
                 left_features: FeaturePyramid | None = None,
                 right_features: FeaturePyramid | None = None,
                 threads: int | None = None,
                 deltas: tuple[float, ...] = (0.5, 1.0),
                 compute_metrics: bool = True,
                 keep_volumes: bool = False,
                 debug_dump: str | None = None) -> PipelineResult:
    config.validate()
    if left.data.shape != right.data.shape:
        raise DimensionMismatch("stereo pair shapes differ")
    t_start = time.perf_counter()
    manifest = RunManifest(config.config_hash(), config)
    params = RbfKernelParams(config.sigma1, config.sigma2,
                             config.kappa_a, config.t_max)

    cosine = config.cost_mode == "cosine"
    t0 = time.perf_counter()
    with _stage("pyramids"):
        if cosine:
            if left_features is None or right_features is None:
                raise ConfigError("cosine mode requires feature pyramids")
            if left_features.depth != right_features.depth:
                raise DimensionMismatch("feature pyramid depths differ")
            k = left_features.depth
            if config.k != k:
                manifest.notes.append(
                    f"k overridden to feature pyramid depth {k}")
                config = PipelineConfig(**{**vars(config), "k": k})
            left_guides = _guides_for_features(left, left_features)
            right_guides = _guides_for_features(right, right_features)
        else:
            k = config.k
            lp = build_image_pyramid(left, k)
            rp = build_image_pyramid(right, k)
            left_guides = lp.levels
            right_guides = rp.levels
    manifest.t_pyramid = time.perf_counter() - t0

    def build_level(i: int, right_pyr_levels, d_max: int):
        if cosine:
            cl = cost_volume_cosine(left_features.levels[i - 1],
                                    right_features.levels[i - 1],
                                    d_max, level=i, threads=threads)
        else:
            cl = cost_volume_ncc(left_guides[i - 1], right_pyr_levels[i - 1],
                                 d_max, config.block_radius, level=i,
                                 threads=threads)
        return cl, derive_right_volume(cl)

    # --- coarsest level: build, aggregate, seed, diffuse -------------------
    stats_k = LevelStats(level=k)
    with _stage(f"build-l{k}"):
        t0 = time.perf_counter()
        cl_k, cr_k = build_level(k, right_guides, config.d_max_at(k))
        stats_k.t_build = time.perf_counter() - t0

    with _stage(f"aggregate-l{k}"):
        t0 = time.perf_counter()
        cl_k = rbf_aggregate(cl_k, left_guides[k - 1], params, threads=threads)
        cr_k = rbf_aggregate(cr_k, right_guides[k - 1], params, threads=threads)
        stats_k.t_aggregate = time.perf_counter() - t0

    with _stage(f"seeds-l{k}"):
        t0 = time.perf_counter()
        sparse_k = init_seeds(cl_k, cr_k, config.gamma, config.lrdc_tol)
        stats_k.t_seed = time.perf_counter() - t0
        stats_k.seed_density = density(sparse_k)
        _dump_level(debug_dump, k, "seeds", sparse_k)

    with _stage(f"diffuse-l{k}"):
        t0 = time.perf_counter()
        res: DiffusionResult = diffuse(sparse_k, cl_k, cr_k, config.tau,
                                       config.kappa_d, config.lrdc_tol)
        stats_k.t_diffuse = time.perf_counter() - t0
        stats_k.dense_density = density(res.dmap)
        stats_k.iterations = res.iterations
        _dump_level(debug_dump, k, "dense", res.dmap)
    manifest.levels.append(stats_k)

    dense = res.dmap
    final_cl, final_cr = cl_k, cr_k
    shift_table: np.ndarray | None = None

    # --- perspective transform bootstrap -----------------------------------
    pt_right_pyr = None
    if config.use_pt:
        with _stage("perspective-transform"):
            t0 = time.perf_counter()
            model = fit_road_model(dense, 2 ** (k - 1))
            right_t, shift_table = apply_pt(right, model, config.tau_pt)
            pt_right_pyr = build_image_pyramid(right_t, k)
            dense = to_residual(dense, shift_table, 2 ** (k - 1))
            manifest.pt_model = model
            manifest.t_pt = time.perf_counter() - t0
        manifest.notes.append(
            "pt: levels below k rebuilt on transformed right; "
            "level-k results kept from the bootstrap pass")

    # --- alternate inherit / aggregate / re-validate / diffuse -------------
    for i in range(k - 1, 0, -1):
        st = LevelStats(level=i)
        if config.use_pt:
            d_max_i = -(-2 * config.tau_pt // (2 ** (i - 1)))
            right_levels = pt_right_pyr.levels
            right_guide = pt_right_pyr.levels[i - 1]
        else:
            d_max_i = config.d_max_at(i)
            right_levels = right_guides
            right_guide = right_guides[i - 1]

        with _stage(f"build-l{i}"):
            t0 = time.perf_counter()
            cl_i, cr_i = build_level(i, right_levels, d_max_i)
            st.t_build = time.perf_counter() - t0

        with _stage(f"inherit-l{i}"):
            t0 = time.perf_counter()
            sparse_i = inherit(dense, cl_i, cr_i, config.prc_mean,
                               config.lrdc_tol)
            t_inherit = time.perf_counter() - t0

        with _stage(f"aggregate-l{i}"):
            t0 = time.perf_counter()
            cl_i = rbf_aggregate(cl_i, left_guides[i - 1], params,
                                 threads=threads)
            cr_i = rbf_aggregate(cr_i, right_guide, params, threads=threads)
            st.t_aggregate = time.perf_counter() - t0

        with _stage(f"revalidate-l{i}"):
            t0 = time.perf_counter()
            sparse_i = _filter_seeds(sparse_i, cl_i, cr_i, config.lrdc_tol)
            st.t_seed = t_inherit + (time.perf_counter() - t0)
            st.seed_density = density(sparse_i)
            _dump_level(debug_dump, i, "seeds", sparse_i)

        with _stage(f"diffuse-l{i}"):
            t0 = time.perf_counter()
            res = diffuse(sparse_i, cl_i, cr_i, config.tau, config.kappa_d,
                          config.lrdc_tol)
            st.t_diffuse = time.perf_counter() - t0
            st.dense_density = density(res.dmap)
            st.iterations = res.iterations
            _dump_level(debug_dump, i, "dense", res.dmap)
        manifest.levels.append(st)
        dense = res.dmap
        final_cl = cl_i
        final_cr = cr_i

    # --- sub-pixel refinement + recomposition ------------------------------
    t0 = time.perf_counter()
    raster = refine_subpixel(dense, final_cl)
    if shift_table is not None:
        raster = compose_disparity(raster, shift_table)
    manifest.t_refine = time.perf_counter() - t0

    report = None
    if compute_metrics:
        t0 = time.perf_counter()
        # warp metrics always compare against the untransformed right view
        report = full_report(raster, gt, left_guides[0], right_guides[0], deltas)
        manifest.t_metrics = time.perf_counter() - t0

    manifest.t_total = time.perf_counter() - t_start
    volumes = (final_cl, final_cr) if keep_volumes else None
    return PipelineResult(raster, dense, report, manifest, shift_table,
                          volumes)
