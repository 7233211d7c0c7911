"""Dense stereo matching via cost-volume pyramids, recursive bilateral
filtering, and alternating intra-scale diffusion / inter-scale inheritance
of decisive disparities."""

from .core import (CostVolume, DisparityMap, DisparityState, GrayImage,
                   Pixel, PipelineConfig, density, neighborhood)
from .diffusion import diffuse, evaluate_state, candidate_set, validate_decisive
from .inheritance import inherit, expand_match, patch_reliable
from .metrics import MetricReport, epe, pep, psnr_mse, ssim, warp_right_to_left
from .perspective import apply_pt, fit_road_model
from .pipeline import PipelineResult, RunManifest, run_pipeline
from .pyramid import (FeaturePyramid, ImagePyramid, build_cost_pyramid,
                      build_image_pyramid, cost_volume_cosine, cost_volume_ncc)
from .rbf import RbfKernelParams, bf_aggregate, op_count_ratio, rbf_aggregate
from .seeds import PkrnScore, init_seeds, lrdc_check, pkrn

__version__ = "0.1.0"
