"""Command-line pipeline driver.

Subcommands: match (full pipeline), aggregate (filter a dumped volume),
seeds (coarsest-level seeding only), eval (metrics on estimate vs ground
truth), synth (generate planted road scenes), sweep (tau/kappa_d/gamma
grids). Outputs land next to the left image stem unless --out is given.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import io as d3io
from .core import CostVolume, GrayImage, PipelineConfig, density
from .errors import D3StereoError
from .metrics import append_results_row, full_report
from .pipeline import run_pipeline
from .pyramid import build_image_pyramid, derive_right_volume
from .rbf import RbfKernelParams, rbf_aggregate
from .seeds import init_seeds
from .synth import linear_road_scene
from .viz import disparity_to_png


def _add_config_flags(p: argparse.BaseException | argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=int, default=4, help="pyramid depth")
    p.add_argument("--dmax", type=int, default=64, help="max disparity, level 1")
    p.add_argument("--tau", type=int, default=1)
    p.add_argument("--kappa-d", type=int, default=1)
    p.add_argument("--kappa-a", type=int, default=1)
    p.add_argument("--tmax", type=int, default=4, help="filter iterations")
    p.add_argument("--sigma1", type=float, default=2.0)
    p.add_argument("--sigma2", type=float, default=10.0)
    p.add_argument("--gamma", type=float, default=1.05, help="pkrn threshold")
    p.add_argument("--lrdc-tol", type=int, default=1)
    p.add_argument("--block-radius", type=int, default=2)
    p.add_argument("--no-pt", action="store_true",
                   help="disable perspective transformation")
    p.add_argument("--tau-pt", type=int, default=8)
    p.add_argument("--prc-mean", choices=["union", "per-set"], default="union")
    p.add_argument("--cost-mode", choices=["ncc", "cosine"], default="ncc")
    p.add_argument("--features-left", help="D3FP file for the left view")
    p.add_argument("--features-right", help="D3FP file for the right view")


def _config_from(args) -> PipelineConfig:
    return PipelineConfig(
        k=args.k, d_max_full=args.dmax, tau=args.tau, kappa_d=args.kappa_d,
        kappa_a=args.kappa_a, t_max=args.tmax, sigma1=args.sigma1,
        sigma2=args.sigma2, gamma=args.gamma, lrdc_tol=args.lrdc_tol,
        cost_mode=args.cost_mode, block_radius=args.block_radius,
        use_pt=not args.no_pt and args.cost_mode == "ncc",
        tau_pt=args.tau_pt, prc_mean=args.prc_mean)


def _load_pair(args) -> tuple[GrayImage, GrayImage]:
    return d3io.read_image(args.left), d3io.read_image(args.right)


def _load_features(args):
    if args.cost_mode != "cosine":
        return None, None
    if not args.features_left or not args.features_right:
        raise D3StereoError("cosine mode needs --features-left/right")
    lf = d3io.read_feature_pyramid(args.features_left)
    rf = d3io.read_feature_pyramid(args.features_right)
    lf.side, rf.side = "left", "right"
    return lf, rf


def _save_volume(cv: CostVolume, path) -> None:
    np.savez(path, data=cv.data, valid=cv.valid, level=np.int32(cv.level),
             reference=np.bytes_(cv.reference.encode()))


def _load_volume(path) -> CostVolume:
    with np.load(path) as f:
        return CostVolume(f["data"], f["valid"], int(f["level"]),
                          bytes(f["reference"]).decode())


def cmd_match(args) -> int:
    config = _config_from(args)
    left, right = _load_pair(args)
    gt = d3io.load_disparity_pfm(args.gt) if args.gt else None
    lf, rf = _load_features(args)
    result = run_pipeline(left, right, config, gt=gt,
                          left_features=lf, right_features=rf,
                          deltas=tuple(args.delta),
                          debug_dump=args.debug_dump)
    stem = args.out or os.path.splitext(args.left)[0]
    d3io.write_pfm(result.raster, stem + ".disp.pfm")
    disparity_to_png(result.raster, stem + ".disp.png")
    with open(stem + ".manifest.txt", "w", encoding="utf-8") as f:
        f.write(result.manifest.to_text())
    if result.shift_table is not None:
        d3io.write_pfm(result.shift_table[:, None], stem + ".shifts.pfm")
    if result.report is not None:
        sys.stdout.write(result.report.to_text())
        append_results_row(args.results_ledger, args.dataset,
                           os.path.basename(args.left),
                           config.config_hash(), result.report)
    print(f"density={density(result.dmap):.4f}")
    print(f"wrote {stem}.disp.pfm")
    return 0


def cmd_aggregate(args) -> int:
    cv = _load_volume(args.volume)
    guide = d3io.read_image(args.guide)
    params = RbfKernelParams(args.sigma1, args.sigma2, args.kappa_a, args.tmax)
    out = rbf_aggregate(cv, guide, params)
    _save_volume(out, args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_seeds(args) -> int:
    config = _config_from(args)
    config.validate()
    left, right = _load_pair(args)
    lf, rf = _load_features(args)
    if config.cost_mode == "cosine":
        from .pipeline import _guides_for_features
        from .pyramid import cost_volume_cosine
        k = lf.depth
        cl = cost_volume_cosine(lf.levels[k - 1], rf.levels[k - 1],
                                config.d_max_at(k), level=k)
        guides = _guides_for_features(left, lf)
        rguides = _guides_for_features(right, rf)
        gl, gr = guides[k - 1], rguides[k - 1]
    else:
        from .pyramid import cost_volume_ncc
        k = config.k
        lp = build_image_pyramid(left, k)
        rp = build_image_pyramid(right, k)
        gl, gr = lp.levels[k - 1], rp.levels[k - 1]
        cl = cost_volume_ncc(gl, gr, config.d_max_at(k), config.block_radius,
                             level=k)
    cr = derive_right_volume(cl)
    params = RbfKernelParams(config.sigma1, config.sigma2,
                             config.kappa_a, config.t_max)
    cl = rbf_aggregate(cl, gl, params)
    cr = rbf_aggregate(cr, gr, params)
    seeds = init_seeds(cl, cr, config.gamma, config.lrdc_tol)
    stem = args.out or os.path.splitext(args.left)[0]
    d3io.write_pfm(seeds.to_raster(), stem + ".seeds.pfm")
    print(f"seed_density={density(seeds):.4f}")
    print(f"wrote {stem}.seeds.pfm")
    return 0


def cmd_eval(args) -> int:
    est = d3io.load_disparity_pfm(args.est)
    gt = d3io.load_disparity_pfm(args.gt)
    left = d3io.read_image(args.left) if args.left else None
    right = d3io.read_image(args.right) if args.right else None
    report = full_report(est, gt, left, right, deltas=tuple(args.delta))
    sys.stdout.write(report.to_text())
    return 0


def cmd_synth(args) -> int:
    a0, a1 = (float(x) for x in args.model.split(","))
    left, right, gt = linear_road_scene(args.size, args.size, a0, a1,
                                        seed=args.seed, noise=args.noise)
    if gt[np.isfinite(gt)].max() > args.dmax:
        print("warning: planted disparities exceed --dmax", file=sys.stderr)
    d3io.write_pgm(left, args.out_prefix + ".left.pgm")
    d3io.write_pgm(right, args.out_prefix + ".right.pgm")
    d3io.write_pfm(gt, args.out_prefix + ".gt.pfm")
    print(f"wrote {args.out_prefix}.left.pgm/.right.pgm/.gt.pfm")
    return 0


def _parse_range(spec: str) -> list[int]:
    if ".." in spec:
        lo, hi = spec.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(x) for x in spec.split(",")]


def cmd_sweep(args) -> int:
    if args.left and args.right and args.gt:
        left, right = _load_pair(args)
        gt = d3io.load_disparity_pfm(args.gt)
    else:
        left, right, gt = linear_road_scene(args.size, args.size, 3.0, 0.05,
                                            seed=args.seed, noise=args.noise)
    taus = _parse_range(args.tau_range) if args.tau_range else [1]
    kappas = _parse_range(args.kappa_range) if args.kappa_range else [1]
    gammas = ([float(x) for x in args.gamma_range.split(",")]
              if args.gamma_range else [1.05])
    print("tau\tkappa_d\tgamma\tepe\tpep1\tdensity\truntime_s")
    for tau in taus:
        for kd in kappas:
            for g in gammas:
                config = PipelineConfig(
                    k=args.k, d_max_full=args.dmax, tau=tau, kappa_d=kd,
                    gamma=g, cost_mode="ncc", use_pt=not args.no_pt)
                r = run_pipeline(left, right, config, gt=gt,
                                 deltas=(1.0,))
                print(f"{tau}\t{kd}\t{g:g}\t{r.report.epe:.4f}\t"
                      f"{r.report.pep[1.0]:.3f}\t{density(r.dmap):.4f}\t"
                      f"{r.manifest.t_total:.3f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="d3stereo")
    sub = ap.add_subparsers(dest="command", required=True)

    m = sub.add_parser("match", help="run the full pipeline on a stereo pair")
    m.add_argument("left")
    m.add_argument("right")
    m.add_argument("--gt", help="ground-truth disparity PFM")
    m.add_argument("--out", help="output stem")
    m.add_argument("--delta", type=float, action="append",
                   default=None, help="PEP tolerance (repeatable)")
    m.add_argument("--dataset", default="local")
    m.add_argument("--results-ledger", default="results.tsv")
    m.add_argument("--debug-dump", metavar="DIR",
                   help="dump per-level seed/dense maps as PFMs into DIR")
    _add_config_flags(m)
    m.set_defaults(func=cmd_match)

    a = sub.add_parser("aggregate", help="recursive bilateral filter on a volume dump")
    a.add_argument("volume", help=".npz cost volume")
    a.add_argument("guide", help="guide image")
    a.add_argument("out", help="output .npz")
    a.add_argument("--sigma1", type=float, default=2.0)
    a.add_argument("--sigma2", type=float, default=10.0)
    a.add_argument("--kappa-a", type=int, default=1)
    a.add_argument("--tmax", type=int, default=4)
    a.set_defaults(func=cmd_aggregate)

    s = sub.add_parser("seeds", help="coarsest-level seeding only")
    s.add_argument("left")
    s.add_argument("right")
    s.add_argument("--out")
    _add_config_flags(s)
    s.set_defaults(func=cmd_seeds)

    e = sub.add_parser("eval", help="metrics for an estimate against ground truth")
    e.add_argument("est")
    e.add_argument("gt")
    e.add_argument("--left")
    e.add_argument("--right")
    e.add_argument("--delta", type=float, action="append", default=None)
    e.set_defaults(func=cmd_eval)

    g = sub.add_parser("synth", help="generate a planted linear-road scene")
    g.add_argument("--model", default="3,0.05", help="alpha0,alpha1")
    g.add_argument("--dmax", type=int, default=64)
    g.add_argument("--size", type=int, default=256)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--noise", type=float, default=0.0)
    g.add_argument("--out-prefix", default="scene")
    g.set_defaults(func=cmd_synth)

    w = sub.add_parser("sweep", help="tau/kappa_d/gamma parameter grids")
    w.add_argument("--left")
    w.add_argument("--right")
    w.add_argument("--gt")
    w.add_argument("--tau", dest="tau_range", help="e.g. 1..4 or 1,2,3")
    w.add_argument("--kappa-d", dest="kappa_range")
    w.add_argument("--gamma", dest="gamma_range", help="comma-separated")
    w.add_argument("--k", type=int, default=3)
    w.add_argument("--dmax", type=int, default=64)
    w.add_argument("--size", type=int, default=192)
    w.add_argument("--seed", type=int, default=0)
    w.add_argument("--noise", type=float, default=2.0)
    w.add_argument("--no-pt", action="store_true")
    w.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "delta", None) is not None and not args.delta:
        args.delta = [0.5, 1.0]
    if hasattr(args, "delta") and args.delta is None:
        args.delta = [0.5, 1.0]
    try:
        return args.func(args)
    except D3StereoError as e:
        print(f"{args.command}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
