#!/usr/bin/env python3
"""Brute-force search for the bilateral-filter weights and iteration count.

Grids sigma1 x sigma2 x t_max over one or more stereo pairs (synthetic road
scenes by default, or real pairs passed as --left/--right/--gt triples) and
ranks combinations by end-point error. The shipped defaults
(sigma1=2, sigma2=10, t_max=4) came from this harness run at desk scale.

Usage:
    python scripts/rbf_param_search.py
    python scripts/rbf_param_search.py --left l.png --right r.png --gt d.pfm
"""

import argparse
import itertools
import sys

sys.path.insert(0, "src")

from d3stereo import io as d3io
from d3stereo.core import PipelineConfig, density
from d3stereo.pipeline import run_pipeline
from d3stereo.synth import linear_road_scene


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--left")
    ap.add_argument("--right")
    ap.add_argument("--gt")
    ap.add_argument("--size", type=int, default=192)
    ap.add_argument("--noise", type=float, default=4.0)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--sigma1", type=float, nargs="+", default=[1.0, 2.0, 4.0])
    ap.add_argument("--sigma2", type=float, nargs="+",
                    default=[5.0, 10.0, 20.0, 40.0])
    ap.add_argument("--tmax", type=int, nargs="+", default=[1, 2, 4, 6])
    args = ap.parse_args()

    if args.left:
        pairs = [(d3io.read_image(args.left), d3io.read_image(args.right),
                  d3io.load_disparity_pfm(args.gt))]
    else:
        pairs = [linear_road_scene(args.size, args.size, 3.0, 0.05,
                                   seed=s, noise=args.noise)
                 for s in args.seeds]

    print("sigma1\tsigma2\tt_max\tmean_epe\tmean_density\tmean_runtime_s")
    results = []
    for s1, s2, t in itertools.product(args.sigma1, args.sigma2, args.tmax):
        epes, dens, times = [], [], []
        for left, right, gt in pairs:
            cfg = PipelineConfig(k=3, d_max_full=32, sigma1=s1, sigma2=s2,
                                 t_max=t, use_pt=True)
            res = run_pipeline(left, right, cfg, gt=gt)
            epes.append(res.report.epe)
            dens.append(density(res.dmap))
            times.append(res.manifest.t_total)
        row = (s1, s2, t, sum(epes) / len(epes), sum(dens) / len(dens),
               sum(times) / len(times))
        results.append(row)
        print("%g\t%g\t%d\t%.4f\t%.4f\t%.3f" % row)

    best = min(results, key=lambda r: r[3])
    print("\nbest: sigma1=%g sigma2=%g t_max=%d (epe %.4f)"
          % (best[0], best[1], best[2], best[3]))
    return 0


if __name__ == "__main__":
    sys.exit(main())
