"""CLI: run a classification backbone over a stereo pair, write D3FP files."""

from __future__ import annotations

import argparse
import sys

from .backbones import ExportSpec, ShapeMismatch, UnknownBackbone
from .export import export


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="d3fp-export")
    ap.add_argument("--backbone", required=True,
                    help="vgg16 | resnet18 | mobilenet_v3_large | mobilenet_v3_small")
    ap.add_argument("--left", required=True)
    ap.add_argument("--right", required=True)
    ap.add_argument("--levels", type=int, default=3)
    ap.add_argument("--out-prefix", required=True)
    ap.add_argument("--no-pretrained", action="store_true",
                    help="seeded random weights (offline use; taps/shapes only)")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    try:
        spec = ExportSpec(args.backbone, levels=args.levels,
                          pretrained=not args.no_pretrained, seed=args.seed)
        info = export(args.left, args.right, spec,
                      args.out_prefix + ".L.d3fp",
                      args.out_prefix + ".R.d3fp",
                      sidecar=args.out_prefix + ".norm.txt")
    except (UnknownBackbone, ShapeMismatch, ValueError, OSError) as e:
        print(f"export: {e}", file=sys.stderr)
        return 2
    print(f"wrote {args.out_prefix}.L.d3fp / .R.d3fp "
          f"({info['backbone']}, {info['levels']} levels)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
