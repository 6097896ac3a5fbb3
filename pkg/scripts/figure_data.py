#!/usr/bin/env python3
"""Regenerate all figure-data CSVs (limit curves, landscapes, phase diagram,
spiked covariance) into an output directory using the CLI presets."""

import argparse
import os
import sys

from spikelab.cli import figure_bundles, parse_and_dispatch


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--outdir", default="figure_data")
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args()
    os.makedirs(args.outdir, exist_ok=True)
    for name in sorted(figure_bundles()):
        out = os.path.join(args.outdir, f"{name}.csv")
        argv = ["preset", name, "-o", out]
        if args.threads:
            argv += ["--threads", str(args.threads)]
        rc = parse_and_dispatch(argv)
        if rc != 0:
            sys.exit(rc)


if __name__ == "__main__":
    main()
