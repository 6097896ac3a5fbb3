#!/usr/bin/env python3
"""Multi-seed AMP runs against the state-evolution prediction.

Prints a per-iteration table of mean empirical overlap / MSE next to the
deterministic SE curve, plus the PCA baseline for reference.
"""

import argparse

import numpy as np

from spikelab.dynamics import amp_wigner, generate_wigner, pca_estimate_wigner
from spikelab.priors import parse_prior
from spikelab.rs_wigner import mmse_limit, mse_pca_limit

DEFAULT_SEED = 1234


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--prior", default="rademacher")
    ap.add_argument("--lam", type=float, default=2.0)
    ap.add_argument("--n", type=int, default=4000)
    ap.add_argument("--iters", type=int, default=12)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--seed", type=int, default=DEFAULT_SEED)
    args = ap.parse_args()

    prior = parse_prior(args.prior)
    overlaps, mses = [], []
    se_overlap = se_mse = None
    pca = []
    for k in range(args.seeds):
        inst = generate_wigner(prior, args.n, args.lam, args.seed + k)
        trace = amp_wigner(inst, args.iters)
        overlaps.append([r.overlap_emp for r in trace.records])
        mses.append([r.mse_emp for r in trace.records])
        se_overlap = [r.overlap_se for r in trace.records]
        se_mse = [r.mse_se for r in trace.records]
        mse_p, _ = pca_estimate_wigner(inst)
        pca.append(mse_p)
    overlaps = np.mean(overlaps, axis=0)
    mses = np.mean(mses, axis=0)

    print(f"prior={args.prior} lambda={args.lam} n={args.n} seeds={args.seeds}")
    print(f"{'t':>3} {'overlap':>9} {'se':>9} {'mse':>9} {'mse_se':>9}")
    for t in range(len(overlaps)):
        print(
            f"{t:>3} {overlaps[t]:>9.4f} {se_overlap[t]:>9.4f}"
            f" {mses[t]:>9.4f} {se_mse[t]:>9.4f}"
        )
    print(f"PCA empirical MSE {np.mean(pca):.4f}"
          f" (limit {mse_pca_limit(prior, args.lam):.4f})")
    print(f"Bayes MMSE limit  {mmse_limit(prior, args.lam):.4f}")


if __name__ == "__main__":
    main()
