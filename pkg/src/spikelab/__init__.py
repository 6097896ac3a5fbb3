"""Asymptotic limits and algorithms for spiked Wigner / Wishart estimation."""

__version__ = "0.1.0"

from . import dynamics, oracle, priors, rs_wigner, rs_wishart, scalar_channel

__all__ = [
    "priors",
    "scalar_channel",
    "rs_wigner",
    "rs_wishart",
    "dynamics",
    "oracle",
]
