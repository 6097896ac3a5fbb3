"""Scalar signal priors: weighted atoms plus weighted Gaussian components.

Every prior used downstream (Rademacher, Bernoulli, two-point / SBM,
Gaussian, sparse Gaussian) is a mixture of point masses and Gaussians,
which keeps all scalar-channel integrals in closed form per component.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

_WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class Prior:
    """Mixture of atoms [(value, weight)] and Gaussians [(mean, var, weight)].

    Immutable; safe to share across threads. Weights must be non-negative
    and sum to 1 within 1e-12.
    """

    atoms: tuple[tuple[float, float], ...] = field(default_factory=tuple)
    gaussians: tuple[tuple[float, float, float], ...] = field(default_factory=tuple)

    def __post_init__(self):
        atoms = tuple((float(v), float(w)) for v, w in self.atoms)
        gaussians = tuple(
            (float(mu), float(var), float(w)) for mu, var, w in self.gaussians
        )
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "gaussians", gaussians)
        total = sum(w for _, w in atoms) + sum(w for _, _, w in gaussians)
        if abs(total - 1.0) > _WEIGHT_TOL:
            raise ValueError(f"weights sum to {total}, expected 1")
        for v, w in atoms:
            if w < 0:
                raise ValueError("negative atom weight")
            if not np.isfinite(v):
                raise ValueError("non-finite atom value")
        for mu, var, w in gaussians:
            if w < 0:
                raise ValueError("negative gaussian weight")
            if var <= 0 or not np.isfinite(mu) or not np.isfinite(var):
                raise ValueError("gaussian variance must be finite and > 0")

    @property
    def is_degenerate(self) -> bool:
        """Single point mass: zero variance, downstream solvers go trivial."""
        effective = [(v, w) for v, w in self.atoms if w > 0]
        return not self.gaussians and len(effective) == 1

    @property
    def has_gaussians(self) -> bool:
        return any(w > 0 for _, _, w in self.gaussians)

    def key(self) -> tuple:
        """Hashable identity, used for memo tables."""
        return (self.atoms, self.gaussians)

    def to_json(self) -> str:
        return json.dumps(
            {
                "atoms": [[v, w] for v, w in self.atoms],
                "gaussians": [[mu, var, w] for mu, var, w in self.gaussians],
            }
        )

    @staticmethod
    def from_json(s: str) -> "Prior":
        d = json.loads(s)
        return Prior(
            atoms=tuple((v, w) for v, w in d.get("atoms", [])),
            gaussians=tuple((mu, var, w) for mu, var, w in d.get("gaussians", [])),
        )


def moments(prior: Prior) -> tuple[float, float, float]:
    """Exact (mean, second moment, variance) of the mixture."""
    m1 = sum(w * v for v, w in prior.atoms) + sum(
        w * mu for mu, _, w in prior.gaussians
    )
    m2 = sum(w * v * v for v, w in prior.atoms) + sum(
        w * (mu * mu + var) for mu, var, w in prior.gaussians
    )
    return m1, m2, m2 - m1 * m1


def rademacher() -> Prior:
    return Prior(atoms=((1.0, 0.5), (-1.0, 0.5)))


def gaussian(mean: float = 0.0, var: float = 1.0) -> Prior:
    return Prior(gaussians=((mean, var, 1.0),))


def bernoulli(eps: float) -> Prior:
    """Atoms at 1 (weight eps) and 0 (weight 1-eps)."""
    if not 0 < eps < 1:
        raise ValueError("eps must be in (0,1)")
    return Prior(atoms=((1.0, eps), (0.0, 1.0 - eps)))


def sbm_prior(p: float) -> Prior:
    """Two-point zero-mean unit-variance prior tied to dense-SBM community
    detection: +sqrt((1-p)/p) w.p. p, -sqrt(p/(1-p)) w.p. 1-p."""
    if not 0 < p < 1:
        raise ValueError("p must be in (0,1)")
    return Prior(
        atoms=(
            (np.sqrt((1 - p) / p), p),
            (-np.sqrt(p / (1 - p)), 1 - p),
        )
    )


def sparse_gaussian_prior(s: float) -> Prior:
    """Sparse spike: N(0, 1/s) with weight s plus an atom at 0; m2 = 1."""
    if not 0 < s <= 1:
        raise ValueError("s must be in (0,1]")
    if s == 1:
        return gaussian(0.0, 1.0)
    return Prior(atoms=((0.0, 1.0 - s),), gaussians=((0.0, 1.0 / s, s),))


def sample(prior: Prior, seed: int, count: int) -> np.ndarray:
    """Draw `count` iid values. Uses the counter-based Philox generator so
    output is reproducible across platforms and parallel callers never
    share state."""
    if count < 0:
        raise ValueError("count must be >= 0")
    rng = np.random.Generator(np.random.Philox(key=seed))
    out = np.empty(count)
    if count == 0:
        return out
    comp_w = [w for _, w in prior.atoms] + [w for _, _, w in prior.gaussians]
    idx = rng.choice(len(comp_w), size=count, p=np.asarray(comp_w) / sum(comp_w))
    n_atoms = len(prior.atoms)
    for i, (v, _) in enumerate(prior.atoms):
        out[idx == i] = v
    for j, (mu, var, _) in enumerate(prior.gaussians):
        mask = idx == n_atoms + j
        out[mask] = mu + np.sqrt(var) * rng.standard_normal(int(mask.sum()))
    return out


def parse_prior(spec: str) -> Prior:
    """Parse CLI shorthand: 'rademacher', 'gaussian', 'sbm:p=0.05',
    'sparse:s=0.15', 'bernoulli:eps=0.1', or a JSON object."""
    spec = spec.strip()
    if spec.startswith("{"):
        return Prior.from_json(spec)
    name, _, args = spec.partition(":")
    params = {}
    if args:
        for part in args.split(","):
            k, _, v = part.partition("=")
            params[k.strip()] = float(v)
    if name == "rademacher":
        return rademacher()
    if name == "gaussian":
        return gaussian(params.get("mean", 0.0), params.get("var", 1.0))
    if name == "sbm":
        return sbm_prior(params["p"])
    if name == "sparse":
        return sparse_gaussian_prior(params["s"])
    if name == "bernoulli":
        return bernoulli(params["eps"])
    raise ValueError(f"unknown prior spec: {spec!r}")
