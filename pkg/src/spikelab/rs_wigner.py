"""Replica-symmetric analysis of the spiked Wigner model.

Everything here reduces to the scalar free energy psi: the potential
F(lam, q) = psi(lam q) - lam q^2 / 4, its stationary points
q = 2 psi'(lam q), the global maximizer q*, and the derived limits
(MMSE, mutual information, PCA MSE, information-theoretic threshold,
easy/hard/impossible classification).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import brentq

from .priors import Prior, moments
from .scalar_channel import DEFAULT_QUAD_ORDER, psi, psi_prime

_SCAN_POINTS = 2000
_ROOT_DEDUP_TOL = 1e-9
_TIE_TOL = 1e-10
_SE_EPS_INIT = 1e-9
_SE_TOL = 1e-12
_SE_MAX_ITERS = 200_000


class Phase(str, Enum):
    IMPOSSIBLE = "impossible"
    HARD = "hard"
    EASY = "easy"


@dataclass
class Landscape:
    lam: float
    q_grid: np.ndarray
    potential_values: np.ndarray
    stationary_points: list[float]
    q_star: float
    degenerate: bool
    phase: Phase | None


@dataclass
class PhaseCell:
    p: float
    lam: float
    phase: Phase
    q_star: float
    lambda_c_marker: bool


def potential(prior: Prior, lam: float, q, order: int = DEFAULT_QUAD_ORDER):
    """F(lam, q) = psi(lam q) - lam q^2 / 4."""
    if lam <= 0:
        raise ValueError("lambda must be > 0")
    q = np.asarray(q, dtype=float)
    if np.any(q < 0):
        raise ValueError("q must be >= 0")
    out = psi(prior, lam * q, order=order) - lam * q**2 / 4.0
    return out if np.ndim(out) else float(out)


def stationary_points(
    prior: Prior, lam: float, order: int = DEFAULT_QUAD_ORDER
) -> list[float]:
    """All roots of q = 2 psi'(lam q) on [0, m2], by sign-change scan and
    bisection. q = 0 is included exactly when the prior has zero mean."""
    if lam <= 0:
        raise ValueError("lambda must be > 0")
    m1, m2, _ = moments(prior)
    if prior.is_degenerate:
        return [m2]

    def gap(q):
        return 2.0 * psi_prime(prior, lam * q, order=order) - q

    # dense uniform scan, plus geometric refinement near 0 so roots that
    # bifurcate from the trivial point (q* ~ lambda - 1) are not missed
    qs = np.unique(
        np.concatenate(
            [
                [0.0],
                np.geomspace(m2 * 1e-8, m2 / _SCAN_POINTS, 60),
                np.linspace(0.0, m2, _SCAN_POINTS + 1)[1:],
            ]
        )
    )
    vals = np.asarray(gap(qs))
    roots = []
    if abs(m1) < 1e-12:
        roots.append(0.0)
    for a, b, fa, fb in zip(qs[:-1], qs[1:], vals[:-1], vals[1:]):
        if fa == 0.0 and a > 0:
            roots.append(float(a))
        elif fa * fb < 0:
            roots.append(float(brentq(lambda q: float(gap(q)), a, b, xtol=1e-13)))
    if vals[-1] == 0.0:
        roots.append(float(qs[-1]))
    roots.sort()
    dedup: list[float] = []
    for r in roots:
        if not dedup or r - dedup[-1] > _ROOT_DEDUP_TOL:
            dedup.append(r)
    return dedup


def q_star(
    prior: Prior, lam: float, order: int = DEFAULT_QUAD_ORDER
) -> tuple[float, bool]:
    """Global maximizer of F(lam, .) among stationary points, with a
    degeneracy flag raised on ties within 1e-10 (near the countable set
    of non-unique-maximizer lambdas)."""
    pts = stationary_points(prior, lam, order=order)
    vals = [float(potential(prior, lam, q, order=order)) for q in pts]
    order_idx = np.argsort(vals)[::-1]
    best = int(order_idx[0])
    degenerate = len(pts) > 1 and vals[best] - vals[int(order_idx[1])] < _TIE_TOL
    if degenerate:
        # report the largest q among the tied maximizers
        tied = [pts[i] for i in range(len(pts)) if vals[best] - vals[i] < _TIE_TOL]
        return max(tied), True
    return pts[best], False


def mmse_limit(prior: Prior, lam: float, order: int = DEFAULT_QUAD_ORDER) -> float:
    """Limiting matrix MMSE: m2^2 - q*^2, clamped to [0, DMSE]."""
    m1, m2, _ = moments(prior)
    qs, _ = q_star(prior, lam, order=order)
    dmse = m2 * m2 - m1**4
    return float(np.clip(m2 * m2 - qs * qs, 0.0, dmse))


def mutual_information_limit(
    prior: Prior, lam: float, order: int = DEFAULT_QUAD_ORDER
) -> float:
    """Limit of (1/n) I(X; Y) = lam m2^2 / 4 - sup_q F(lam, q)."""
    _, m2, _ = moments(prior)
    qs, _ = q_star(prior, lam, order=order)
    return float(max(0.0, lam * m2 * m2 / 4.0 - potential(prior, lam, qs, order=order)))


def mse_pca_limit(prior: Prior, lam: float) -> float:
    """Asymptotic MSE of optimally rescaled naive PCA; depends on the
    prior only through its second moment."""
    if lam <= 0:
        raise ValueError("lambda must be > 0")
    _, m2, _ = moments(prior)
    thresh = m2 ** (-2)
    if lam <= thresh:
        return m2 * m2
    return (2.0 - thresh / lam) / lam


def se_limit_from(
    prior: Prior,
    lam: float,
    q0: float,
    order: int = DEFAULT_QUAD_ORDER,
    max_iters: int = _SE_MAX_ITERS,
) -> float:
    """Limit of the state-evolution map q <- 2 psi'(lam q) started at q0."""
    q = float(q0)
    for _ in range(max_iters):
        q_next = float(2.0 * psi_prime(prior, lam * q, order=order))
        if abs(q_next - q) < _SE_TOL:
            return q_next
        q = q_next
    return q


def it_threshold(
    prior: Prior, order: int = DEFAULT_QUAD_ORDER, tol: float = 1e-6
) -> float:
    """Information-theoretic threshold: smallest lambda with
    q*(lambda) > m1^2, located by bisection on [1e-3, 4/m2^2]."""
    if prior.is_degenerate:
        raise ValueError("degenerate prior has no threshold")
    m1, m2, _ = moments(prior)

    def informative(lam):
        qs, _ = q_star(prior, lam, order=order)
        return qs > m1 * m1 + 1e-8

    lo, hi = 1e-3, 4.0 / (m2 * m2)
    if informative(lo):
        return 0.0
    if not informative(hi):
        raise RuntimeError(
            f"threshold bracket failure: q* stays trivial up to lambda={hi}"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if informative(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def classify_phase(
    prior: Prior, lam: float, order: int = DEFAULT_QUAD_ORDER
) -> Phase:
    """impossible if q* is trivial; else easy when state evolution from an
    infinitesimal positive overlap reaches q*, hard otherwise.

    Only defined for zero-mean priors, where q = 0 is always stationary.
    """
    m1, _, _ = moments(prior)
    if abs(m1) > 1e-10:
        raise ValueError(
            "phase classification requires a zero-mean prior; "
            f"got mean {m1:.3g}"
        )
    qs, _ = q_star(prior, lam, order=order)
    if qs <= 1e-8:
        return Phase.IMPOSSIBLE
    q0 = float(2.0 * psi_prime(prior, lam * _SE_EPS_INIT, order=order))
    q = max(q0, _SE_EPS_INIT)
    for _ in range(_SE_MAX_ITERS):
        if q >= qs - 1e-6:  # monotone iterates: reaching q* settles it
            return Phase.EASY
        q_next = float(2.0 * psi_prime(prior, lam * q, order=order))
        if abs(q_next - q) < _SE_TOL:
            q = q_next
            break
        q = q_next
    return Phase.EASY if q >= qs - 1e-6 else Phase.HARD


def landscape(
    prior: Prior,
    lam: float,
    q_grid: np.ndarray | None = None,
    order: int = DEFAULT_QUAD_ORDER,
    classify: bool = False,
) -> Landscape:
    _, m2, _ = moments(prior)
    if q_grid is None:
        q_grid = np.linspace(0.0, m2, 401)
    q_grid = np.asarray(q_grid, dtype=float)
    vals = np.asarray(potential(prior, lam, q_grid, order=order))
    pts = stationary_points(prior, lam, order=order)
    qs, degenerate = q_star(prior, lam, order=order)
    phase = classify_phase(prior, lam, order=order) if classify else None
    return Landscape(
        lam=lam,
        q_grid=q_grid,
        potential_values=vals,
        stationary_points=pts,
        q_star=qs,
        degenerate=degenerate,
        phase=phase,
    )


def phase_diagram(
    p_grid, lambda_grid, order: int = DEFAULT_QUAD_ORDER, threads: int | None = None
) -> list[PhaseCell]:
    """Classify sbm_prior(p) cells over a (p, lambda) grid. Cells are
    independent and evaluated concurrently; output order is row-major in
    (p, lambda). The first non-impossible lambda per p is marked as the
    threshold cell."""
    from .priors import sbm_prior

    p_grid = list(p_grid)
    lambda_grid = list(lambda_grid)

    def cell(args):
        p, lam = args
        prior = sbm_prior(p)
        qs, _ = q_star(prior, lam, order=order)
        return p, lam, classify_phase(prior, lam, order=order), qs

    pairs = [(p, lam) for p in p_grid for lam in lambda_grid]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = list(pool.map(cell, pairs))

    cells: list[PhaseCell] = []
    for p in p_grid:
        row = [r for r in results if r[0] == p]
        first_nontrivial = next(
            (i for i, r in enumerate(row) if r[2] is not Phase.IMPOSSIBLE), None
        )
        for i, (pp, lam, phase, qs) in enumerate(row):
            cells.append(
                PhaseCell(
                    p=pp,
                    lam=lam,
                    phase=phase,
                    q_star=qs,
                    lambda_c_marker=(i == first_nontrivial),
                )
            )
    return cells
