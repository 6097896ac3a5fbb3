"""Replica-symmetric analysis of the non-symmetric (spiked Wishart) model.

The two-sided potential couples two scalar free energies,
F(lam, alpha, q_u, q_v) = psi_U(lam alpha q_v) + alpha psi_V(lam q_u)
- lam alpha q_u q_v / 2. Its coupled fixed points form the set Gamma;
the limit free energy is the sup of the potential over Gamma, which also
equals sup_{q_u} inf_{q_v} of the potential, and the solver checks both
routes against each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .priors import Prior, moments
from .scalar_channel import (
    DEFAULT_QUAD_ORDER,
    monotone_conjugate,
    psi,
    psi_prime,
)

_SCAN_POINTS = 2000
_ROOT_DEDUP_TOL = 1e-9
_TIE_TOL = 1e-10
_CONSISTENCY_TOL = 1e-6


@dataclass
class WishartSolution:
    lam: float
    alpha: float
    gamma_set: list[tuple[float, float]]
    q_u_star: float
    q_v_star: float
    value: float
    degenerate: bool


@dataclass
class SpikedCovariancePoint:
    alpha: float
    q_v_star: float
    q_u_star: float
    mmse_uu: float
    mse_pca: float
    mse_amp_se: float


def potential2(
    pu: Prior,
    pv: Prior,
    lam: float,
    alpha: float,
    q_u,
    q_v,
    order: int = DEFAULT_QUAD_ORDER,
):
    if lam <= 0 or alpha <= 0:
        raise ValueError("lambda and alpha must be > 0")
    q_u = np.asarray(q_u, dtype=float)
    q_v = np.asarray(q_v, dtype=float)
    if np.any(q_u < 0) or np.any(q_v < 0):
        raise ValueError("overlaps must be >= 0")
    out = (
        psi(pu, lam * alpha * q_v, order=order)
        + alpha * psi(pv, lam * q_u, order=order)
        - lam * alpha / 2.0 * q_u * q_v
    )
    return out if np.ndim(out) else float(out)


def _scan_grid(upper: float) -> np.ndarray:
    return np.unique(
        np.concatenate(
            [
                [0.0],
                np.geomspace(upper * 1e-8, upper / _SCAN_POINTS, 60),
                np.linspace(0.0, upper, _SCAN_POINTS + 1)[1:],
            ]
        )
    )


def gamma_fixed_points(
    pu: Prior, pv: Prior, lam: float, alpha: float, order: int = DEFAULT_QUAD_ORDER
) -> list[tuple[float, float]]:
    """All coupled fixed points (q_u, q_v) with q_u = 2 psi'_U(lam alpha q_v)
    and q_v = 2 psi'_V(lam q_u), via the 1-D composed map in q_v."""
    if lam <= 0 or alpha <= 0:
        raise ValueError("lambda and alpha must be > 0")
    _, m2v, _ = moments(pv)

    def q_u_of(q_v):
        return 2.0 * psi_prime(pu, lam * alpha * q_v, order=order)

    def gap(q_v):
        return 2.0 * psi_prime(pv, lam * q_u_of(q_v), order=order) - q_v

    qs = _scan_grid(m2v)
    vals = np.asarray(gap(qs))
    roots = []
    if abs(vals[0]) < 1e-12:
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
    return [(float(q_u_of(q_v)), q_v) for q_v in dedup]


def _inner_min_qv(
    pu: Prior, lam: float, alpha: float, q_u: float, order: int = DEFAULT_QUAD_ORDER
) -> float:
    """Minimizer over q_v of the potential at fixed q_u. The potential is
    convex in q_v; the interior stationary condition is q_u = 2 psi'_U."""
    m1u, m2u, _ = moments(pu)
    if q_u <= m1u * m1u + 1e-15:
        return 0.0

    def slope_gap(q_v):
        return float(2.0 * psi_prime(pu, lam * alpha * q_v, order=order)) - q_u

    hi = 1.0
    while slope_gap(hi) < 0:
        hi *= 2.0
        if hi > 1e9:
            # sup 2 psi'_U < q_u: the potential decreases in q_v without
            # bound, so the inner infimum is -inf (q_u cannot be the argmax)
            return math.inf
    return float(brentq(slope_gap, 0.0, hi, xtol=1e-12))


def sup_inf_value(
    pu: Prior,
    pv: Prior,
    lam: float,
    alpha: float,
    order: int = DEFAULT_QUAD_ORDER,
    grid_points: int = 400,
) -> float:
    """Direct numeric sup over q_u of the exact inner inf over q_v."""
    _, m2u, _ = moments(pu)
    hi = m2u * (1.0 - 1e-9)

    def outer(q_u):
        q_v = _inner_min_qv(pu, lam, alpha, q_u, order=order)
        if math.isinf(q_v):
            return -math.inf
        return float(potential2(pu, pv, lam, alpha, q_u, q_v, order=order))

    grid = np.linspace(0.0, hi, grid_points + 1)
    vals = [outer(q) for q in grid]
    i = int(np.argmax(vals))
    lo_b = grid[max(0, i - 1)]
    hi_b = grid[min(grid_points, i + 1)]
    res = minimize_scalar(
        lambda q: -outer(q), bounds=(lo_b, hi_b), method="bounded",
        options={"xatol": 1e-10},
    )
    return max(vals[i], float(-res.fun))


def solve(
    pu: Prior, pv: Prior, lam: float, alpha: float, order: int = DEFAULT_QUAD_ORDER
) -> WishartSolution:
    """Maximizer of the potential over Gamma, cross-validated against the
    sup-inf evaluation; raises on disagreement beyond 1e-6."""
    gamma_set = gamma_fixed_points(pu, pv, lam, alpha, order=order)
    vals = [
        float(potential2(pu, pv, lam, alpha, qu, qv, order=order))
        for qu, qv in gamma_set
    ]
    best_val = max(vals)
    tied = [i for i, v in enumerate(vals) if best_val - v < _TIE_TOL]
    degenerate = len(tied) > 1
    # among ties, report the largest q_u
    i_best = max(tied, key=lambda i: gamma_set[i][0])
    q_u_star, q_v_star = gamma_set[i_best]

    check = sup_inf_value(pu, pv, lam, alpha, order=order)
    if abs(check - best_val) > _CONSISTENCY_TOL:
        raise RuntimeError(
            f"sup-over-Gamma ({best_val:.9g}) and sup-inf ({check:.9g}) disagree"
        )
    return WishartSolution(
        lam=lam,
        alpha=alpha,
        gamma_set=gamma_set,
        q_u_star=q_u_star,
        q_v_star=q_v_star,
        value=best_val,
        degenerate=degenerate,
    )


def mmse_uv_limit(
    pu: Prior, pv: Prior, lam: float, alpha: float, order: int = DEFAULT_QUAD_ORDER
) -> float:
    sol = solve(pu, pv, lam, alpha, order=order)
    _, m2u, _ = moments(pu)
    _, m2v, _ = moments(pv)
    return m2u * m2v - sol.q_u_star * sol.q_v_star


def mmse_uu_limit(
    pu: Prior, pv: Prior, lam: float, alpha: float, order: int = DEFAULT_QUAD_ORDER
) -> float:
    sol = solve(pu, pv, lam, alpha, order=order)
    _, m2u, _ = moments(pu)
    return m2u * m2u - sol.q_u_star**2


def mmse_vv_limit(
    pu: Prior, pv: Prior, lam: float, alpha: float, order: int = DEFAULT_QUAD_ORDER
) -> float:
    sol = solve(pu, pv, lam, alpha, order=order)
    _, m2v, _ = moments(pv)
    return m2v * m2v - sol.q_v_star**2


def pca_wishart_limits(lam: float, alpha: float) -> tuple[float, float, float]:
    """(squared overlap, top singular value, PCA MSE) limits for the
    rectangular spiked model with unit second moments."""
    if lam <= 0 or alpha <= 0:
        raise ValueError("lambda and alpha must be > 0")
    if lam * lam * alpha >= 1.0:
        overlap_sq = (lam * lam * alpha - 1.0) / (lam * (lam * alpha + 1.0))
        top_sv = math.sqrt((1.0 + lam) * (1.0 / alpha + lam) / lam)
        c = (1.0 + lam) / (lam * (lam * alpha + 1.0))
        mse = c * (2.0 - c)
    else:
        overlap_sq = 0.0
        top_sv = 1.0 + 1.0 / math.sqrt(alpha)
        mse = 1.0
    return overlap_sq, top_sv, mse


def spiked_covariance_objective(
    pu: Prior, lam: float, alpha: float, q, order: int = DEFAULT_QUAD_ORDER
):
    """psi_U(lam alpha q) + (alpha/2)(q + log(1-q)) on [0, 1)."""
    q = np.asarray(q, dtype=float)
    return psi(pu, lam * alpha * q, order=order) + alpha / 2.0 * (q + np.log1p(-q))


def _spiked_covariance_qstar(
    pu: Prior, lam: float, alpha: float, order: int = DEFAULT_QUAD_ORDER
) -> float:
    hi = 1.0 - 1e-12

    def deriv(q):
        return float(
            lam * alpha * psi_prime(pu, lam * alpha * q, order=order)
            + alpha / 2.0 * (1.0 - 1.0 / (1.0 - q))
        )

    qs = _scan_grid(1.0)[:-1]
    qs = qs[qs < hi]
    vals = np.array([deriv(q) for q in qs])
    candidates = [0.0]
    for a, b, fa, fb in zip(qs[:-1], qs[1:], vals[:-1], vals[1:]):
        if fa * fb < 0:
            candidates.append(float(brentq(deriv, a, b, xtol=1e-13)))
        elif fa == 0.0 and a > 0:
            candidates.append(float(a))
    obj = [
        float(spiked_covariance_objective(pu, lam, alpha, q, order=order))
        for q in candidates
    ]
    return candidates[int(np.argmax(obj))]


def spiked_covariance_curve(
    pu: Prior, lam: float, alpha_grid, order: int = DEFAULT_QUAD_ORDER
) -> list[SpikedCovariancePoint]:
    """Per-alpha Bayes / PCA / AMP-state-evolution MSE for estimating the
    spike U U^T when the other factor is standard Gaussian."""
    from .dynamics import state_evolution_wishart
    from .priors import gaussian

    _, m2u, _ = moments(pu)
    out = []
    for alpha in alpha_grid:
        q_v = _spiked_covariance_qstar(pu, lam, alpha, order=order)
        q_u = q_v / (lam * (1.0 - q_v))
        mmse_uu = m2u * m2u - q_u * q_u
        _, _, mse_pca = pca_wishart_limits(lam, alpha)
        trace = state_evolution_wishart(
            pu, gaussian(), lam, alpha, T=2000, q_v0=1e-9, order=order
        )
        q_u_amp = trace.q_infinity[0]
        out.append(
            SpikedCovariancePoint(
                alpha=float(alpha),
                q_v_star=q_v,
                q_u_star=q_u,
                mmse_uu=mmse_uu,
                mse_pca=mse_pca,
                mse_amp_se=m2u * m2u - q_u_amp**2,
            )
        )
    return out


_conjugate_memo: dict[tuple, float] = {}


def _conj(prior: Prior, x: float, order: int) -> float:
    key = (prior.key(), round(x, 12), order)
    val = _conjugate_memo.get(key)
    if val is None:
        val = monotone_conjugate(prior, x, order=order)
        _conjugate_memo[key] = val
    return val


def mixed_model_value(
    pu: Prior,
    pv: Prior,
    lam: float,
    gamma_side: float,
    alpha: float,
    order: int = DEFAULT_QUAD_ORDER,
    grid_points: int = 200,
) -> tuple[float, float]:
    """Limit free energy of the model observing both sqrt(lam/n) U V^T and
    sqrt(gamma/n) U U^T noisy projections:
    sup over (q_u, q_v) of gamma q_u^2/4 + alpha lam q_u q_v / 2
    - psi*_U(q_u/2) - alpha psi*_V(q_v/2). Returns (value, maximizing q_u).
    """
    if lam <= 0 or alpha <= 0 or gamma_side < 0:
        raise ValueError("need lambda, alpha > 0 and gamma >= 0")
    _, m2u, _ = moments(pu)
    _, m2v, _ = moments(pv)
    # stay strictly inside the domain: the conjugate blows up toward m2/2,
    # so the maximizer never sits against this edge
    qu = np.linspace(0.0, m2u * (1.0 - 1e-6), grid_points)
    qv = np.linspace(0.0, m2v * (1.0 - 1e-6), grid_points)
    cu = np.array([_conj(pu, q / 2.0, order) for q in qu])
    cv = np.array([_conj(pv, q / 2.0, order) for q in qv])
    m = (
        gamma_side * qu[:, None] ** 2 / 4.0
        + alpha * lam / 2.0 * np.outer(qu, qv)
        - cu[:, None]
        - alpha * cv[None, :]
    )
    i, j = np.unravel_index(int(np.argmax(m)), m.shape)
    best_qu, best_qv = float(qu[i]), float(qv[j])

    def objective(a, b):
        return (
            gamma_side * a * a / 4.0
            + alpha * lam / 2.0 * a * b
            - _conj(pu, a / 2.0, order)
            - alpha * _conj(pv, b / 2.0, order)
        )

    du = qu[1] - qu[0] if grid_points > 1 else m2u
    dv = qv[1] - qv[0] if grid_points > 1 else m2v
    for _ in range(4):
        res = minimize_scalar(
            lambda a: -objective(a, best_qv),
            bounds=(max(0.0, best_qu - du), min(qu[-1], best_qu + du)),
            method="bounded",
            options={"xatol": 1e-10},
        )
        best_qu = float(res.x)
        res = minimize_scalar(
            lambda b: -objective(best_qu, b),
            bounds=(max(0.0, best_qv - dv), min(qv[-1], best_qv + dv)),
            method="bounded",
            options={"xatol": 1e-10},
        )
        best_qv = float(res.x)
    return float(objective(best_qu, best_qv)), best_qu
