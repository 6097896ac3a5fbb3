import numpy as np
import pytest

from spikelab.priors import gaussian, moments, rademacher, sbm_prior, sparse_gaussian_prior
from spikelab.rs_wishart import (
    gamma_fixed_points,
    mixed_model_value,
    mmse_uu_limit,
    mmse_uv_limit,
    mmse_vv_limit,
    pca_wishart_limits,
    potential2,
    solve,
    spiked_covariance_curve,
    sup_inf_value,
)
from spikelab.scalar_channel import psi_prime

POOL = [rademacher(), gaussian(), sbm_prior(0.1), sparse_gaussian_prior(0.2)]


def _gg_fixed_point(lam, alpha):
    qu = (lam * lam * alpha - 1.0) / (lam * (lam * alpha + 1.0))
    qv = (lam * lam * alpha - 1.0) / (lam * alpha * (1.0 + lam))
    return qu, qv


def test_gaussian_gaussian_closed_form():
    pts = gamma_fixed_points(gaussian(), gaussian(), 1.0, 4.0)
    assert any(abs(qu) < 1e-10 and abs(qv) < 1e-10 for qu, qv in pts)
    qu, qv = max(pts)
    assert abs(qu - 0.6) < 1e-8 and abs(qv - 0.375) < 1e-8


@pytest.mark.parametrize("seed", range(6))
def test_fixed_point_residuals(seed):
    rng = np.random.default_rng(seed)
    pu = POOL[rng.integers(len(POOL))]
    pv = POOL[rng.integers(len(POOL))]
    lam = float(rng.uniform(0.2, 3.0))
    alpha = float(rng.uniform(0.25, 4.0))
    for qu, qv in gamma_fixed_points(pu, pv, lam, alpha):
        assert abs(2.0 * psi_prime(pu, lam * alpha * qv) - qu) <= 1e-9
        assert abs(2.0 * psi_prime(pv, lam * qu) - qv) <= 1e-9


def test_pca_matches_bayes_for_gaussian():
    rng = np.random.default_rng(1)
    for _ in range(5):
        lam = float(rng.uniform(0.4, 2.5))
        alpha = float(rng.uniform(0.5, 4.0))
        if lam * lam * alpha <= 1.05:
            continue
        sol = solve(gaussian(), gaussian(), lam, alpha)
        overlap_sq, _, _ = pca_wishart_limits(lam, alpha)
        assert abs(sol.q_u_star - overlap_sq) < 1e-8


def test_pca_below_threshold():
    overlap_sq, top_sv, mse = pca_wishart_limits(0.3, 2.0)
    assert overlap_sq == 0.0
    assert abs(top_sv - (1 + 1 / np.sqrt(2.0))) < 1e-12
    assert mse == 1.0


def test_mmse_bounds_and_product_consistency():
    rng = np.random.default_rng(3)
    for _ in range(4):
        pu = POOL[rng.integers(len(POOL))]
        pv = POOL[rng.integers(len(POOL))]
        lam = float(rng.uniform(0.3, 2.0))
        alpha = float(rng.uniform(0.5, 3.0))
        _, m2u, _ = moments(pu)
        _, m2v, _ = moments(pv)
        uv = mmse_uv_limit(pu, pv, lam, alpha)
        uu = mmse_uu_limit(pu, pv, lam, alpha)
        vv = mmse_vv_limit(pu, pv, lam, alpha)
        assert 0.0 <= uv <= m2u * m2v + 1e-12
        assert uu <= m2u * m2u + 1e-12
        # (q_u q_v)^2 recovered from the per-side limits
        lhs = (m2u * m2v - uv) ** 2
        rhs = (m2u * m2u - uu) * (m2v * m2v - vv)
        assert abs(lhs - rhs) < 1e-8


def test_sup_inf_matches_gamma_sup():
    for pu, pv, lam, alpha in [
        (rademacher(), gaussian(), 0.9, 1.5),
        (sbm_prior(0.1), rademacher(), 1.4, 0.8),
    ]:
        sol = solve(pu, pv, lam, alpha)
        assert abs(sol.value - sup_inf_value(pu, pv, lam, alpha)) < 1e-6


def test_spiked_covariance_matches_two_sided_solve():
    rng = np.random.default_rng(5)
    for pu in (rademacher(), sparse_gaussian_prior(0.4)):
        lam = float(rng.uniform(0.6, 1.5))
        alpha = float(rng.uniform(1.5, 4.0))
        pt = spiked_covariance_curve(pu, lam, [alpha])[0]
        sol = solve(pu, gaussian(), lam, alpha)
        assert abs(pt.q_u_star - sol.q_u_star) < 1e-7
        assert abs(pt.q_v_star - sol.q_v_star) < 1e-7
        _, m2u, _ = moments(pu)
        assert abs(pt.mmse_uu - (m2u * m2u - sol.q_u_star**2)) < 1e-7


def test_mixed_model_reduces_to_two_sided():
    for pu, pv, lam, alpha in [
        (rademacher(), gaussian(), 0.8, 2.0),
        (gaussian(), rademacher(), 1.2, 1.0),
    ]:
        val, _ = mixed_model_value(pu, pv, lam, 0.0, alpha)
        assert abs(val - solve(pu, pv, lam, alpha).value) < 1e-6


def test_potential2_validation():
    with pytest.raises(ValueError):
        potential2(gaussian(), gaussian(), -1.0, 1.0, 0.1, 0.1)
    with pytest.raises(ValueError):
        potential2(gaussian(), gaussian(), 1.0, 1.0, -0.1, 0.1)
    with pytest.raises(ValueError):
        mixed_model_value(gaussian(), gaussian(), 1.0, -0.5, 1.0)
