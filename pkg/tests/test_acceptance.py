"""Acceptance suite: one test per release criterion, at the stated
tolerances. Each test line in `pytest -v` is the pass/fail record for the
corresponding criterion."""

import math

import numpy as np
import pytest

from spikelab.dynamics import (
    amp_wigner,
    generate_wigner,
    pca_estimate_wigner,
    state_evolution_wigner,
    top_eigenvector,
)
from spikelab.oracle import (
    free_energy_mc,
    i_mmse_check,
    pinned_overlap_variance,
    rem_free_energy,
    rem_mc,
    wasserstein_stability_check,
)
from spikelab.priors import (
    gaussian,
    moments,
    rademacher,
    sbm_prior,
    sparse_gaussian_prior,
)
from spikelab.rs_wigner import (
    Phase,
    classify_phase,
    it_threshold,
    mmse_limit,
    mse_pca_limit,
    phase_diagram,
    potential,
    q_star,
    stationary_points,
)
from spikelab.rs_wishart import (
    gamma_fixed_points,
    mixed_model_value,
    pca_wishart_limits,
    potential2,
    solve,
    sup_inf_value,
)
from spikelab.scalar_channel import mmse, monotone_conjugate, psi, psi_prime


def test_01_gaussian_scalar_closed_forms():
    grid = np.linspace(0.0, 100.0, 1001)
    assert np.max(np.abs(psi(gaussian(), grid) - 0.5 * (grid - np.log1p(grid)))) < 1e-9
    assert np.max(np.abs(mmse(gaussian(), grid) - 1.0 / (1.0 + grid))) < 1e-9


def test_02_rs_wigner_gaussian_limits():
    for lam in np.linspace(0.2, 5.0, 50):
        qs, _ = q_star(gaussian(), lam)
        assert abs(qs - max(0.0, 1.0 - 1.0 / lam)) < 1e-8
        expected = 1.0 if lam <= 1.0 else (2.0 - 1.0 / lam) / lam
        assert abs(mmse_limit(gaussian(), lam) - expected) < 1e-8
        assert abs(mmse_limit(gaussian(), lam) - mse_pca_limit(gaussian(), lam)) < 1e-8


def test_03_sbm_threshold_and_phases():
    prior = sbm_prior(0.05)
    assert 0.55 <= it_threshold(prior) <= 0.65
    assert classify_phase(prior, 0.4) is Phase.IMPOSSIBLE
    assert classify_phase(prior, 0.8) is Phase.HARD
    assert classify_phase(prior, 1.5) is Phase.EASY


def test_04_hard_phase_boundary():
    # hard cells live strictly below the algorithmic threshold lambda = 1;
    # scan that window at 5e-4 resolution for each p
    p_star = 0.2114
    lams = np.linspace(0.9, 0.9995, 200)
    for p in (0.15, 0.18, 0.20, 0.22, 0.25, 0.30):
        cells = phase_diagram([p], lams, threads=4)
        has_hard = any(c.phase is Phase.HARD for c in cells)
        assert has_hard == (p < p_star), f"p={p}: hard={has_hard}"


def test_05_wishart_gaussian_gaussian():
    pts = gamma_fixed_points(gaussian(), gaussian(), 1.0, 4.0)
    qu, qv = max(pts)
    assert abs(qu - 0.6) < 1e-8 and abs(qv - 0.375) < 1e-8
    rng = np.random.default_rng(17)
    checked = 0
    while checked < 20:
        lam = float(rng.uniform(0.3, 3.0))
        alpha = float(rng.uniform(0.3, 4.0))
        if lam * lam * alpha <= 1.05:
            continue
        sol = solve(gaussian(), gaussian(), lam, alpha)
        overlap_sq, _, _ = pca_wishart_limits(lam, alpha)
        assert abs(sol.q_u_star - overlap_sq) < 1e-8
        checked += 1


def test_06_wishart_sup_gamma_equals_sup_inf():
    pool = [rademacher(), gaussian(), sbm_prior(0.1), sparse_gaussian_prior(0.2)]
    rng = np.random.default_rng(29)
    for _ in range(50):
        pu = pool[rng.integers(len(pool))]
        pv = pool[rng.integers(len(pool))]
        lam = float(rng.uniform(0.2, 3.0))
        alpha = float(rng.uniform(0.25, 4.0))
        best = max(
            float(potential2(pu, pv, lam, alpha, qu, qv))
            for qu, qv in gamma_fixed_points(pu, pv, lam, alpha)
        )
        assert abs(best - sup_inf_value(pu, pv, lam, alpha)) < 1e-6


def test_07_mixed_model_reduction_and_sign_boundary():
    pool = [rademacher(), gaussian(), sbm_prior(0.1), sparse_gaussian_prior(0.2)]
    rng = np.random.default_rng(31)
    for _ in range(20):
        pu = pool[rng.integers(len(pool))]
        pv = pool[rng.integers(len(pool))]
        lam = float(rng.uniform(0.3, 2.0))
        alpha = float(rng.uniform(0.3, 3.0))
        val, _ = mixed_model_value(pu, pv, lam, 0.0, alpha)
        assert abs(val - solve(pu, pv, lam, alpha).value) < 1e-6
    # informative iff g^2 + alpha lam^2 > 1, located to grid resolution 0.02;
    # g is the side-channel amplitude, so the variance-scale SNR passed to
    # mixed_model_value is g^2
    alpha = 1.0
    for lam in (0.4, 0.7):
        g_crit = math.sqrt(1.0 - alpha * lam * lam)
        for k in (-3, -2, -1, 1, 2, 3):
            g = g_crit + 0.02 * k
            _, qu = mixed_model_value(rademacher(), gaussian(), lam, g * g, alpha)
            assert (qu > 1e-5) == (k > 0), f"lam={lam} k={k} qu={qu}"


def test_08_amp_tracks_state_evolution():
    gaps_overlap, gaps_mse, gaps_norm = [], [], []
    for seed in range(20):
        inst = generate_wigner(rademacher(), 4000, 2.0, seed=seed)
        trace = amp_wigner(inst, 10)
        r = trace.records[10]
        gaps_overlap.append(abs(r.overlap_emp - r.overlap_se))
        gaps_mse.append(abs(r.mse_emp - r.mse_se))
        gaps_norm.append(abs(r.norm_emp - r.overlap_se))
    assert np.mean(gaps_overlap) <= 0.08
    assert np.mean(gaps_mse) <= 0.08
    assert np.mean(gaps_norm) <= 5.0 / math.sqrt(4000)


def test_09_pca_empirics():
    eigs, overlaps_sq = [], []
    for seed in range(20):
        inst = generate_wigner(gaussian(), 4000, 4.0, seed=100 + seed)
        theta, v = top_eigenvector(inst.Y / math.sqrt(4000))
        eigs.append(theta)
        num = abs(float(v @ inst.X))
        overlaps_sq.append((num / np.linalg.norm(inst.X)) ** 2)
    assert abs(np.mean(eigs) - 2.5) < 0.05
    assert abs(np.mean(overlaps_sq) - 0.75) < 0.05


def test_10_oracle_free_energy_trend_and_i_mmse():
    prior = rademacher()
    qs, _ = q_star(prior, 2.0)
    rs = float(potential(prior, 2.0, qs))
    gaps = []
    for n in (6, 10, 14):
        f, _ = free_energy_mc(prior, n, 2.0, 500, seed=11, threads=4)
        gaps.append(abs(f - rs))
    assert gaps[0] >= gaps[1] >= gaps[2]
    assert gaps[2] < 0.05
    assert i_mmse_check(prior, 10, 1.0, h=0.05, trials=2000, seed=13, threads=4) < 0.02


def test_11_planted_rem():
    log2 = math.log(2.0)
    assert rem_free_energy(2 * log2) == 0.0
    assert rem_free_energy(1.0) == 0.0
    assert abs(rem_free_energy(2.0) - (1.0 - log2)) < 1e-15
    f, _ = rem_mc(18, 3.0, 200, seed=19, threads=4)
    assert abs(f - (1.5 - log2)) < 0.05


def test_12_property_suite_bundle():
    # condensed re-assertion of the per-module invariants exercised in full
    # by the unit-test files
    rng = np.random.default_rng(23)
    prior = sbm_prior(0.1)
    _, m2, _ = moments(prior)
    for _ in range(20):
        g1, g2, t = rng.uniform(0, 30), rng.uniform(0, 30), rng.uniform()
        assert psi(prior, t * g1 + (1 - t) * g2) <= (
            t * psi(prior, g1) + (1 - t) * psi(prior, g2) + 1e-9
        )
        assert abs(psi(prior, g1) - psi(prior, g2)) <= m2 / 2 * abs(g1 - g2) + 1e-9
    # Nishimori at the denoiser level via the I-MMSE identity; order 201
    # keeps quadrature error below the identity tolerance for the far atom
    for gamma in (0.5, 2.0):
        slope = (
            psi(prior, gamma + 1e-4, order=201) - psi(prior, gamma - 1e-4, order=201)
        ) / 2e-4
        assert abs(2 * slope - (m2 - mmse(prior, gamma, order=201))) < 1e-6
    # conjugate duality at the stationary pairing
    for gamma in (0.5, 2.0):
        x = float(psi_prime(prior, gamma))
        assert abs((gamma * x - monotone_conjugate(prior, x)) - psi(prior, gamma)) < 1e-6
    # stationarity residuals
    for q in stationary_points(prior, 1.4):
        assert abs(2 * float(psi_prime(prior, 1.4 * q)) - q) <= 1e-9
    # SE monotonicity
    trace = state_evolution_wigner(prior, 1.4, 2000, q0_override=1e-6)
    assert np.all(np.diff(trace.q_values) >= -1e-12)
    # pinning at full reveal
    assert pinned_overlap_variance(rademacher(), 6, 1.0, 1.0, 3, seed=1) == 0.0
    # Wasserstein stability inequality
    lhs, rhs = wasserstein_stability_check(gaussian(), 8, 1.0, 20, 50, seed=3)
    assert lhs <= rhs
