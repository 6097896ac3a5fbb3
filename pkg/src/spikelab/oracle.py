"""Small-n ground truth: exact posteriors by enumeration for finite-support
priors, Monte-Carlo free energy / MMSE estimates, the I-MMSE consistency
check, posterior-overlap variance under pinning, a Wasserstein stability
inequality check, and the planted random energy model toy case.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import logsumexp
from scipy.stats import norm

from .priors import Prior, moments, sample
from .scalar_channel import _component_logs

_MAX_STATES = 10**7
_SEED_STRIDE = 1_000_003


@dataclass
class OracleReport:
    n: int
    lam: float
    trials: int
    f_n: float
    f_n_err: float
    mmse_n: float
    mmse_n_err: float
    rs_f: float
    rs_mmse: float
    overlap_variance: float | None = None


def _support(prior: Prior) -> tuple[np.ndarray, np.ndarray]:
    if prior.has_gaussians:
        raise ValueError("exact enumeration needs a finite-support prior")
    vals = np.array([v for v, w in prior.atoms if w > 0])
    ws = np.array([w for v, w in prior.atoms if w > 0])
    return vals, ws


@lru_cache(maxsize=8)
def _config_table(support: tuple, n: int) -> np.ndarray:
    """All |S|^n configurations as rows, mixed-radix order."""
    vals = np.asarray(support)
    k = len(vals)
    total = k**n
    if total > _MAX_STATES:
        raise ValueError(f"state space {k}^{n} exceeds {_MAX_STATES}")
    idx = np.arange(total)
    cols = []
    for i in range(n):
        cols.append(vals[(idx // k ** (n - 1 - i)) % k])
    return np.stack(cols, axis=1)


@lru_cache(maxsize=8)
def _log_prior_table(key: tuple, n: int) -> np.ndarray:
    prior = Prior(atoms=key[0], gaussians=key[1])
    vals, ws = _support(prior)
    logw = {float(v): math.log(w) for v, w in zip(vals, ws)}
    C = _config_table(tuple(vals), n)
    out = np.zeros(C.shape[0])
    for v, lw in logw.items():
        out += lw * (C == v).sum(axis=1)
    return out


def _hamiltonian(C: np.ndarray, Y: np.ndarray, lam: float, n: int) -> np.ndarray:
    """H(x) = sum_{i<j} sqrt(lam/n) x_i x_j Y_ij - (lam/2n) x_i^2 x_j^2,
    vectorized over configuration rows. Y has zero diagonal."""
    quad = 0.5 * np.einsum("mi,mi->m", C @ Y, C)
    s2 = (C * C).sum(axis=1)
    s4 = (C**4).sum(axis=1)
    inter = 0.5 * (s2 * s2 - s4)
    return math.sqrt(lam / n) * quad - lam / (2.0 * n) * inter


def _instance_parts(prior: Prior, n: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Signal and symmetrized zero-diagonal noise, deterministic in seed."""
    X = sample(prior, seed, n)
    rng = np.random.Generator(np.random.Philox(key=seed).jumped())
    Z = np.triu(rng.standard_normal((n, n)), k=1)
    return X, Z + Z.T


def _posterior(prior: Prior, Y: np.ndarray, lam: float):
    """(config table, posterior probabilities, log Z) for one instance."""
    vals, _ = _support(prior)
    n = Y.shape[0]
    C = _config_table(tuple(vals), n)
    logp = _log_prior_table(prior.key(), n) + _hamiltonian(C, Y, lam, n)
    logz = float(logsumexp(logp))
    return C, np.exp(logp - logz), logz


def exact_posterior_products(prior: Prior, Y: np.ndarray, lam: float) -> np.ndarray:
    """Exact n x n matrix of posterior pair means E[X_i X_j | Y]."""
    C, p, _ = _posterior(prior, Y, lam)
    return (C * p[:, None]).T @ C


def exact_posterior_means(prior: Prior, Y: np.ndarray, lam: float) -> np.ndarray:
    C, p, _ = _posterior(prior, Y, lam)
    return p @ C


def _map_trials(fn, trials: int, threads: int | None):
    if threads == 1:
        return [fn(t) for t in range(trials)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(trials)))


def free_energy_mc(
    prior: Prior,
    n: int,
    lam: float,
    trials: int,
    seed: int,
    threads: int | None = None,
) -> tuple[float, float]:
    """Monte-Carlo estimate of (1/n) E log Z_n over instance draws.

    Variance reduction: each trial averages the antithetic noise pair
    (Z, -Z), which cancels the odd (planted-direction) fluctuation of
    log Z, and the even remainder is regression-adjusted against two
    zero-mean control variates with exact expectations: the centered
    noise energy sum Z_ij^2 and the squared planted-direction energy."""

    def logz_over_n(X, Z):
        Y = math.sqrt(lam / n) * np.outer(X, X) + Z
        np.fill_diagonal(Y, 0.0)
        _, _, logz = _posterior(prior, Y, lam)
        return logz / n

    iu = np.triu_indices(n, k=1)

    def one(t):
        X, Z = _instance_parts(prior, n, seed + _SEED_STRIDE * t)
        f = 0.5 * (logz_over_n(X, Z) + logz_over_n(X, -Z))
        zu = Z[iu]
        g_energy = (float(zu @ zu) - n * (n - 1) / 2.0) / n
        xx = np.outer(X, X)[iu]
        h = math.sqrt(lam / n) * float(zu @ xx) / n
        g_planted = h * h - lam / n**3 * float(xx @ xx)
        return f, g_energy, g_planted

    rows = np.asarray(_map_trials(one, trials, threads))
    f, cv = rows[:, 0], rows[:, 1:]
    if trials < 3 or lam == 0.0:
        return float(f.mean()), float(f.std(ddof=1) / math.sqrt(trials))
    design = np.column_stack([np.ones(trials), cv])
    beta, *_ = np.linalg.lstsq(design, f, rcond=None)
    adj = f - cv @ beta[1:]
    return float(adj.mean()), float(adj.std(ddof=1) / math.sqrt(trials))


def mmse_mc(
    prior: Prior,
    n: int,
    lam: float,
    trials: int,
    seed: int,
    threads: int | None = None,
) -> tuple[float, float]:
    """Monte-Carlo estimate of the exact matrix MMSE
    (2/(n(n-1))) sum_{i<j} E[(X_i X_j - E[X_i X_j | Y])^2]."""

    def one(t):
        X, Z = _instance_parts(prior, n, seed + _SEED_STRIDE * t)
        Y = math.sqrt(lam / n) * np.outer(X, X) + Z
        np.fill_diagonal(Y, 0.0)
        PP = exact_posterior_products(prior, Y, lam)
        D = np.outer(X, X) - PP
        off = float(np.sum(D * D) - np.sum(np.diag(D) ** 2))
        return off / (n * (n - 1))

    vals = np.asarray(_map_trials(one, trials, threads))
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(trials))


def i_mmse_check(
    prior: Prior,
    n: int,
    lam: float,
    h: float = 0.05,
    trials: int = 2000,
    seed: int = 0,
    threads: int | None = None,
) -> float:
    """|dF_n/dlam by central difference - (n-1)/(4n) (m2^2 - MMSE_n)|.

    Common random numbers: the same (X, Z) draws feed lam - h, lam, and
    lam + h, cancelling instance-level variance in the difference.
    """
    if lam - h <= 0:
        raise ValueError("need lam - h > 0")
    _, m2, _ = moments(prior)

    def one(t):
        X, Z = _instance_parts(prior, n, seed + _SEED_STRIDE * t)

        def logz_at(l):
            Y = math.sqrt(l / n) * np.outer(X, X) + Z
            np.fill_diagonal(Y, 0.0)
            _, _, logz = _posterior(prior, Y, l)
            return logz / n

        Y = math.sqrt(lam / n) * np.outer(X, X) + Z
        np.fill_diagonal(Y, 0.0)
        PP = exact_posterior_products(prior, Y, lam)
        D = np.outer(X, X) - PP
        off = float(np.sum(D * D) - np.sum(np.diag(D) ** 2))
        mmse = off / (n * (n - 1))
        slope = (logz_at(lam + h) - logz_at(lam - h)) / (2.0 * h)
        return slope, mmse

    res = np.asarray(_map_trials(one, trials, threads))
    slope = float(res[:, 0].mean())
    mmse = float(res[:, 1].mean())
    return abs(slope - (n - 1) / (4.0 * n) * (m2 * m2 - mmse))


def pinned_overlap_variance(
    prior: Prior,
    n: int,
    lam: float,
    epsilon: float,
    trials: int,
    seed: int,
    threads: int | None = None,
) -> float:
    """Posterior variance of the replica overlap (1/n) x^(1) . x^(2) when
    each coordinate of the signal is revealed independently w.p. epsilon.

    Uses the replica identity Var = (1/n^2) sum_{ij} (<x_i x_j>^2
    - <x_i>^2 <x_j>^2) with exact pinned-posterior moments.
    """
    if not 0 <= epsilon <= 1:
        raise ValueError("epsilon must be in [0, 1]")

    def one(t):
        s = seed + _SEED_STRIDE * t
        X, Z = _instance_parts(prior, n, s)
        Y = math.sqrt(lam / n) * np.outer(X, X) + Z
        np.fill_diagonal(Y, 0.0)
        rng = np.random.Generator(np.random.Philox(key=s).jumped(2))
        revealed = rng.random(n) < epsilon
        vals, _ = _support(prior)
        C = _config_table(tuple(vals), n)
        logp = _log_prior_table(prior.key(), n) + _hamiltonian(C, Y, lam, n)
        if revealed.any():
            keep = np.all(C[:, revealed] == X[revealed], axis=1)
            C = C[keep]
            logp = logp[keep]
        p = np.exp(logp - logsumexp(logp))
        PP = (C * p[:, None]).T @ C
        m = p @ C
        return float(np.sum(PP * PP) - np.sum(np.outer(m, m) ** 2)) / n**2

    vals = np.asarray(_map_trials(one, trials, threads))
    return float(vals.mean())


def _quantize(x: np.ndarray, K: float, m: int) -> np.ndarray:
    return (K / m) * np.floor(np.clip(x, -K, K - 1e-12) * m / K)


def quantized_prior(prior: Prior, K: float, m: int) -> Prior:
    """Pushforward of the prior under x -> (K/m) floor(x m / K) on [-K, K];
    Gaussian components become binned atoms."""
    grid = (K / m) * np.arange(-m, m)
    mass = np.zeros(grid.size)
    for v, w in prior.atoms:
        if w > 0:
            j = int(np.clip(math.floor(np.clip(v, -K, K - 1e-12) * m / K), -m, m - 1))
            mass[j + m] += w
    for mu, var, w in prior.gaussians:
        if w > 0:
            edges = np.concatenate([[-np.inf], grid[1:], [np.inf]])
            cdf = norm.cdf(edges, loc=mu, scale=math.sqrt(var))
            mass += w * np.diff(cdf)
    keep = mass > 0
    return Prior(atoms=tuple(zip(grid[keep], mass[keep] / mass.sum())))


def wasserstein_stability_check(
    prior: Prior,
    n: int,
    lam: float,
    m: int,
    trials: int,
    seed: int = 0,
    K: float | None = None,
) -> tuple[float, float]:
    """Stability of the vector Gaussian channel free energy
    F(P) = E log int dP^n(x) exp(sqrt(lam) x.Z + lam x.X - lam |x|^2 / 2)
    under quantization of the prior:
    lhs = |F(P) - F(Pbar)| by MC with coupled signals and shared noise;
    rhs = (lam/2)(sqrt(E|X|^2) + sqrt(E|Xbar|^2)) W2bound, with
    W2 <= sqrt(n) K/m from the coordinatewise quantization coupling.
    Asserts lhs <= rhs + 3 stderr.
    """
    if K is None:
        spans = [abs(v) for v, w in prior.atoms if w > 0]
        spans += [
            abs(mu) + 6.0 * math.sqrt(var) for mu, var, w in prior.gaussians if w > 0
        ]
        K = max(spans) or 1.0
    pbar = quantized_prior(prior, K, m)
    _, m2p, _ = moments(prior)
    _, m2b, _ = moments(pbar)

    diffs = []
    for t in range(trials):
        s = seed + _SEED_STRIDE * t
        X = sample(prior, s, n)
        Xb = _quantize(X, K, m)
        rng = np.random.Generator(np.random.Philox(key=s).jumped())
        Z = rng.standard_normal(n)
        # per-coordinate channel b = lam X + sqrt(lam) Z; log Z factorizes
        def logz(p, sig):
            b = lam * sig + math.sqrt(lam) * Z
            return float(np.sum(logsumexp(_component_logs(p, b, lam), axis=0)))

        diffs.append(logz(prior, X) - logz(pbar, Xb))
    diffs = np.asarray(diffs)
    lhs = abs(float(diffs.mean()))
    stderr = float(diffs.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    w2 = math.sqrt(n) * K / m
    rhs = lam / 2.0 * (math.sqrt(n * m2p) + math.sqrt(n * m2b)) * w2
    if lhs > rhs + 3.0 * stderr:
        raise AssertionError(f"stability bound violated: lhs={lhs} rhs={rhs}")
    return lhs, rhs


def rem_free_energy(lam: float) -> float:
    """Limit free energy of the planted random energy model:
    0 up to lam = 2 log 2, then lam/2 - log 2."""
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    return max(0.0, lam / 2.0 - math.log(2.0))


def rem_mc(
    n: int, lam: float, trials: int, seed: int = 0, threads: int | None = None
) -> tuple[float, float]:
    """MC estimate of (1/n) E log Z_n for the planted needle model:
    Z_n = 2^{-n} sum_sigma exp(sqrt(lam n) Z_sigma + lam n 1(sigma = sigma0)
    - lam n / 2), over the 2^n canonical configurations."""
    if n > 22:
        raise ValueError("n must be <= 22 for enumeration")

    def one(t):
        rng = np.random.Generator(np.random.Philox(key=seed + _SEED_STRIDE * t))
        g = rng.standard_normal(2**n)
        energy = math.sqrt(lam * n) * g - lam * n / 2.0
        energy[0] += lam * n  # planted configuration
        return (float(logsumexp(energy)) - n * math.log(2.0)) / n

    vals = np.asarray(_map_trials(one, trials, threads))
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(trials))


def report(
    prior: Prior,
    n: int,
    lam: float,
    trials: int,
    seed: int,
    threads: int | None = None,
) -> OracleReport:
    """Finite-n MC estimates side by side with the replica-symmetric limits."""
    from .rs_wigner import mmse_limit, potential, q_star

    f_n, f_err = free_energy_mc(prior, n, lam, trials, seed, threads=threads)
    mmse_n, m_err = mmse_mc(prior, n, lam, trials, seed, threads=threads)
    qs, _ = q_star(prior, lam)
    return OracleReport(
        n=n,
        lam=lam,
        trials=trials,
        f_n=f_n,
        f_n_err=f_err,
        mmse_n=mmse_n,
        mmse_n_err=m_err,
        rs_f=float(potential(prior, lam, qs)),
        rs_mmse=mmse_limit(prior, lam),
    )
