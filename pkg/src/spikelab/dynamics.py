"""Synthetic instances and algorithms: instance generation, power-iteration
PCA with optimal rescaling, Bayes-optimal AMP with spectral initialization,
and the deterministic state evolution recursions for both models.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .priors import Prior, moments, sample
from .scalar_channel import DEFAULT_QUAD_ORDER, denoise, denoise_derivative, psi_prime

_SE_RESIDUAL_TOL = 1e-12
_POWER_SEED = 0x5EED_E16
_TRIVIAL_INIT_SCALE = 1e-4
_Q_DIVISION_FLOOR = 1e-12


@dataclass
class WignerInstance:
    n: int
    lam: float
    prior: Prior
    X: np.ndarray
    Y: np.ndarray
    seed: int


@dataclass
class WishartInstance:
    n: int
    m: int
    lam: float
    U: np.ndarray
    V: np.ndarray
    Y: np.ndarray
    seed: int


@dataclass
class SETrace:
    q_values: np.ndarray
    converged: bool
    q_infinity: tuple[float, ...]


@dataclass
class AmpRecord:
    t: int
    overlap_emp: float
    overlap_se: float
    norm_emp: float
    mse_emp: float
    mse_se: float


@dataclass
class AmpTrace:
    records: list[AmpRecord] = field(default_factory=list)
    status: str = "ok"
    se: SETrace | None = None


def empirical_overlap(a: np.ndarray, b: np.ndarray) -> float:
    """|<a, b>| / (||a|| ||b||); 0 when either vector is 0."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or a.size < 1:
        raise ValueError("vectors must share a length >= 1")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(abs(a @ b) / (na * nb))


def generate_wigner(prior: Prior, n: int, lam: float, seed: int) -> WignerInstance:
    """Y_ij = sqrt(lam/n) X_i X_j + Z_ij above the diagonal, symmetrized,
    zero diagonal. Deterministic in seed."""
    if n < 2:
        raise ValueError("n must be >= 2")
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    X = sample(prior, seed, n)
    rng = np.random.Generator(np.random.Philox(key=seed).jumped())
    Z = rng.standard_normal((n, n))
    Y = math.sqrt(lam / n) * np.outer(X, X) + Z
    Y = np.triu(Y, k=1)
    Y = Y + Y.T
    return WignerInstance(n=n, lam=float(lam), prior=prior, X=X, Y=Y, seed=seed)


def generate_wishart(
    pu: Prior, pv: Prior, n: int, m: int, lam: float, seed: int
) -> WishartInstance:
    """Y = sqrt(lam/n) U V^T + Z with iid standard normal entries of Z."""
    if n < 1 or m < 1:
        raise ValueError("n, m must be >= 1")
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    U = sample(pu, seed, n)
    V = sample(pv, seed + 1, m)
    rng = np.random.Generator(np.random.Philox(key=seed).jumped())
    Y = math.sqrt(lam / n) * np.outer(U, V) + rng.standard_normal((n, m))
    return WishartInstance(n=n, m=m, lam=float(lam), U=U, V=V, Y=Y, seed=seed)


def top_eigenvector(
    Y: np.ndarray, tol: float = 1e-9, max_iters: int = 20_000
) -> tuple[float, np.ndarray]:
    """Leading eigenpair (algebraically largest) of a symmetric matrix.

    Lanczos iteration with a deterministic start vector; plain shifted
    power iteration stalls here because the spiked eigenvalue sits right
    at the bulk edge. Converged when ||Yv - theta v|| <= tol ||Y||_F.
    """
    from scipy.sparse.linalg import eigsh

    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2 or Y.shape[0] != Y.shape[1]:
        raise ValueError("Y must be square")
    fro = float(np.linalg.norm(Y)) or 1.0
    n = Y.shape[0]
    if n <= 2:
        vals, vecs = np.linalg.eigh(Y)
        return float(vals[-1]), vecs[:, -1]
    rng = np.random.Generator(np.random.Philox(key=_POWER_SEED))
    v0 = rng.standard_normal(n)
    vals, vecs = eigsh(Y, k=1, which="LA", v0=v0, tol=tol, maxiter=max_iters)
    theta, v = float(vals[0]), vecs[:, 0]
    if np.linalg.norm(Y @ v - theta * v) > tol * fro:
        raise RuntimeError(f"eigenpair residual above {tol} after {max_iters} iterations")
    return theta, v


def pca_estimate_wigner(
    instance: WignerInstance, tol: float = 1e-8
) -> tuple[float, float]:
    """Optimally rescaled PCA estimate of X X^T.

    theta_hat = delta* xhat xhat^T with ||xhat||^2 = n and
    delta* = m2 - 1/(lam m2) above the spectral threshold, 0 below.
    Returns (empirical matrix MSE over i<j, |overlap| of xhat with X).
    """
    n, lam = instance.n, instance.lam
    _, m2, _ = moments(instance.prior)
    _, phi = top_eigenvector(instance.Y / math.sqrt(n), tol=tol)
    xhat = math.sqrt(n) * phi
    overlap = empirical_overlap(xhat, instance.X)
    delta = m2 - 1.0 / (lam * m2) if lam * m2 * m2 > 1.0 else 0.0
    E = np.outer(instance.X, instance.X) - delta * np.outer(xhat, xhat)
    off_sq = float(np.sum(E * E) - np.sum(np.diag(E) ** 2))
    mse = off_sq / (n * (n - 1))
    return mse, overlap


def state_evolution_wigner(
    prior: Prior,
    lam: float,
    T: int,
    q0_override: float | None = None,
    order: int = DEFAULT_QUAD_ORDER,
) -> SETrace:
    """q_0 = (1 - 1/lam)_+ (or the override), q_{t+1} = 2 psi'(lam q_t).

    Stated for unit-second-moment priors only; others are rejected since
    the correct rescaling is not defined here.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    _, m2, _ = moments(prior)
    if abs(m2 - 1.0) > 1e-9:
        raise ValueError(f"prior must have unit second moment, got m2={m2:.6g}")
    q = max(0.0, 1.0 - 1.0 / lam) if q0_override is None else float(q0_override)
    if q < 0:
        raise ValueError("q0 must be >= 0")
    qs = [q]
    converged = False
    for _ in range(T):
        q_next = float(2.0 * psi_prime(prior, lam * q, order=order))
        qs.append(q_next)
        if abs(q_next - q) < _SE_RESIDUAL_TOL:
            converged = True
            q = q_next
            break
        q = q_next
    return SETrace(q_values=np.asarray(qs), converged=converged, q_infinity=(q,))


def state_evolution_wishart(
    pu: Prior,
    pv: Prior,
    lam: float,
    alpha: float,
    T: int,
    q_v0: float = 0.0,
    order: int = DEFAULT_QUAD_ORDER,
) -> SETrace:
    """Coupled recursion q_u^t = 2 psi'_U(lam alpha q_v^t),
    q_v^{t+1} = 2 psi'_V(lam q_u^t), from q_v^0 = 0 unless overridden."""
    if T < 1:
        raise ValueError("T must be >= 1")
    if lam < 0 or alpha <= 0:
        raise ValueError("need lambda >= 0 and alpha > 0")
    q_v = float(q_v0)
    pairs = []
    converged = False
    for _ in range(T + 1):
        q_u = float(2.0 * psi_prime(pu, lam * alpha * q_v, order=order))
        pairs.append((q_u, q_v))
        q_v_next = float(2.0 * psi_prime(pv, lam * q_u, order=order))
        if abs(q_v_next - q_v) < _SE_RESIDUAL_TOL and len(pairs) > 1:
            converged = True
            q_v = q_v_next
            break
        q_v = q_v_next
    q_u = float(2.0 * psi_prime(pu, lam * alpha * q_v, order=order))
    return SETrace(
        q_values=np.asarray(pairs), converged=converged, q_infinity=(q_u, q_v)
    )


def _pair_mse(X: np.ndarray, xhat: np.ndarray, n: int) -> float:
    """(1/n^2) ||X X^T - xhat xhat^T||_F^2 without forming the matrices."""
    return float(
        (X @ X) ** 2 + (xhat @ xhat) ** 2 - 2.0 * (X @ xhat) ** 2
    ) / n**2


def amp_wigner(
    instance: WignerInstance, T: int, order: int = DEFAULT_QUAD_ORDER
) -> AmpTrace:
    """Bayes-optimal AMP x^{t+1} = (Y/sqrt(n)) f_t(x^t) - b_t f_{t-1}(x^{t-1})
    with f_t(x) = posterior mean at effective SNR lam q_t, initialized from
    the leading eigenvector scaled by sqrt(n (lam^2 - 1)).

    Below lam = 1 the spectral scale is imaginary and state evolution stays
    at 0; the run starts from a tiny random vector and reports
    status='stuck_at_trivial'.
    """
    prior, lam, n, X = instance.prior, instance.lam, instance.n, instance.X
    _, m2, _ = moments(prior)
    if abs(m2 - 1.0) > 1e-9:
        raise ValueError(f"prior must have unit second moment, got m2={m2:.6g}")
    se = state_evolution_wigner(prior, lam, max(T, 1), order=order)
    qs = se.q_values
    trace = AmpTrace(se=se)
    Yn = instance.Y / math.sqrt(n)

    if lam > 1.0:
        _, phi = top_eigenvector(Yn)
        x = math.sqrt(n * (lam * lam - 1.0)) * phi
    else:
        rng = np.random.Generator(np.random.Philox(key=instance.seed).jumped(2))
        x = _TRIVIAL_INIT_SCALE * rng.standard_normal(n)
        trace.status = "stuck_at_trivial"

    fhat_prev = None
    for t in range(T + 1):
        q_t = float(qs[t]) if t < len(qs) else float(qs[-1])
        q_div = max(q_t, _Q_DIVISION_FLOOR)  # floor only the division scale
        fhat = np.asarray(denoise(prior, x / math.sqrt(q_div), lam * q_t))
        trace.records.append(
            AmpRecord(
                t=t,
                overlap_emp=empirical_overlap(fhat, X),
                overlap_se=math.sqrt(max(q_t, 0.0)),
                norm_emp=float(np.linalg.norm(fhat)) / math.sqrt(n),
                mse_emp=_pair_mse(X, fhat, n),
                mse_se=1.0 - q_t * q_t,
            )
        )
        if q_t <= 0.0:
            trace.status = "stuck_at_trivial"
            break
        if t == T:
            break
        b = float(
            np.mean(denoise_derivative(prior, x / math.sqrt(q_div), lam * q_t))
        ) / math.sqrt(q_div)
        x_next = Yn @ fhat
        if fhat_prev is not None:
            x_next = x_next - b * fhat_prev
        fhat_prev = fhat
        x = x_next
    return trace
