"""Sparse-prior sequential regression experiment.

A degree-d Chebyshev feature expansion with a 2-sparse ground truth is fit
under four confidence-set constructions: the sequential likelihood ratio with
a dense or sparse running estimator, and the prior-posterior ratio with a
dense or sparse-mixture Gaussian prior.  Per-coordinate band widths come from
enumerating the 2-sparse supports and taking closed-form coordinate extremes
over each support's ellipse section.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import chebyshev
from scipy.special import logsumexp

LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class SparseConfig:
    d: int = 20
    k: int = 2
    n_obs: int = 20
    noise_std: float = 0.1
    prior_std: float = 1.0  # per-coordinate Gaussian prior scale
    norm_bound: float = math.sqrt(2.0)
    delta: float = 0.05


def chebyshev_features(x: np.ndarray, d: int) -> np.ndarray:
    """(n, d) matrix of Chebyshev polynomials T_0 .. T_{d-1} at x in [-1, 1]."""
    return chebyshev.chebvander(np.asarray(x, dtype=float), d - 1)


def sparse_supports(d: int, k: int = 2):
    """All singletons and unordered pairs of coordinates (k = 2 only)."""
    if k != 2:
        raise ValueError("support enumeration implemented for k = 2")
    singles = [(i,) for i in range(d)]
    pairs = list(itertools.combinations(range(d), 2))
    return singles + pairs


def simulate_stream(config: SparseConfig, rng: np.random.Generator):
    """Returns (features, y) with theta* = e_1 + e_2 in feature space."""
    x = rng.uniform(-1.0, 1.0, size=config.n_obs)
    features = chebyshev_features(x, config.d)
    theta_star = np.zeros(config.d)
    theta_star[0] = 1.0
    theta_star[1] = 1.0
    y = features @ theta_star + config.noise_std * rng.standard_normal(config.n_obs)
    return features, y, theta_star


def gaussian_evidence_dense(features, y, noise_std, prior_std) -> float:
    """log N(y; 0, sigma^2 I + tau^2 Phi Phi^T): dense Gaussian-prior evidence."""
    n = len(y)
    cov = noise_std**2 * np.eye(n) + prior_std**2 * (features @ features.T)
    sign, logdet = np.linalg.slogdet(cov)
    return float(-0.5 * n * LOG_2PI - 0.5 * logdet - 0.5 * y @ np.linalg.solve(cov, y))


def sparse_mixture_evidence(features, y, config: SparseConfig) -> float:
    """log[(1/d^2) sum_supports Z_S]: each support carries weight 1/d^2.

    The support weights sum to (d + C(d,2))/d^2 < 1, a permitted
    sub-probability prior.
    """
    log_terms = []
    log_w = -2.0 * math.log(config.d)
    for S in sparse_supports(config.d, config.k):
        z = gaussian_evidence_dense(
            features[:, list(S)], y, config.noise_std, config.prior_std
        )
        log_terms.append(log_w + z)
    return float(logsumexp(log_terms))


def _ball_ls(gram, rhs, S):
    """Minimize the quadratic 1/2 th^T G th - rhs^T th over ||th|| <= S."""
    jitter = 1e-10 * np.eye(len(rhs))
    theta = np.linalg.solve(gram + jitter, rhs)
    if np.linalg.norm(theta) <= S:
        return theta
    lo, hi = 0.0, 1.0
    while np.linalg.norm(np.linalg.solve(gram + hi * np.eye(len(rhs)), rhs)) > S:
        hi *= 2.0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        theta = np.linalg.solve(gram + mid * np.eye(len(rhs)), rhs)
        if np.linalg.norm(theta) > S:
            lo = mid
        else:
            hi = mid
    return np.linalg.solve(gram + hi * np.eye(len(rhs)), rhs)


def _nll(features, y, theta, noise_std) -> float:
    resid = y - features @ theta
    n = len(y)
    return float(
        0.5 * n * LOG_2PI + n * math.log(noise_std) + resid @ resid / (2 * noise_std**2)
    )


def running_dense_estimates(features, y, config: SparseConfig):
    """theta_hat_0 .. theta_hat_{n-1}: prefix ball-constrained least squares."""
    d = config.d
    estimates = [np.zeros(d)]
    sig2 = config.noise_std**2
    for s in range(1, config.n_obs):
        Phi, ys = features[:s], y[:s]
        gram = Phi.T @ Phi / sig2
        rhs = Phi.T @ ys / sig2
        estimates.append(_ball_ls(gram, rhs, config.norm_bound))
    return estimates


def running_sparse_estimates(features, y, config: SparseConfig):
    """Prefix 2-sparse constrained least-squares estimates (support enumeration)."""
    d = config.d
    supports = sparse_supports(d, config.k)
    estimates = [np.zeros(d)]
    sig2 = config.noise_std**2
    for s in range(1, config.n_obs):
        Phi, ys = features[:s], y[:s]
        best_nll, best_theta = math.inf, np.zeros(d)
        for S in supports:
            cols = list(S)
            sub = Phi[:, cols]
            gram = sub.T @ sub / sig2
            rhs = sub.T @ ys / sig2
            theta_s = _ball_ls(gram, rhs, config.norm_bound)
            theta = np.zeros(d)
            theta[cols] = theta_s
            nll = _nll(Phi, ys, theta, config.noise_std)
            if nll < best_nll - 1e-12:
                best_nll, best_theta = nll, theta
        estimates.append(best_theta)
    return estimates


def seq_lr_threshold(features, y, estimates, config: SparseConfig) -> float:
    """beta = log(1/delta) + sum_s per-step NLL at the predictable estimate."""
    total = 0.0
    for s in range(config.n_obs):
        resid = y[s] - float(features[s] @ estimates[s])
        total += 0.5 * LOG_2PI + math.log(config.noise_std) + resid**2 / (
            2 * config.noise_std**2
        )
    return math.log(1.0 / config.delta) + total


def coordinate_widths(features, y, beta, config: SparseConfig):
    """Per-coordinate confidence-band widths over the 2-sparse membership set.

    For each support the level-set section is an ellipse; the coordinate
    extremes are closed form and clipped to the norm ball.  Returns
    (widths, feasible_flag); an empty set gives width 0 with flag False.
    """
    d = config.d
    sig2 = config.noise_std**2
    n = config.n_obs
    const = 0.5 * n * LOG_2PI + n * math.log(config.noise_std)
    lower = np.full(d, math.inf)
    upper = np.full(d, -math.inf)
    any_feasible = False
    zero_feasible = np.zeros(d, dtype=bool)  # a feasible support omitting coord i
    for S in sparse_supports(d, config.k):
        cols = list(S)
        sub = features[:, cols]
        gram = sub.T @ sub / sig2 + 1e-12 * np.eye(len(cols))
        rhs = sub.T @ y / sig2
        center = np.linalg.solve(gram, rhs)
        norm = np.linalg.norm(center)
        if norm > config.norm_bound:
            center_b = _ball_ls(gram, rhs, config.norm_bound)
        else:
            center_b = center
        resid = y - sub @ center_b
        min_nll = const + float(resid @ resid) / (2 * sig2)
        slack = beta - min_nll
        if slack < 0:
            continue
        any_feasible = True
        inv = np.linalg.inv(gram)
        # unconstrained-center ellipse extremes; recompute slack about the
        # unconstrained minimizer (valid superset, then clipped to the ball)
        resid_u = y - sub @ center
        slack_u = beta - (const + float(resid_u @ resid_u) / (2 * sig2))
        outside = np.ones(d, dtype=bool)
        for j, col in enumerate(cols):
            outside[col] = False
            if slack_u >= 0:
                half = math.sqrt(2.0 * slack_u * inv[j, j])
                lo = max(center[j] - half, -config.norm_bound)
                hi = min(center[j] + half, config.norm_bound)
            else:
                lo = hi = float(np.clip(center_b[j], -config.norm_bound, config.norm_bound))
            lower[col] = min(lower[col], lo)
            upper[col] = max(upper[col], hi)
        zero_feasible |= outside
    if not any_feasible:
        return np.zeros(d), False
    lower = np.where(zero_feasible, np.minimum(lower, 0.0), lower)
    upper = np.where(zero_feasible, np.maximum(upper, 0.0), upper)
    widths = np.where(upper >= lower, upper - lower, 0.0)
    return widths, True


METHODS = (
    "emk",
    "emk_sparse",
    "posterior_prior_ratio",
    "posterior_prior_ratio_sparse",
)


def run_rerun(config: SparseConfig, rng: np.random.Generator):
    """One rerun: returns {method: widths array of length d}."""
    features, y, theta_star = simulate_stream(config, rng)
    log_inv_delta = math.log(1.0 / config.delta)

    dense_est = running_dense_estimates(features, y, config)
    sparse_est = running_sparse_estimates(features, y, config)
    betas = {
        "emk": seq_lr_threshold(features, y, dense_est, config),
        "emk_sparse": seq_lr_threshold(features, y, sparse_est, config),
        "posterior_prior_ratio": log_inv_delta
        - gaussian_evidence_dense(features, y, config.noise_std, config.prior_std),
        "posterior_prior_ratio_sparse": log_inv_delta
        - sparse_mixture_evidence(features, y, config),
    }
    out = {}
    for method, beta in betas.items():
        widths, _ = coordinate_widths(features, y, beta, config)
        out[method] = widths
    return out, theta_star, betas
