"""Monte-Carlo anytime-coverage audits for every confidence-sequence
construction.

Each audit runs R independent replications of a length-T stream and counts
replications in which the true parameter exits the set at ANY step.  The
replication axis is vectorized (arrays of shape (R, ...)): a per-step Python
loop over 2000x200 tracker objects would dominate the runtime otherwise.
Consistency of these batched recursions with the object-level trackers is
asserted in the test suite on small instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .models import sigmoid, softplus
from .spaces import make_finite


@dataclass(frozen=True)
class CoverageResult:
    construction: str
    delta: float
    replications: int
    failures: int

    @property
    def failure_rate(self) -> float:
        return self.failures / self.replications

    @property
    def binomial_3sigma(self) -> float:
        return 3.0 * math.sqrt(self.delta * (1.0 - self.delta) / self.replications)

    @property
    def passed(self) -> bool:
        return self.failure_rate <= self.delta + self.binomial_3sigma


# ---------------------------------------------------------------------------
# Shared stream simulators
# ---------------------------------------------------------------------------


def finite_bernoulli_streams(
    R: int, T: int, seed: int, m: int = 10, d: int = 2, star_index: int = 3
):
    """Batched logistic streams on a fixed finite atom set.

    Returns (atoms, log_prior, step_log, star_index) where step_log has shape
    (R, T, m): per-atom log densities of each observed outcome.
    """
    atom_rng = np.random.default_rng(20240101)  # atoms are a fixture, not data
    atoms = atom_rng.normal(size=(m, d))
    space = make_finite(atoms, np.ones(m))
    rng = np.random.default_rng([seed, 11])
    X = rng.normal(size=(R, T, d))
    logits = X @ atoms.T  # (R, T, m)
    p_star = sigmoid(logits[:, :, star_index])
    Y = (rng.random((R, T)) < p_star).astype(float)
    step_log = Y[:, :, None] * logits - softplus(logits)
    return space.atoms, space.log_prior, step_log, star_index


def gaussian_linear_streams(
    R: int, T: int, seed: int, theta_star: float = 1.0, sigma: float = 1.0
):
    """Batched 1-d Gaussian-linear streams: returns (X, Y) of shape (R, T)."""
    rng = np.random.default_rng([seed, 13])
    X = rng.uniform(0.5, 1.5, size=(R, T))
    Y = theta_star * X + sigma * rng.standard_normal((R, T))
    return X, Y


# ---------------------------------------------------------------------------
# Finite-model audits (Bernoulli likelihood, 10-atom parameter set)
# ---------------------------------------------------------------------------


def audit_seqlr_running_mle(R, T, delta, seed) -> CoverageResult:
    """Sequential likelihood ratio with the running MLE estimate sequence."""
    atoms, log_prior, step_log, star = finite_bernoulli_streams(R, T, seed)
    cum_nll = -np.cumsum(step_log, axis=1)  # (R, T, m)
    log_inv_delta = math.log(1.0 / delta)
    rows = np.arange(R)
    est_idx = np.zeros(R, dtype=int)  # theta_hat_0: first atom
    cum_pred = np.zeros(R)
    failed = np.zeros(R, dtype=bool)
    for t in range(T):
        cum_pred += step_log[rows, t, est_idx]
        beta = log_inv_delta - cum_pred
        failed |= cum_nll[:, t, star] > beta
        est_idx = np.argmin(cum_nll[:, t, :], axis=1)
    return CoverageResult("seq_lr_running_mle", delta, R, int(failed.sum()))


def audit_prior_mixing(R, T, delta, seed) -> CoverageResult:
    atoms, log_prior, step_log, star = finite_bernoulli_streams(R, T, seed)
    cum_nll = -np.cumsum(step_log, axis=1)
    evidence = logsumexp(log_prior[None, None, :] - cum_nll, axis=2)  # (R, T)
    beta = math.log(1.0 / delta) - evidence
    failed = np.any(cum_nll[:, :, star] > beta, axis=1)
    return CoverageResult("prior_mixing", delta, R, int(failed.sum()))


def audit_sequential_bayes_mixing(R, T, delta, seed) -> CoverageResult:
    """Sequential mixing with Bayes-posterior mixing distributions."""
    atoms, log_prior, step_log, star = finite_bernoulli_streams(R, T, seed)
    cum_nll = -np.cumsum(step_log, axis=1)
    log_inv_delta = math.log(1.0 / delta)
    norm_prior = log_prior - logsumexp(log_prior)
    lw = np.tile(norm_prior, (R, 1))  # Bayes posterior log weights
    cum_pred = np.zeros(R)
    failed = np.zeros(R, dtype=bool)
    for t in range(T):
        joint = lw + step_log[:, t, :]
        pred = logsumexp(joint, axis=1)
        cum_pred += pred
        lw = joint - pred[:, None]
        failed |= cum_nll[:, t, star] > log_inv_delta - cum_pred
    return CoverageResult("sequential_bayes_mixing", delta, R, int(failed.sum()))


def audit_elbo(R, T, delta, seed, eta: float = 0.9) -> CoverageResult:
    """ELBO set with a non-Bayes variational family (EW posterior, eta < 1)."""
    atoms, log_prior, step_log, star = finite_bernoulli_streams(R, T, seed)
    cum_nll = -np.cumsum(step_log, axis=1)  # (R, T, m)
    lw = log_prior[None, None, :] - eta * cum_nll
    lw = lw - logsumexp(lw, axis=2, keepdims=True)
    rho = np.exp(lw)
    elbo = np.sum(rho * (-cum_nll - lw + log_prior[None, None, :]), axis=2)
    beta = math.log(1.0 / delta) - elbo
    failed = np.any(cum_nll[:, :, star] > beta, axis=1)
    return CoverageResult("elbo", delta, R, int(failed.sum()))


# ---------------------------------------------------------------------------
# Gaussian-stream audits (1-d linear model)
# ---------------------------------------------------------------------------


def audit_tempered_hellinger(
    R, T, delta, seed, theta_star: float = 1.0, sigma: float = 1.0, lam: float = 1.0
) -> CoverageResult:
    """Tempered Hellinger set with the running ridge estimate sequence."""
    X, Y = gaussian_linear_streams(R, T, seed, theta_star, sigma)
    threshold = 2.0 * math.log(1.0 / delta)
    sum_h2 = np.zeros(R)
    log_regret = np.zeros(R)
    sxx = np.zeros(R)
    sxy = np.zeros(R)
    estimate = np.zeros(R)  # theta_hat_0 = 0, predictable
    failed = np.zeros(R, dtype=bool)
    for t in range(T):
        x, y = X[:, t], Y[:, t]
        gap = x * (theta_star - estimate)
        sum_h2 += 2.0 * (1.0 - np.exp(-(gap**2) / (8.0 * sigma**2)))
        log_regret += ((y - estimate * x) ** 2 - (y - theta_star * x) ** 2) / (
            2.0 * sigma**2
        )
        failed |= sum_h2 - log_regret > threshold
        sxx += x * x
        sxy += x * y
        estimate = sxy / (lam + sxx)
    return CoverageResult("tempered_hellinger", delta, R, int(failed.sum()))


def audit_subgaussian(
    R, T, delta, seed, theta_star: float = 1.0, sigma: float = 1.0, lam: float = 1.0
) -> CoverageResult:
    """Sub-Gaussian pseudo-likelihood tracker with conjugate Gaussian mixing."""
    X, Y = gaussian_linear_streams(R, T, seed, theta_star, sigma)
    log_inv_delta = math.log(1.0 / delta)
    lhs = np.zeros(R)
    cum_mix = np.zeros(R)
    prec = np.full(R, lam)
    mean = np.zeros(R)
    failed = np.zeros(R, dtype=bool)
    for t in range(T):
        x, y = X[:, t], Y[:, t]
        var = sigma**2 + x * x / prec
        cum_mix += 0.5 * np.log(sigma**2 / var) - (mean * x - y) ** 2 / (2.0 * var)
        lhs += (theta_star * x - y) ** 2 / (2.0 * sigma**2)
        failed |= lhs > log_inv_delta - cum_mix
        mean = (prec * mean + x * y / sigma**2) / (prec + x * x / sigma**2)
        prec = prec + x * x / sigma**2
    return CoverageResult("sub_gaussian", delta, R, int(failed.sum()))


def audit_online_to_confidence_vaw(
    R, T, delta, seed, theta_star: float = 1.0, lam: float = 1.0
) -> CoverageResult:
    """Online-to-confidence conversion driven by the VAW forecaster.

    B_t is the empirically valid certificate max(Lambda_t(theta*), 0) plus
    the ridge term lam * theta*^2 / 2.
    """
    X, Y = gaussian_linear_streams(R, T, seed, theta_star, 1.0)
    log_inv_delta = math.log(1.0 / delta)
    gram = np.full(R, lam)
    moment = np.zeros(R)
    lhs = np.zeros(R)
    regret = np.zeros(R)
    failed = np.zeros(R, dtype=bool)
    ridge = 0.5 * lam * theta_star**2
    for t in range(T):
        x, y = X[:, t], Y[:, t]
        y_hat = x * moment / (gram + x * x)
        lhs += 0.5 * (y_hat - theta_star * x) ** 2
        regret += 0.5 * (y_hat - y) ** 2 - 0.5 * (theta_star * x - y) ** 2
        b_t = np.maximum(regret, 0.0) + ridge
        failed |= lhs > 4.0 * log_inv_delta + 2.0 * b_t
        gram += x * x
        moment += x * y
    return CoverageResult("online_to_confidence_vaw", delta, R, int(failed.sum()))


ALL_AUDITS = {
    "seq_lr_running_mle": audit_seqlr_running_mle,
    "prior_mixing": audit_prior_mixing,
    "sequential_bayes_mixing": audit_sequential_bayes_mixing,
    "elbo": audit_elbo,
    "tempered_hellinger": audit_tempered_hellinger,
    "sub_gaussian": audit_subgaussian,
    "online_to_confidence_vaw": audit_online_to_confidence_vaw,
}


def run_all_audits(R: int, T: int, delta: float, seed: int):
    return [fn(R, T, delta, seed) for fn in ALL_AUDITS.values()]
