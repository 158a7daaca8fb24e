"""Logistic-bandit environment and the UCB loop with pluggable
confidence-set oracles (MQ, PL, EMK).

MQ keeps a running per-atom log-likelihood over the ball grid and queries the
marginal likelihood by log-sum-exp, so set construction is O(grid) per step.
EMK is the sequential likelihood ratio with the running MLE; PL thresholds a
Laplace approximation of the posterior (no coverage guarantee).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .models import sigmoid, softplus
from .online import logistic_ball_fit
from .spaces import ball_grid, ball_volume, uniform_ball_sample

LOG_2PI = math.log(2.0 * math.pi)


class Method(enum.Enum):
    MQ = "MQ"
    PL = "PL"
    EMK = "EMK"


@dataclass(frozen=True)
class BanditConfig:
    S: float
    method: Method
    d: int = 2
    horizon: int = 1000
    n_arms: int = 10
    delta: float = 0.05
    seed: int = 0
    grid_resolution: int = 101
    normalize_arms: bool = False

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if self.n_arms < 2:
            raise ValueError("need at least 2 arms")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.S <= 0:
            raise ValueError("S must be positive")


@dataclass
class BanditTrace:
    """Per-step record of one episode."""

    arm_index: np.ndarray
    inst_regret: np.ndarray
    cum_regret: np.ndarray
    threshold: np.ndarray
    width_proxy: np.ndarray


def env_step(theta_star: np.ndarray, arm: np.ndarray, rng: np.random.Generator) -> float:
    """Bernoulli reward with mean sigmoid(<arm, theta_star>)."""
    p = float(sigmoid(np.dot(arm, theta_star)))
    return float(rng.random() < p)


def ucb_select(arms: np.ndarray, inner_max) -> int:
    """argmax over arms of the set oracle's max-linear score; ties -> lowest index."""
    scores = np.array([inner_max(a) for a in arms])
    return int(np.argmax(scores))


def _masked_linear_max(atoms, mask, arms):
    """Per-arm max of <atom, arm> over member atoms; -inf columns when empty."""
    scores = atoms @ arms.T
    scores = np.where(mask[:, None], scores, -np.inf)
    return scores.max(axis=0)


def run_episode(config: BanditConfig) -> BanditTrace:
    """One UCB episode; bit-reproducible given the config."""
    d, S, H = config.d, config.S, config.horizon
    theta_star = np.full(d, (S - 1.0) / math.sqrt(d))
    log_inv_delta = math.log(1.0 / config.delta)

    # arm and reward streams are seeded independently of the method so that
    # per-seed comparisons across methods share the same arm sequences
    arm_rng = np.random.default_rng([config.seed, 1])
    reward_rng = np.random.default_rng([config.seed, 2])

    space = ball_grid(d, S, config.grid_resolution)
    atoms = space.atoms
    log_prior = space.log_prior
    cum_nll = np.zeros(space.size)  # per-atom L_t

    X = np.zeros((H, d))
    y = np.zeros(H)
    cum_estimate_log = 0.0  # EMK: sum_s log p_s(y_s | theta_hat_{s-1})
    theta_hat = np.zeros(d)  # EMK running MLE / PL warm start

    arm_index = np.zeros(H, dtype=int)
    inst_regret = np.zeros(H)
    cum_regret = np.zeros(H)
    thresholds = np.zeros(H)
    widths = np.zeros(H)

    log_vol = math.log(ball_volume(d, S))

    for t in range(H):
        arms = np.array([uniform_ball_sample(d, S, arm_rng) for _ in range(config.n_arms)])
        if config.normalize_arms:
            arms = arms / S

        if config.method in (Method.MQ, Method.EMK):
            if config.method is Method.MQ:
                beta = log_inv_delta - float(logsumexp(log_prior - cum_nll))
            else:
                beta = log_inv_delta - cum_estimate_log
            mask = cum_nll <= beta
            if not mask.any():
                # degenerate (possible only through numeric edge cases):
                # fall back to the best atom
                mask = cum_nll == cum_nll.min()
            arm_scores = _masked_linear_max(atoms, mask, arms)
            member_first = atoms[mask, 0]
            width = float(member_first.max() - member_first.min())
            thresholds[t] = beta
        else:  # PL
            beta_tilde, center, hess = _pl_set(X[:t], y[:t], S, theta_hat, d, log_vol, log_inv_delta)
            theta_hat = center
            if beta_tilde is None:
                # no usable Laplace fit yet: optimism over the whole ball
                arm_scores = S * np.linalg.norm(arms, axis=1)
                width = 2.0 * S
                thresholds[t] = math.inf
            elif beta_tilde < 0:
                # empty approximate set: fall back to the MAP point
                arm_scores = arms @ center
                width = 0.0
                thresholds[t] = beta_tilde
            else:
                arm_scores = np.array(
                    [_ellipsoid_linear_max(center, hess, beta_tilde, a, S) for a in arms]
                )
                diff = atoms - center
                member = 0.5 * np.einsum("ij,jk,ik->i", diff, hess, diff) <= beta_tilde
                member_first = atoms[member, 0]
                width = float(member_first.max() - member_first.min()) if member.any() else 0.0
                thresholds[t] = beta_tilde

        chosen = int(np.argmax(arm_scores))
        arm = arms[chosen]
        reward = env_step(theta_star, arm, reward_rng)

        means = sigmoid(arms @ theta_star)
        inst = float(means.max() - means[chosen])

        arm_index[t] = chosen
        inst_regret[t] = inst
        cum_regret[t] = inst + (cum_regret[t - 1] if t > 0 else 0.0)
        widths[t] = width

        # state updates
        z = atoms @ arm
        cum_nll += softplus(z) - reward * z  # logistic NLL increments per atom
        X[t] = arm
        y[t] = reward
        if config.method is Method.EMK:
            z_hat = float(theta_hat @ arm)
            cum_estimate_log += -float(softplus(z_hat)) + reward * z_hat
            theta_hat, _ = logistic_ball_fit(X[: t + 1], y[: t + 1], S, x0=theta_hat)

    return BanditTrace(arm_index, inst_regret, cum_regret, thresholds, widths)


def _pl_set(X, y, S, warm, d, log_vol, log_inv_delta):
    """Laplace-approximate prior-posterior ratio set.

    Returns (beta_tilde, map_estimate, hessian); beta_tilde is None while the
    Hessian at the MAP is singular (too little data).
    """
    if X.shape[0] == 0:
        return None, np.zeros(d), None
    theta, resid = logistic_ball_fit(X, y, S, x0=warm)
    z = X @ theta
    p = sigmoid(z)
    w = p * (1.0 - p)
    hess = (X * w[:, None]).T @ X
    sign, logdet = np.linalg.slogdet(hess)
    if sign <= 0 or not np.isfinite(logdet) or logdet < -30 * d:
        return None, theta, None
    beta_tilde = log_inv_delta + log_vol - 0.5 * d * LOG_2PI + 0.5 * logdet
    return beta_tilde, theta, hess


def _ellipsoid_linear_max(center, hess, beta_tilde, arm, S):
    """max <theta, arm> over the ellipsoid, maximizer clipped to the ball."""
    hinv_a = np.linalg.solve(hess, arm)
    quad = float(arm @ hinv_a)
    if quad <= 0:
        return float(center @ arm)
    maximizer = center + math.sqrt(2.0 * beta_tilde / quad) * hinv_a
    norm = np.linalg.norm(maximizer)
    if norm > S:
        maximizer = maximizer * (S / norm)
    return float(maximizer @ arm)
