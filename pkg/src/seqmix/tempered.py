"""Tempered confidence sets, divergences, and the online-to-confidence-set
conversion for sequential linear regression (Vovk-Azoury-Warmuth forecaster).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import models
from .models import ModelFamily, ModelKind, Observation, sigmoid


def renyi_gaussian(m1: float, m2: float, sigma: float, zeta: float) -> float:
    """D_zeta(N(m1, sigma^2) || N(m2, sigma^2)) = zeta (m1 - m2)^2 / (2 sigma^2)."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if not 0.0 < zeta < 1.0:
        raise ValueError("zeta must lie in (0, 1)")
    return zeta * (m1 - m2) ** 2 / (2.0 * sigma**2)


def hellinger_sq_gaussian(m1: float, m2: float, sigma: float) -> float:
    """Squared Hellinger distance between equal-variance Gaussians."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return 2.0 * (1.0 - math.exp(-((m1 - m2) ** 2) / (8.0 * sigma**2)))


def renyi_bernoulli(p: float, q: float, zeta: float) -> float:
    """Renyi divergence between Bernoulli(p) and Bernoulli(q)."""
    if not 0.0 < zeta < 1.0:
        raise ValueError("zeta must lie in (0, 1)")
    s = p**zeta * q ** (1 - zeta) + (1 - p) ** zeta * (1 - q) ** (1 - zeta)
    return math.log(s) / (zeta - 1.0)


def hellinger_sq_bernoulli(p: float, q: float) -> float:
    return (math.sqrt(p) - math.sqrt(q)) ** 2 + (
        math.sqrt(1 - p) - math.sqrt(1 - q)
    ) ** 2


class TemperedVariant(enum.Enum):
    RENYI = "renyi"
    HELLINGER = "hellinger"


@dataclass
class TemperedState:
    """Accumulates the estimate history and data of a tempered tracker.

    Divergence sums and the log regret are evaluated lazily at query time;
    only Gaussian-linear and logistic-Bernoulli models are supported (both
    have closed-form per-step divergences).
    """

    model: ModelFamily
    beta: float
    estimate_history: list = field(default_factory=list)  # theta_hat_{s-1}
    data: list = field(default_factory=list)
    cum_estimate_log: float = 0.0  # sum_s log p_s(y_s | theta_hat_{s-1})

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise ValueError("temperature beta must lie in (0, 1)")

    def step(self, estimate: np.ndarray, obs: Observation) -> None:
        """Record one (predictable estimate, observation) pair."""
        estimate = np.asarray(estimate, dtype=float)
        self.estimate_history.append(estimate)
        self.data.append(obs)
        self.cum_estimate_log += models.log_density(self.model, estimate, obs)

    def log_regret(self, theta) -> float:
        """Lambda_t(theta) = -sum log p_s(y_s|theta_hat_{s-1}) - L_t(theta)."""
        nll = models.neg_log_likelihood(self.model, theta, self.data)
        return -self.cum_estimate_log - nll

    def _per_step_divergence(self, theta, estimate, obs, variant: TemperedVariant):
        theta = np.asarray(theta, dtype=float)
        x = np.asarray(obs.covariate, dtype=float)
        if self.model.kind is ModelKind.GAUSSIAN_LINEAR:
            sigma = obs.noise_std if obs.noise_std is not None else self.model.noise_std
            m1, m2 = float(theta @ x), float(estimate @ x)
            if variant is TemperedVariant.RENYI:
                return renyi_gaussian(m1, m2, sigma, 1.0 - self.beta)
            return hellinger_sq_gaussian(m1, m2, sigma)
        if self.model.kind is ModelKind.LOGISTIC_BERNOULLI:
            p = float(sigmoid(theta @ x))
            q = float(sigmoid(estimate @ x))
            if variant is TemperedVariant.RENYI:
                return renyi_bernoulli(p, q, 1.0 - self.beta)
            return hellinger_sq_bernoulli(p, q)
        raise ValueError("tempered divergences support Gaussian and logistic models")

    def divergence_sum(self, theta, variant: TemperedVariant) -> float:
        """sum_s D_{1-beta,s}(theta || theta_hat_{s-1}) or sum_s H^2_s."""
        return sum(
            self._per_step_divergence(theta, est, obs, variant)
            for est, obs in zip(self.estimate_history, self.data)
        )


def tempered_threshold(beta: float, delta: float, variant: TemperedVariant) -> float:
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if variant is TemperedVariant.HELLINGER:
        return 2.0 * math.log(1.0 / delta)
    return math.log(1.0 / delta) / beta


def tempered_membership(
    state: TemperedState, theta, delta: float, variant: TemperedVariant
) -> bool:
    """Evaluate the tempered confidence-set inequality at theta."""
    lhs = state.divergence_sum(theta, variant) - state.log_regret(theta)
    return lhs <= tempered_threshold(state.beta, delta, variant)


@dataclass(frozen=True)
class VAWState:
    """Vovk-Azoury-Warmuth online ridge forecaster state."""

    gram: np.ndarray  # A = lambda I + sum x x^T
    moment: np.ndarray  # b = sum y x
    lam: float

    @classmethod
    def initial(cls, d: int, lam: float) -> "VAWState":
        if lam <= 0:
            raise ValueError("lambda must be positive")
        return cls(lam * np.eye(d), np.zeros(d), float(lam))


def vaw_predict(state: VAWState, x: np.ndarray) -> float:
    """y_hat = x^T (A + x x^T)^{-1} b; the current x enters the gram matrix."""
    x = np.asarray(x, dtype=float)
    return float(x @ np.linalg.solve(state.gram + np.outer(x, x), state.moment))


def vaw_update(state: VAWState, obs: Observation) -> VAWState:
    x = np.asarray(obs.covariate, dtype=float)
    return VAWState(
        state.gram + np.outer(x, x), state.moment + obs.outcome * x, state.lam
    )


def online_to_confidence_threshold(delta: float, b_t: float, beta: float = 0.5) -> float:
    """Right-hand side of the online-to-confidence-set conversion.

    With beta = 1/2 this is 4 log(1/delta) + 2 B_t.
    """
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    if b_t < 0:
        raise ValueError("regret certificate must be nonnegative")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    coef = beta - beta * beta
    return math.log(1.0 / delta) / coef + beta * b_t / coef


def online_to_confidence_membership(
    predictions, data, theta, b_t: float, beta: float, delta: float
) -> bool:
    """sum_s 1/2 (y_hat_{s-1} - <theta, x_s>)^2 <= threshold(delta, B_t, beta)."""
    theta = np.asarray(theta, dtype=float)
    lhs = 0.0
    for y_hat, obs in zip(predictions, data):
        lhs += 0.5 * (y_hat - float(theta @ obs.covariate)) ** 2
    return lhs <= online_to_confidence_threshold(delta, b_t, beta)


def prior_work_online_to_confidence_threshold(delta: float, b_t: float) -> float:
    """The earlier online-to-confidence constant, for numeric comparison:
    16 log(1/delta) + 1/2 + 2 B_t + 16 log(sqrt(8) + sqrt(1 + 2 B_t))."""
    return (
        16.0 * math.log(1.0 / delta)
        + 0.5
        + 2.0 * b_t
        + 16.0 * math.log(math.sqrt(8.0) + math.sqrt(1.0 + 2.0 * b_t))
    )
