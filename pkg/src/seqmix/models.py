"""Likelihood families: conditional log-densities, cumulative negative
log-likelihoods over observation streams, and outcome samplers.

Log-densities are evaluated in a numerically stable form (softplus for the
Bernoulli case), so level-set membership checks stay finite at extreme
logits.  All batch helpers accept an ``(m, d)`` matrix of parameter atoms and
are vectorized over atoms; these back the grid-quadrature evidence and the
bandit's per-atom bookkeeping.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

LOG_2PI = math.log(2.0 * math.pi)


class ModelKind(enum.Enum):
    GAUSSIAN_LINEAR = "gaussian_linear"
    LOGISTIC_BERNOULLI = "logistic_bernoulli"
    FINITE_CATEGORICAL = "finite_categorical"


@dataclass(frozen=True)
class ModelFamily:
    """A parametric family of conditional outcome densities.

    ``noise_std`` is only meaningful for the Gaussian-linear family (a
    per-observation override can be attached to each ``Observation`` for the
    heteroscedastic variant).  For the finite-categorical family the outcome
    alphabet is ``{0, ..., dimension-1}`` and the class probabilities are
    ``softmax(theta)``; the covariate is carried but does not enter the
    density.
    """

    kind: ModelKind
    dimension: int
    noise_std: float = 1.0

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be a positive integer")
        if self.kind is ModelKind.GAUSSIAN_LINEAR and self.noise_std <= 0:
            raise ValueError("noise_std must be > 0 for the Gaussian family")


def gaussian_linear(dimension: int, noise_std: float = 1.0) -> ModelFamily:
    return ModelFamily(ModelKind.GAUSSIAN_LINEAR, dimension, noise_std)


def logistic_bernoulli(dimension: int) -> ModelFamily:
    return ModelFamily(ModelKind.LOGISTIC_BERNOULLI, dimension)


def finite_categorical(dimension: int) -> ModelFamily:
    return ModelFamily(ModelKind.FINITE_CATEGORICAL, dimension)


@dataclass(frozen=True)
class Observation:
    """One (covariate, outcome) pair; ``noise_std`` overrides the model's
    sigma for heteroscedastic Gaussian streams."""

    covariate: np.ndarray
    outcome: float
    noise_std: float | None = None

    def __post_init__(self):
        object.__setattr__(
            self, "covariate", np.asarray(self.covariate, dtype=float)
        )


def _check_obs(model: ModelFamily, obs: Observation) -> None:
    if obs.covariate.shape != (model.dimension,):
        raise ValueError(
            f"covariate length {obs.covariate.shape} does not match model "
            f"dimension {model.dimension}"
        )
    if model.kind is ModelKind.LOGISTIC_BERNOULLI and obs.outcome not in (0.0, 1.0):
        raise ValueError(f"Bernoulli outcome must be 0 or 1, got {obs.outcome}")
    if model.kind is ModelKind.FINITE_CATEGORICAL:
        k = int(obs.outcome)
        if k != obs.outcome or not 0 <= k < model.dimension:
            raise ValueError(f"categorical outcome out of alphabet: {obs.outcome}")


def softplus(z):
    """log(1 + exp(z)), stable for large |z|."""
    z = np.asarray(z, dtype=float)
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


def sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _obs_sigma(model: ModelFamily, obs: Observation) -> float:
    sigma = obs.noise_std if obs.noise_std is not None else model.noise_std
    if sigma <= 0:
        raise ValueError("noise_std must be > 0")
    return sigma


def log_density(model: ModelFamily, theta: np.ndarray, obs: Observation) -> float:
    """log p(y | theta; x) for a single observation."""
    theta = np.asarray(theta, dtype=float)
    _check_obs(model, obs)
    if theta.shape != (model.dimension,):
        raise ValueError("theta length does not match model dimension")
    if model.kind is ModelKind.GAUSSIAN_LINEAR:
        sigma = _obs_sigma(model, obs)
        resid = obs.outcome - float(theta @ obs.covariate)
        return -0.5 * LOG_2PI - math.log(sigma) - resid * resid / (2.0 * sigma * sigma)
    if model.kind is ModelKind.LOGISTIC_BERNOULLI:
        z = float(theta @ obs.covariate)
        # log sigma(z) = -softplus(-z); log(1 - sigma(z)) = -softplus(z)
        return float(-softplus(-z) if obs.outcome == 1.0 else -softplus(z))
    # finite categorical: class probabilities are softmax(theta)
    logits = theta - np.max(theta)
    return float(logits[int(obs.outcome)] - np.log(np.sum(np.exp(logits))))


def log_density_grid(
    model: ModelFamily, thetas: np.ndarray, obs: Observation
) -> np.ndarray:
    """Vectorized ``log_density`` over an ``(m, d)`` matrix of atoms."""
    thetas = np.asarray(thetas, dtype=float)
    _check_obs(model, obs)
    if model.kind is ModelKind.GAUSSIAN_LINEAR:
        sigma = _obs_sigma(model, obs)
        resid = obs.outcome - thetas @ obs.covariate
        return -0.5 * LOG_2PI - math.log(sigma) - resid**2 / (2.0 * sigma**2)
    if model.kind is ModelKind.LOGISTIC_BERNOULLI:
        z = thetas @ obs.covariate
        return -softplus(-z) if obs.outcome == 1.0 else -softplus(z)
    shifted = thetas - thetas.max(axis=1, keepdims=True)
    return shifted[:, int(obs.outcome)] - np.log(
        np.sum(np.exp(shifted), axis=1)
    )


def neg_log_likelihood(model, theta, data) -> float:
    """L_t(theta) = -sum_s log p_s(y_s | theta); 0 on empty data."""
    return -sum(log_density(model, theta, obs) for obs in data)


def neg_log_likelihood_grid(model, thetas, data) -> np.ndarray:
    """Per-atom cumulative negative log-likelihood, vectorized over atoms."""
    thetas = np.asarray(thetas, dtype=float)
    total = np.zeros(thetas.shape[0])
    for obs in data:
        total -= log_density_grid(model, thetas, obs)
    return total


def sample_outcome(
    model: ModelFamily,
    theta: np.ndarray,
    covariate: np.ndarray,
    rng: np.random.Generator,
) -> float:
    """Draw one outcome from p(. | theta; x)."""
    theta = np.asarray(theta, dtype=float)
    covariate = np.asarray(covariate, dtype=float)
    if covariate.shape != (model.dimension,):
        raise ValueError("covariate length does not match model dimension")
    if model.kind is ModelKind.GAUSSIAN_LINEAR:
        return float(theta @ covariate) + model.noise_std * rng.standard_normal()
    if model.kind is ModelKind.LOGISTIC_BERNOULLI:
        p = float(sigmoid(theta @ covariate))
        return float(rng.random() < p)
    logits = theta - np.max(theta)
    probs = np.exp(logits) / np.sum(np.exp(logits))
    return float(rng.choice(model.dimension, p=probs))
