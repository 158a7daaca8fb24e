"""Mixing-distribution representations and their update rules.

Covers the finite Bayes / exponential-weights update, the Gaussian conjugate
(regularized least squares) posterior, Laplace approximation of a
ball-constrained posterior, and Dirac / particle mixtures.  All weight
arithmetic is carried in log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from . import models
from .models import ModelFamily, ModelKind, Observation, sigmoid
from .spaces import ParameterSpace, ball_volume

LOG_2PI = math.log(2.0 * math.pi)


class DegeneratePosteriorError(RuntimeError):
    """Raised when every atom has zero likelihood (weights collapse)."""


@dataclass(frozen=True)
class FiniteWeights:
    """Finite mixing distribution: normalized log weights over a space's atoms."""

    space: ParameterSpace
    log_weights: np.ndarray

    def __post_init__(self):
        lw = np.asarray(self.log_weights, dtype=float)
        object.__setattr__(self, "log_weights", lw)
        if lw.shape != (self.space.size,):
            raise ValueError("log_weights length does not match space")
        if abs(logsumexp(lw)) > 1e-10:
            raise ValueError("log_weights must be normalized")

    @classmethod
    def from_prior(cls, space: ParameterSpace) -> "FiniteWeights":
        lp = space.log_prior - logsumexp(space.log_prior)
        return cls(space, lp)


@dataclass(frozen=True)
class GaussianMixing:
    mean: np.ndarray
    precision: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float))
        object.__setattr__(self, "precision", np.asarray(self.precision, dtype=float))
        np.linalg.cholesky(self.precision)  # SPD check


@dataclass(frozen=True)
class Dirac:
    atom: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "atom", np.asarray(self.atom, dtype=float))


@dataclass(frozen=True)
class Particles:
    """Equal-weight particle mixture (externally produced samples)."""

    atoms: np.ndarray  # (N, d)

    def __post_init__(self):
        atoms = np.atleast_2d(np.asarray(self.atoms, dtype=float))
        object.__setattr__(self, "atoms", atoms)
        if atoms.shape[0] < 1:
            raise ValueError("need at least one particle")


MixingDistribution = FiniteWeights | GaussianMixing | Dirac | Particles


@dataclass(frozen=True)
class GaussianPosteriorState:
    """Conjugate Gaussian posterior N(mean, precision^-1) for the linear model."""

    mean: np.ndarray
    precision: np.ndarray
    prior_mean: np.ndarray
    prior_precision: np.ndarray
    noise_std: float
    log_det_prior_precision: float

    @classmethod
    def from_prior(
        cls, prior_mean, prior_precision, noise_std: float
    ) -> "GaussianPosteriorState":
        mean = np.asarray(prior_mean, dtype=float)
        prec = np.asarray(prior_precision, dtype=float)
        np.linalg.cholesky(prec)
        sign, logdet = np.linalg.slogdet(prec)
        return cls(mean.copy(), prec.copy(), mean, prec, float(noise_std), logdet)

    @property
    def dimension(self) -> int:
        return len(self.mean)

    def as_mixing(self) -> GaussianMixing:
        return GaussianMixing(self.mean, self.precision)


def ew_update(
    weights: FiniteWeights, step_log_densities: np.ndarray, eta: float = 1.0
) -> FiniteWeights:
    """Exponential-weights update; eta = 1 is exactly the Bayes update."""
    if not 0.0 < eta <= 1.0:
        raise ValueError("eta must lie in (0, 1]")
    step = np.asarray(step_log_densities, dtype=float)
    if step.shape != weights.log_weights.shape:
        raise ValueError("step_log_densities length mismatch")
    lw = weights.log_weights + eta * step
    norm = logsumexp(lw)
    if not np.isfinite(norm):
        raise DegeneratePosteriorError("all posterior weights are zero")
    return FiniteWeights(weights.space, lw - norm)


def gaussian_conjugate_update(
    state: GaussianPosteriorState, obs: Observation
) -> GaussianPosteriorState:
    """One RLS step: V_t = V_{t-1} + x x^T / sigma^2, mean via normal equations."""
    x = np.asarray(obs.covariate, dtype=float)
    if x.shape != (state.dimension,):
        raise ValueError("observation dimension mismatch")
    sigma = obs.noise_std if obs.noise_std is not None else state.noise_std
    precision = state.precision + np.outer(x, x) / sigma**2
    rhs = state.precision @ state.mean + x * (obs.outcome / sigma**2)
    mean = np.linalg.solve(precision, rhs)
    return GaussianPosteriorState(
        mean,
        precision,
        state.prior_mean,
        state.prior_precision,
        state.noise_std,
        state.log_det_prior_precision,
    )


def _logistic_grad_hess(thetas_theta, data, model):
    theta = thetas_theta
    grad = np.zeros_like(theta)
    hess = np.zeros((len(theta), len(theta)))
    for obs in data:
        x = obs.covariate
        p = float(sigmoid(theta @ x))
        grad += (p - obs.outcome) * x
        hess += p * (1.0 - p) * np.outer(x, x)
    return grad, hess


def _gaussian_grad_hess(theta, data, model):
    grad = np.zeros_like(theta)
    hess = np.zeros((len(theta), len(theta)))
    for obs in data:
        x = obs.covariate
        sigma = obs.noise_std if obs.noise_std is not None else model.noise_std
        resid = float(theta @ x) - obs.outcome
        grad += resid * x / sigma**2
        hess += np.outer(x, x) / sigma**2
    return grad, hess


def nll_grad_hess(model: ModelFamily, theta, data):
    """Gradient and Hessian of L_t at theta (Gaussian or logistic)."""
    theta = np.asarray(theta, dtype=float)
    if model.kind is ModelKind.LOGISTIC_BERNOULLI:
        return _logistic_grad_hess(theta, data, model)
    if model.kind is ModelKind.GAUSSIAN_LINEAR:
        return _gaussian_grad_hess(theta, data, model)
    raise ValueError("gradients available for Gaussian and logistic models only")


def _project_ball(theta: np.ndarray, S: float) -> np.ndarray:
    norm = np.linalg.norm(theta)
    return theta if norm <= S else theta * (S / norm)


def constrained_map(
    model: ModelFamily,
    data,
    S: float,
    x0: np.ndarray | None = None,
    grad_tol: float = 1e-10,
    max_iter: int = 100,
):
    """argmin of L_t over the ball B(0, S) by damped projected Newton.

    Returns (theta, kkt_residual).  The KKT residual is the norm of the
    gradient with the outward boundary component removed.
    """
    d = model.dimension
    theta = np.zeros(d) if x0 is None else _project_ball(np.asarray(x0, float), S)
    value = models.neg_log_likelihood(model, theta, data)
    for _ in range(max_iter):
        grad, hess = nll_grad_hess(model, theta, data)
        resid = _kkt_residual(grad, theta, S)
        if resid <= grad_tol:
            return theta, resid
        newton = np.linalg.solve(hess + 1e-10 * np.eye(d), -grad)
        # the Newton direction can point outward at a boundary point, in which
        # case projection stalls; fall back to the projected gradient
        moved = False
        for direction in (newton, -grad):
            lr = 1.0
            for _ in range(60):
                cand = _project_ball(theta + lr * direction, S)
                cand_value = models.neg_log_likelihood(model, cand, data)
                if cand_value < value - 1e-15 and not np.array_equal(cand, theta):
                    theta, value = cand, cand_value
                    moved = True
                    break
                lr *= 0.5
            if moved:
                break
        if not moved:
            return theta, resid
    grad, _ = nll_grad_hess(model, theta, data)
    return theta, _kkt_residual(grad, theta, S)


def _kkt_residual(grad: np.ndarray, theta: np.ndarray, S: float) -> float:
    norm = np.linalg.norm(theta)
    if norm < S - 1e-12 or norm == 0.0:
        return float(np.linalg.norm(grad))
    lam = max(0.0, -float(grad @ theta) / (norm * norm))
    return float(np.linalg.norm(grad + lam * theta))


class LaplaceError(RuntimeError):
    """Non-convergent Newton solve or degenerate Hessian."""


def laplace_approximate(model: ModelFamily, data, space: ParameterSpace):
    """MAP, Hessian and Laplace evidence under a uniform prior on B(0, S).

    Returns (map_estimate, precision, log_evidence_estimate).  When the MAP
    touches the boundary the unconstrained Hessian is used (documented
    approximation without a coverage guarantee).
    """
    if space.radius <= 0:
        raise ValueError("space must be a ball (radius > 0)")
    data = list(data)
    if not data:
        raise LaplaceError("degenerate Hessian: no data")
    theta, resid = constrained_map(model, data, space.radius)
    if resid > 1e-6:
        raise LaplaceError(f"Newton did not converge (KKT residual {resid:.2e})")
    _, hess = nll_grad_hess(model, theta, data)
    sign, logdet = np.linalg.slogdet(hess)
    if sign <= 0 or not np.isfinite(logdet):
        raise LaplaceError("indefinite or singular Hessian at the MAP")
    d = model.dimension
    log_evidence = (
        -models.neg_log_likelihood(model, theta, data)
        + 0.5 * d * LOG_2PI
        - 0.5 * logdet
        - math.log(ball_volume(d, space.radius))
    )
    return theta, hess, log_evidence


def predictive_log_mixture(
    mu: MixingDistribution, model: ModelFamily, obs: Observation
) -> float:
    """log of the mixture predictive density, log integral p(y|nu; x) dmu(nu)."""
    if isinstance(mu, Dirac):
        return models.log_density(model, mu.atom, obs)
    if isinstance(mu, FiniteWeights):
        dens = models.log_density_grid(model, mu.space.atoms, obs)
        return float(logsumexp(mu.log_weights + dens))
    if isinstance(mu, Particles):
        dens = models.log_density_grid(model, mu.atoms, obs)
        return float(logsumexp(dens) - math.log(mu.atoms.shape[0]))
    if isinstance(mu, GaussianMixing):
        if model.kind is not ModelKind.GAUSSIAN_LINEAR:
            raise ValueError(
                "Gaussian mixing has a closed form only for the Gaussian-linear "
                "model; use Particles instead"
            )
        x = np.asarray(obs.covariate, dtype=float)
        sigma = obs.noise_std if obs.noise_std is not None else model.noise_std
        var = sigma**2 + float(x @ np.linalg.solve(mu.precision, x))
        resid = obs.outcome - float(mu.mean @ x)
        return -0.5 * (LOG_2PI + math.log(var)) - resid * resid / (2.0 * var)
    raise TypeError(f"unsupported mixing distribution: {type(mu)!r}")
