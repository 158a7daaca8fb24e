"""Marginal likelihood (Bayesian evidence): grid quadrature, the exact
Gaussian closed form, the evidence lower bound, and KL divergences."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from . import models
from .mixing import (
    FiniteWeights,
    GaussianMixing,
    GaussianPosteriorState,
    MixingDistribution,
    gaussian_conjugate_update,
    predictive_log_mixture,
)
from .models import ModelFamily, ModelKind
from .spaces import ParameterSpace


class EvidenceMethod(enum.Enum):
    GRID_QUADRATURE = "grid_quadrature"
    GAUSSIAN_CLOSED_FORM = "gaussian_closed_form"
    LAPLACE_APPROX = "laplace_approx"
    ELBO_LOWER_BOUND = "elbo_lower_bound"


@dataclass(frozen=True)
class EvidenceResult:
    log_evidence: float
    method: EvidenceMethod
    is_lower_bound: bool
    resolution: int | None = None  # atom count for grid quadrature

    def __post_init__(self):
        if self.is_lower_bound != (self.method is EvidenceMethod.ELBO_LOWER_BOUND):
            raise ValueError("is_lower_bound is reserved for the ELBO method")


def grid_log_evidence(model: ModelFamily, data, space: ParameterSpace) -> EvidenceResult:
    """log-sum-exp over atoms of (-L_t(atom) + log_prior(atom))."""
    nll = models.neg_log_likelihood_grid(model, space.atoms, data)
    value = float(logsumexp(space.log_prior - nll))
    return EvidenceResult(value, EvidenceMethod.GRID_QUADRATURE, False, space.size)


def gaussian_log_evidence(data, prior_state: GaussianPosteriorState) -> EvidenceResult:
    """Exact Gaussian-linear evidence, accumulated through conjugate
    one-step predictives (mixing-equivalence form)."""
    model = models.gaussian_linear(prior_state.dimension, prior_state.noise_std)
    state = prior_state
    total = 0.0
    for obs in data:
        total += predictive_log_mixture(state.as_mixing(), model, obs)
        state = gaussian_conjugate_update(state, obs)
    return EvidenceResult(total, EvidenceMethod.GAUSSIAN_CLOSED_FORM, False)


def kl_divergence(rho: MixingDistribution, mu: MixingDistribution) -> float:
    """KL(rho || mu) for two finite mixtures on one atom set, or two Gaussians."""
    if isinstance(rho, FiniteWeights) and isinstance(mu, FiniteWeights):
        if rho.space.atoms.shape != mu.space.atoms.shape or not np.array_equal(
            rho.space.atoms, mu.space.atoms
        ):
            raise ValueError("finite KL requires a shared atom set")
        lr, lm = rho.log_weights, mu.log_weights
        if np.any((lm == -np.inf) & (lr > -np.inf)):
            raise ValueError("rho is not absolutely continuous w.r.t. mu")
        active = lr > -np.inf
        return float(np.sum(np.exp(lr[active]) * (lr[active] - lm[active])))
    if isinstance(rho, GaussianMixing) and isinstance(mu, GaussianMixing):
        d = len(rho.mean)
        cov_rho = np.linalg.inv(rho.precision)
        diff = mu.mean - rho.mean
        trace = float(np.trace(mu.precision @ cov_rho))
        quad = float(diff @ mu.precision @ diff)
        _, logdet_rho = np.linalg.slogdet(rho.precision)
        _, logdet_mu = np.linalg.slogdet(mu.precision)
        return 0.5 * (trace + quad - d + logdet_rho - logdet_mu)
    raise ValueError("kl_divergence needs two finite mixtures or two Gaussians")


def elbo(
    rho: MixingDistribution, model: ModelFamily, data, space: ParameterSpace
) -> EvidenceResult:
    """Evidence lower bound -int L_t drho - KL(rho || prior).

    The KL term is taken against the space's raw prior weights (which may be
    a sub-probability measure), so the bound is tight at the Bayes posterior.
    """
    if isinstance(rho, FiniteWeights):
        if not np.array_equal(rho.space.atoms, space.atoms):
            raise ValueError("rho must live on the same atom set as the space")
        lr = rho.log_weights
        if np.any((space.log_prior == -np.inf) & (lr > -np.inf)):
            raise ValueError("rho puts weight on a zero-prior atom")
        nll = models.neg_log_likelihood_grid(model, space.atoms, data)
        active = lr > -np.inf
        w = np.exp(lr[active])
        value = float(
            np.sum(w * (-nll[active] - lr[active] + space.log_prior[active]))
        )
        return EvidenceResult(value, EvidenceMethod.ELBO_LOWER_BOUND, True)
    if isinstance(rho, GaussianMixing):
        raise ValueError(
            "Gaussian ELBO requires a Gaussian prior state; use "
            "gaussian_elbo instead"
        )
    raise ValueError("rho must be FiniteWeights (or Gaussian with Gaussian prior)")


def gaussian_elbo(
    rho: GaussianMixing, prior_state: GaussianPosteriorState, data
) -> EvidenceResult:
    """ELBO for a Gaussian variational family under the Gaussian-linear model."""
    model = models.gaussian_linear(prior_state.dimension, prior_state.noise_std)
    cov = np.linalg.inv(rho.precision)
    expected_nll = 0.0
    for obs in data:
        x = np.asarray(obs.covariate, dtype=float)
        sigma = obs.noise_std if obs.noise_std is not None else model.noise_std
        resid = obs.outcome - float(rho.mean @ x)
        expected_nll += (
            0.5 * math.log(2 * math.pi * sigma**2)
            + (resid**2 + float(x @ cov @ x)) / (2 * sigma**2)
        )
    prior = GaussianMixing(prior_state.prior_mean, prior_state.prior_precision)
    value = -expected_nll - kl_divergence(rho, prior)
    return EvidenceResult(value, EvidenceMethod.ELBO_LOWER_BOUND, True)
