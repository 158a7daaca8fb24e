"""Confidence-sequence state machines and set representations.

A tracker accumulates the cumulative predictive log term of one of the
martingale constructions (sequential likelihood ratio, sequential mixing,
sub-Gaussian pseudo-likelihood).  The step API consumes the mixing
distribution and the observation in one call, which structurally enforces
the predictability contract: mu_{s-1} is fixed before y_s is seen.

Confidence sets are lazy membership predicates over the negative
log-likelihood; the Gaussian RLS case has an explicit ellipsoid form.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import logsumexp

from . import models
from .evidence import gaussian_log_evidence, grid_log_evidence
from .mixing import (
    Dirac,
    FiniteWeights,
    GaussianMixing,
    GaussianPosteriorState,
    MixingDistribution,
    Particles,
    predictive_log_mixture,
)
from .models import ModelFamily, ModelKind, Observation
from .spaces import ParameterSpace


class TrackerKind(enum.Enum):
    SEQ_LIKELIHOOD_RATIO = "seq_likelihood_ratio"
    SEQ_MIXING = "seq_mixing"
    SUB_GAUSSIAN = "sub_gaussian"


class Construction(enum.Enum):
    SEQ_LIKELIHOOD_RATIO = "seq_likelihood_ratio"
    SEQ_MIXING = "seq_mixing"
    PRIOR_MIXING = "prior_mixing"
    PRIOR_POSTERIOR_RATIO = "prior_posterior_ratio"
    ELBO = "elbo"
    UNION_BOUND = "union_bound"
    REGRET_TO_CONFIDENCE = "regret_to_confidence"
    RLS_ELLIPSOID = "rls_ellipsoid"
    SUB_GAUSSIAN = "sub_gaussian"


@dataclass(frozen=True)
class MartingaleTracker:
    """Scalar state of a sequential mixing martingale."""

    kind: TrackerKind
    model: ModelFamily
    cum_predictive_log: float = 0.0
    step_count: int = 0
    noise_std: float | None = None  # sub-Gaussian scale, SubGaussian kind only

    def __post_init__(self):
        if self.kind is TrackerKind.SUB_GAUSSIAN:
            if self.noise_std is None or self.noise_std <= 0:
                raise ValueError("sub-Gaussian tracker needs a positive sigma")


def new_tracker(
    kind: TrackerKind, model: ModelFamily, noise_std: float | None = None
) -> MartingaleTracker:
    return MartingaleTracker(kind, model, 0.0, 0, noise_std)


def _subgaussian_step_term(
    tracker: MartingaleTracker, mixing: MixingDistribution, obs: Observation
) -> float:
    """log integral exp(-(f_nu(x) - y)^2 / 2 sigma^2) dmu(nu).

    The Gaussian normalizing constant cancels between numerator and
    denominator of the pseudo-likelihood ratio, so it is omitted here and in
    the matching membership rule.
    """
    sigma = tracker.noise_std
    x = np.asarray(obs.covariate, dtype=float)
    if isinstance(mixing, Dirac):
        resid = obs.outcome - float(mixing.atom @ x)
        return -resid * resid / (2.0 * sigma**2)
    if isinstance(mixing, (FiniteWeights, Particles)):
        atoms = mixing.atoms if isinstance(mixing, Particles) else mixing.space.atoms
        resid = obs.outcome - atoms @ x
        terms = -(resid**2) / (2.0 * sigma**2)
        if isinstance(mixing, FiniteWeights):
            return float(logsumexp(mixing.log_weights + terms))
        return float(logsumexp(terms) - math.log(atoms.shape[0]))
    if isinstance(mixing, GaussianMixing):
        # Gaussian mixing: the integral is a scaled predictive density.
        var = sigma**2 + float(x @ np.linalg.solve(mixing.precision, x))
        resid = obs.outcome - float(mixing.mean @ x)
        return 0.5 * math.log(sigma**2 / var) - resid * resid / (2.0 * var)
    raise TypeError(f"unsupported mixing distribution: {type(mixing)!r}")


def tracker_step(
    tracker: MartingaleTracker, mixing: MixingDistribution, obs: Observation
) -> MartingaleTracker:
    """Consume one observation under a predictable mixing distribution."""
    if tracker.kind is TrackerKind.SUB_GAUSSIAN:
        term = _subgaussian_step_term(tracker, mixing, obs)
    else:
        if tracker.kind is TrackerKind.SEQ_LIKELIHOOD_RATIO and not isinstance(
            mixing, Dirac
        ):
            raise ValueError("sequential likelihood ratio steps need a Dirac estimate")
        term = predictive_log_mixture(mixing, tracker.model, obs)
    if term == -np.inf or not np.isfinite(term):
        raise ValueError(
            "observation impossible under the whole mixture; realizability is void"
        )
    return replace(
        tracker,
        cum_predictive_log=tracker.cum_predictive_log + term,
        step_count=tracker.step_count + 1,
    )


def threshold(tracker: MartingaleTracker, delta: float) -> float:
    """beta_t(delta) = log(1/delta) - cumulative predictive log."""
    if not 0.0 < delta <= 1.0:
        raise ValueError("delta must lie in (0, 1]")
    return math.log(1.0 / delta) - tracker.cum_predictive_log


@dataclass(frozen=True)
class ConfidenceSet:
    """Level set {theta : L_t(theta) <= beta_t(delta)} with inclusive boundary."""

    model: ModelFamily
    data: tuple
    beta: float
    delta: float
    construction: Construction

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        object.__setattr__(self, "data", tuple(self.data))

    def contains(self, theta) -> bool:
        return models.neg_log_likelihood(self.model, theta, self.data) <= self.beta

    def contains_grid(self, thetas: np.ndarray) -> np.ndarray:
        nll = models.neg_log_likelihood_grid(self.model, thetas, self.data)
        return nll <= self.beta


def set_from_tracker(
    tracker: MartingaleTracker, data, delta: float, construction: Construction
) -> ConfidenceSet:
    return ConfidenceSet(tracker.model, tuple(data), threshold(tracker, delta), delta, construction)


def prior_mixing_set(
    model: ModelFamily, data, space: ParameterSpace, delta: float
) -> ConfidenceSet:
    """Set with beta_t(delta) = log(1/delta) - log marginal likelihood."""
    data = tuple(data)
    ev = grid_log_evidence(model, data, space)
    beta = math.log(1.0 / delta) - ev.log_evidence
    return ConfidenceSet(model, data, beta, delta, Construction.PRIOR_MIXING)


def prior_mixing_set_gaussian(
    data, prior_state: GaussianPosteriorState, delta: float
) -> ConfidenceSet:
    data = tuple(data)
    model = models.gaussian_linear(prior_state.dimension, prior_state.noise_std)
    ev = gaussian_log_evidence(data, prior_state)
    beta = math.log(1.0 / delta) - ev.log_evidence
    return ConfidenceSet(model, data, beta, delta, Construction.PRIOR_MIXING)


def prior_posterior_ratio_membership(
    log_prior: np.ndarray, log_posterior: np.ndarray, atom_index: int, delta: float
) -> bool:
    """true iff -log mu_t(theta) <= log(1/delta) - log mu_0(theta).

    Zero-prior atoms are outside Theta = supp(mu_0) and may not be queried.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    lp = float(log_prior[atom_index])
    if lp == -np.inf:
        raise ValueError("queried atom has zero prior mass (outside the support)")
    return -float(log_posterior[atom_index]) <= math.log(1.0 / delta) - lp


def union_bound_threshold(m: int, delta: float, nll_at_estimate: float) -> float:
    """beta for the finite union-bound set: log(m/delta) + L_t(theta_hat)."""
    if m < 1:
        raise ValueError("m must be at least 1")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    return math.log(m / delta) + nll_at_estimate


def regret_to_confidence_threshold(delta: float, nll_mle: float, b_t: float) -> float:
    """beta = log(1/delta) + L_t(MLE) + B_t for a regret certificate B_t >= 0."""
    if b_t < 0:
        raise ValueError("regret certificate must be nonnegative")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    return math.log(1.0 / delta) + nll_mle + b_t


class EllipsoidForm(enum.Enum):
    EXACT = "exact"
    BALL_RELAXED = "ball_relaxed"


@dataclass(frozen=True)
class GaussianEllipsoidSet:
    """Gaussian RLS confidence ellipsoid.

    Exact form:  1/2 ||theta - center||_V^2 <= base + 1/2 ||theta - theta_0||_{V_0}^2
    Relaxed form (V_0 = lambda I, theta_0 = 0, ||theta|| <= S):
                 1/2 ||theta - center||_V^2 <= radius_sq (a single scalar).
    """

    center: np.ndarray
    precision: np.ndarray
    form: EllipsoidForm
    base: float
    prior_mean: np.ndarray | None = None
    prior_precision: np.ndarray | None = None
    info_gain: float = 0.0  # gamma_t = 1/2 log det V_t - 1/2 log det V_0

    def contains(self, theta) -> bool:
        theta = np.asarray(theta, dtype=float)
        diff = theta - self.center
        lhs = 0.5 * float(diff @ self.precision @ diff)
        rhs = self.base
        if self.form is EllipsoidForm.EXACT:
            pd = theta - self.prior_mean
            rhs += 0.5 * float(pd @ self.prior_precision @ pd)
        return lhs <= rhs

    def contains_grid(self, thetas: np.ndarray) -> np.ndarray:
        thetas = np.asarray(thetas, dtype=float)
        diff = thetas - self.center
        lhs = 0.5 * np.einsum("ij,jk,ik->i", diff, self.precision, diff)
        rhs = self.base
        if self.form is EllipsoidForm.EXACT:
            pd = thetas - self.prior_mean
            rhs = rhs + 0.5 * np.einsum(
                "ij,jk,ik->i", pd, self.prior_precision, pd
            )
        return lhs <= rhs

    @property
    def radius_sq(self) -> float:
        if self.form is not EllipsoidForm.BALL_RELAXED:
            raise ValueError("scalar radius only defined for the relaxed form")
        return self.base


def rls_ellipsoid(
    state: GaussianPosteriorState,
    delta: float,
    form: EllipsoidForm = EllipsoidForm.EXACT,
    S: float | None = None,
) -> GaussianEllipsoidSet:
    """Confidence ellipsoid from the Gaussian conjugate posterior."""
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    sign, logdet_t = np.linalg.slogdet(state.precision)
    gamma = 0.5 * logdet_t - 0.5 * state.log_det_prior_precision
    if form is EllipsoidForm.EXACT:
        base = math.log(1.0 / delta) + gamma
        return GaussianEllipsoidSet(
            state.mean,
            state.precision,
            form,
            base,
            state.prior_mean,
            state.prior_precision,
            gamma,
        )
    if S is None or S <= 0:
        raise ValueError("ball-relaxed form needs a positive norm bound S")
    d = state.dimension
    diag = np.diag(state.prior_precision)
    lam = float(diag[0])
    if not (
        np.allclose(state.prior_precision, lam * np.eye(d))
        and np.allclose(state.prior_mean, 0.0)
    ):
        raise ValueError("ball-relaxed form requires V_0 = lambda I and theta_0 = 0")
    base = math.log(1.0 / delta) + 0.5 * logdet_t - 0.5 * d * math.log(lam) + 0.5 * lam * S**2
    return GaussianEllipsoidSet(
        state.mean, state.precision, form, base, None, None, gamma
    )
