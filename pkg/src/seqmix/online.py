"""Estimators and regret machinery: batch and running MLE, the
exponential-weights regret audit, and regret-bound certificates."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import logsumexp

from . import models
from .mixing import FiniteWeights, constrained_map, ew_update
from .models import ModelFamily, ModelKind
from .spaces import ParameterSpace


class CertificateKind(enum.Enum):
    LOGISTIC_FOSTER = "logistic_foster"
    FINITE_EW = "finite_ew"
    SPARSE_SHAPE = "sparse_shape"
    USER_CONSTANT = "user_constant"
    EMPIRICAL = "empirical"


@dataclass(frozen=True)
class RegretCertificate:
    """A predictable bound B_t >= 0 on the log-regret, with provenance."""

    kind: CertificateKind
    value_at: Callable[[int], float]
    label: str = ""

    def __call__(self, t: int) -> float:
        value = self.value_at(t)
        if value < 0:
            raise ValueError("regret certificate must be nonnegative")
        return value


def logistic_regret_certificate(d: int, S: float) -> RegretCertificate:
    """B_t = 10 d log(e + S t / (2d)) for ball-constrained logistic regression."""
    if d < 1 or S <= 0:
        raise ValueError("need d >= 1 and S > 0")
    return RegretCertificate(
        CertificateKind.LOGISTIC_FOSTER,
        lambda t: 10.0 * d * math.log(math.e + S * t / (2.0 * d)),
        f"logistic(d={d}, S={S})",
    )


def finite_ew_certificate(m: int) -> RegretCertificate:
    """B_t = log m for exponential weights with a uniform prior on m atoms."""
    if m < 1:
        raise ValueError("m must be at least 1")
    return RegretCertificate(
        CertificateKind.FINITE_EW, lambda t: math.log(m), f"finite_ew(m={m})"
    )


def sparse_shape_certificate(c0: float, k: int) -> RegretCertificate:
    """B_t = C0 k log t (0 at t <= 1), the sparse online-learning bound shape."""
    if c0 < 0 or k < 1:
        raise ValueError("need C0 >= 0 and k >= 1")
    return RegretCertificate(
        CertificateKind.SPARSE_SHAPE,
        lambda t: c0 * k * math.log(t) if t > 1 else 0.0,
        f"sparse(C0={c0}, k={k})",
    )


def constant_certificate(value: float) -> RegretCertificate:
    if value < 0:
        raise ValueError("certificate constant must be nonnegative")
    return RegretCertificate(
        CertificateKind.USER_CONSTANT, lambda t: value, f"constant({value})"
    )


def mle_fit(model: ModelFamily, data, space: ParameterSpace):
    """Minimizer of L_t over the space.

    Finite spaces (radius 0) use exhaustive argmin with ties broken to the
    lowest atom index.  Ball spaces use the exact ridge solve (Gaussian,
    tiny regularizer for conditioning) or projected damped Newton (logistic).
    Empty data returns the origin / first atom.
    """
    data = list(data)
    if space.radius == 0.0:
        if not data:
            return space.atoms[0].copy()
        nll = models.neg_log_likelihood_grid(model, space.atoms, data)
        return space.atoms[int(np.argmin(nll))].copy()
    d = model.dimension
    if not data:
        return np.zeros(d)
    if model.kind is ModelKind.GAUSSIAN_LINEAR:
        gram = 1e-10 * np.eye(d)
        rhs = np.zeros(d)
        for obs in data:
            sigma = obs.noise_std if obs.noise_std is not None else model.noise_std
            gram += np.outer(obs.covariate, obs.covariate) / sigma**2
            rhs += obs.covariate * (obs.outcome / sigma**2)
        theta = np.linalg.solve(gram, rhs)
        if np.linalg.norm(theta) <= space.radius:
            return theta
        return _ball_constrained_quadratic(gram, rhs, space.radius)
    if model.kind is ModelKind.LOGISTIC_BERNOULLI:
        theta, resid = constrained_map(model, data, space.radius)
        if resid > 1e-6:
            raise RuntimeError(f"Newton did not converge (KKT residual {resid:.2e})")
        return theta
    raise ValueError("mle_fit supports Gaussian, logistic, and finite spaces")


def _ball_constrained_quadratic(gram, rhs, S, tol=1e-12):
    """Minimize 1/2 theta^T G theta - rhs^T theta subject to ||theta|| <= S."""
    lo, hi = 0.0, 1.0
    while np.linalg.norm(np.linalg.solve(gram + hi * np.eye(len(rhs)), rhs)) > S:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        theta = np.linalg.solve(gram + mid * np.eye(len(rhs)), rhs)
        if np.linalg.norm(theta) > S:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol * (1.0 + hi):
            break
    return np.linalg.solve(gram + hi * np.eye(len(rhs)), rhs)


def running_mle_sequence(model: ModelFamily, data, space: ParameterSpace):
    """(theta_hat_0, ..., theta_hat_{t-1}): prefix MLEs, warm-started.

    theta_hat_0 is the data-free prior estimate (origin / first atom);
    theta_hat_s depends only on the first s observations.
    """
    data = list(data)
    estimates = [mle_fit(model, [], space)]
    if space.radius == 0.0:
        # incremental per-atom NLL, prefix argmin
        nll = np.zeros(space.size)
        for obs in data[:-1]:
            nll -= models.log_density_grid(model, space.atoms, obs)
            estimates.append(space.atoms[int(np.argmin(nll))].copy())
        return estimates
    current = estimates[0]
    for s in range(1, len(data)):
        prefix = data[:s]
        if model.kind is ModelKind.LOGISTIC_BERNOULLI:
            current, resid = constrained_map(model, prefix, space.radius, x0=current)
            if resid > 1e-6:
                raise RuntimeError("Newton did not converge in running MLE")
            estimates.append(current.copy())
        else:
            estimates.append(mle_fit(model, prefix, space))
    return estimates


def logistic_ball_fit(
    X: np.ndarray,
    y: np.ndarray,
    S: float,
    x0: np.ndarray | None = None,
    grad_tol: float = 1e-9,
    max_iter: int = 100,
):
    """Array-form ball-constrained logistic MLE (vectorized over observations).

    Same damped projected Newton as ``mixing.constrained_map`` but takes a
    design matrix directly; used in loops where Observation lists would be
    too slow.  Returns (theta, kkt_residual).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    d = X.shape[1]
    theta = np.zeros(d) if x0 is None else np.asarray(x0, dtype=float).copy()
    if np.linalg.norm(theta) > S:
        theta *= S / np.linalg.norm(theta)

    def value(th):
        z = X @ th
        # sum softplus(z) - y*z  equals the logistic NLL
        return float(np.sum(np.maximum(z, 0) + np.log1p(np.exp(-np.abs(z))) - y * z))

    def grad_hess(th):
        z = X @ th
        p = models.sigmoid(z)
        g = X.T @ (p - y)
        w = p * (1.0 - p)
        h = (X * w[:, None]).T @ X
        return g, h

    def kkt(g, th):
        norm = np.linalg.norm(th)
        if norm < S - 1e-12 or norm == 0.0:
            return float(np.linalg.norm(g))
        lam = max(0.0, -float(g @ th) / (norm * norm))
        return float(np.linalg.norm(g + lam * th))

    val = value(theta)
    for _ in range(max_iter):
        g, h = grad_hess(theta)
        resid = kkt(g, theta)
        if resid <= grad_tol:
            return theta, resid
        newton = np.linalg.solve(h + 1e-10 * np.eye(d), -g)
        # fall back to the projected gradient when the Newton direction points
        # outward at a boundary point and projection stalls
        moved = False
        for direction in (newton, -g):
            lr = 1.0
            for _ in range(60):
                cand = theta + lr * direction
                norm = np.linalg.norm(cand)
                if norm > S:
                    cand = cand * (S / norm)
                cand_val = value(cand)
                if cand_val < val - 1e-15 and not np.array_equal(cand, theta):
                    theta, val = cand, cand_val
                    moved = True
                    break
                lr *= 0.5
            if moved:
                break
        if not moved:
            return theta, resid
    g, _ = grad_hess(theta)
    return theta, kkt(g, theta)


def ew_regret_audit(
    space: ParameterSpace, data, model: ModelFamily, eta: float = 1.0
):
    """Realized exponential-weights log regret and its bound log m.

    Returns (lambda_t, bound) where lambda_t = sum_s l_s(mu_{s-1}) - min_theta
    L_t(theta) under the Bayes/EW posteriors started from the space's prior.
    """
    if space.radius != 0.0:
        raise ValueError("regret audit requires a finite space")
    weights = FiniteWeights.from_prior(space)
    cum_loss = 0.0
    nll = np.zeros(space.size)
    for obs in data:
        dens = models.log_density_grid(model, space.atoms, obs)
        cum_loss -= float(logsumexp(weights.log_weights + dens))
        weights = ew_update(weights, dens, eta)
        nll -= dens
    lambda_t = cum_loss - float(np.min(nll))
    return lambda_t, math.log(space.size)
