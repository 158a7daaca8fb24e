"""Parameter spaces and priors.

A ``ParameterSpace`` is always a finite list of atoms with log prior weights.
Continuous priors are represented through grids (d <= 3): the weights fold
the quadrature cell volume into the prior density, so log-sum-exp over
``-L_t(atom) + log_prior`` is a Riemann approximation of the marginal
likelihood.  Sub-probability priors (total mass < 1) are permitted; Ville's
inequality only needs E[Q_1] <= 1.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

_BALL_VOLUME_COEF = {1: 2.0, 2: math.pi, 3: 4.0 * math.pi / 3.0}


def ball_volume(d: int, radius: float) -> float:
    if d not in _BALL_VOLUME_COEF:
        raise ValueError("ball volume supported for d in {1, 2, 3}")
    return _BALL_VOLUME_COEF[d] * radius**d


@dataclass(frozen=True)
class ParameterSpace:
    """Finite atom set (or discretized ball) with log prior weights."""

    atoms: np.ndarray  # (m, d)
    log_prior: np.ndarray  # (m,)
    radius: float  # 0 for a purely finite set
    dimension: int

    def __post_init__(self):
        object.__setattr__(self, "atoms", np.asarray(self.atoms, dtype=float))
        object.__setattr__(self, "log_prior", np.asarray(self.log_prior, dtype=float))
        if self.atoms.ndim != 2 or self.atoms.shape[0] == 0:
            raise ValueError("atoms must be a nonempty (m, d) array")
        if self.atoms.shape != (len(self.log_prior), self.dimension):
            raise ValueError("atoms/log_prior/dimension shape mismatch")
        total = logsumexp(self.log_prior)
        if total > 1e-12:
            raise ValueError(f"prior mass exceeds 1: logsumexp={total}")
        if self.radius > 0:
            norms = np.linalg.norm(self.atoms, axis=1)
            if np.any(norms > self.radius + 1e-12):
                raise ValueError("atom outside the ball of radius S")

    @property
    def size(self) -> int:
        return self.atoms.shape[0]


def make_finite(atoms, prior_weights) -> ParameterSpace:
    """Finite parameter set with normalized prior weights."""
    atoms = np.atleast_2d(np.asarray(atoms, dtype=float))
    weights = np.asarray(prior_weights, dtype=float)
    if atoms.shape[0] == 0:
        raise ValueError("empty atom list")
    if len(weights) != atoms.shape[0]:
        raise ValueError("weights length does not match atoms")
    if np.any(weights <= 0):
        raise ValueError("prior weights must be positive")
    log_prior = np.log(weights) - math.log(weights.sum())
    return ParameterSpace(atoms, log_prior, 0.0, atoms.shape[1])


def ball_grid(d: int, S: float, n_per_axis: int) -> ParameterSpace:
    """Tensor grid on [-S, S]^d restricted to the ball, uniform prior.

    Each atom carries weight cell_volume / vol(B(0, S)) with a full
    (unclipped) cell at the boundary; the total mass is capped at 1 so the
    prior stays a (sub-)probability measure.
    """
    if d not in (1, 2, 3):
        raise ValueError("ball_grid supports d in {1, 2, 3}")
    if S <= 0:
        raise ValueError("S must be positive")
    if n_per_axis < 3:
        raise ValueError("n_per_axis must be at least 3")
    axis = np.linspace(-S, S, n_per_axis)
    atoms = np.array(list(itertools.product(*([axis] * d))))
    atoms = atoms[np.linalg.norm(atoms, axis=1) <= S + 1e-12]
    cell_volume = (2.0 * S / n_per_axis) ** d
    log_w = math.log(cell_volume) - math.log(ball_volume(d, S))
    log_prior = np.full(atoms.shape[0], log_w)
    total = logsumexp(log_prior)
    if total > 0.0:
        log_prior -= total
    return ParameterSpace(atoms, log_prior, float(S), d)


def gaussian_grid(
    d: int,
    half_width: float,
    n_per_axis: int,
    mean: np.ndarray | None = None,
    precision: np.ndarray | None = None,
) -> ParameterSpace:
    """Tensor grid quadrature of a Gaussian prior N(mean, precision^-1).

    Used to cross-check grid evidence against the exact Gaussian closed form;
    the truncation to the box makes it a sub-probability prior.
    """
    if d not in (1, 2, 3):
        raise ValueError("gaussian_grid supports d in {1, 2, 3}")
    mean = np.zeros(d) if mean is None else np.asarray(mean, dtype=float)
    precision = np.eye(d) if precision is None else np.asarray(precision, dtype=float)
    step = 2.0 * half_width / n_per_axis
    axis = -half_width + step * (np.arange(n_per_axis) + 0.5)
    atoms = np.array(list(itertools.product(*([axis] * d)))) + mean
    cell_volume = step**d
    diff = atoms - mean
    quad = np.einsum("ij,jk,ik->i", diff, precision, diff)
    sign, logdet = np.linalg.slogdet(precision)
    if sign <= 0:
        raise ValueError("precision must be positive definite")
    log_density = -0.5 * d * math.log(2 * math.pi) + 0.5 * logdet - 0.5 * quad
    log_prior = log_density + math.log(cell_volume)
    total = logsumexp(log_prior)
    if total > 0.0:
        log_prior -= total
    return ParameterSpace(atoms, log_prior, 0.0, d)


def uniform_ball_sample(d: int, S: float, rng: np.random.Generator) -> np.ndarray:
    """One draw uniform on the solid ball B(0, S)."""
    if d < 1 or S <= 0:
        raise ValueError("need d >= 1 and S > 0")
    direction = rng.standard_normal(d)
    direction /= np.linalg.norm(direction)
    radius = S * rng.random() ** (1.0 / d)
    return radius * direction
