import math

import numpy as np
import pytest
from scipy.integrate import quad

from seqmix.models import (
    Observation,
    gaussian_linear,
    logistic_bernoulli,
    sample_outcome,
)
from seqmix.tempered import (
    TemperedState,
    TemperedVariant,
    VAWState,
    hellinger_sq_bernoulli,
    hellinger_sq_gaussian,
    online_to_confidence_membership,
    online_to_confidence_threshold,
    prior_work_online_to_confidence_threshold,
    renyi_bernoulli,
    renyi_gaussian,
    tempered_membership,
    tempered_threshold,
    vaw_predict,
    vaw_update,
)


def test_renyi_gaussian_examples():
    assert renyi_gaussian(0.0, 0.0, 1.0, 0.5) == 0.0
    assert renyi_gaussian(2.0, 0.0, 1.0, 0.5) == pytest.approx(1.0, abs=1e-12)
    assert renyi_gaussian(1.0, -1.0, 2.0, 0.25) == pytest.approx(
        0.25 * 4.0 / 8.0, abs=1e-12
    )
    with pytest.raises(ValueError):
        renyi_gaussian(0.0, 1.0, -1.0, 0.5)
    with pytest.raises(ValueError):
        renyi_gaussian(0.0, 1.0, 1.0, 1.0)


def test_hellinger_gaussian_examples():
    assert hellinger_sq_gaussian(0.0, 0.0, 1.0) == 0.0
    assert hellinger_sq_gaussian(2.0, 0.0, 1.0) == pytest.approx(
        2.0 * (1.0 - math.exp(-0.5)), abs=1e-12
    )
    assert hellinger_sq_gaussian(2.0, 0.0, 1.0) == pytest.approx(0.7869, abs=1e-4)
    assert hellinger_sq_gaussian(100.0, 0.0, 1.0) <= 2.0
    with pytest.raises(ValueError):
        hellinger_sq_gaussian(0.0, 1.0, 0.0)


def test_bernoulli_divergence_examples():
    assert renyi_bernoulli(0.3, 0.3, 0.5) == pytest.approx(0.0, abs=1e-12)
    # symmetric at zeta = 1/2: -2 log sum sqrt(p q)
    val = renyi_bernoulli(0.8, 0.2, 0.5)
    expected = -2.0 * math.log(
        math.sqrt(0.8 * 0.2) + math.sqrt(0.2 * 0.8)
    )
    assert val == pytest.approx(expected, abs=1e-12)
    assert hellinger_sq_bernoulli(0.5, 0.5) == 0.0
    assert hellinger_sq_bernoulli(1.0, 0.0) == pytest.approx(2.0, abs=1e-12)
    assert renyi_bernoulli(0.7, 0.4, 0.3) > 0.0


def test_renyi_skew_symmetry():
    # (1 - zeta) D_zeta(p||q) = zeta D_{1-zeta}(q||p)
    rng = np.random.default_rng(40)
    for _ in range(50):
        p, q = rng.uniform(0.05, 0.95, size=2)
        zeta = float(rng.uniform(0.1, 0.9))
        lhs = (1.0 - zeta) * renyi_bernoulli(p, q, zeta)
        rhs = zeta * renyi_bernoulli(q, p, 1.0 - zeta)
        assert lhs == pytest.approx(rhs, abs=1e-12)


def _gauss_pdf(z, m, sigma):
    return math.exp(-((z - m) ** 2) / (2 * sigma**2)) / math.sqrt(
        2 * math.pi * sigma**2
    )


def test_gaussian_divergences_against_quadrature():
    rng = np.random.default_rng(41)
    for _ in range(100):
        m1 = float(rng.uniform(-2, 2))
        m2 = float(rng.uniform(-2, 2))
        sigma = float(rng.uniform(0.5, 2.0))
        zeta = float(rng.uniform(0.1, 0.9))
        lo, hi = min(m1, m2) - 12 * sigma, max(m1, m2) + 12 * sigma
        s, _ = quad(
            lambda z: _gauss_pdf(z, m1, sigma) ** zeta
            * _gauss_pdf(z, m2, sigma) ** (1 - zeta),
            lo,
            hi,
        )
        numeric_renyi = math.log(s) / (zeta - 1.0)
        assert renyi_gaussian(m1, m2, sigma, zeta) == pytest.approx(
            numeric_renyi, abs=1e-6
        )
        h, _ = quad(
            lambda z: (
                math.sqrt(_gauss_pdf(z, m1, sigma))
                - math.sqrt(_gauss_pdf(z, m2, sigma))
            )
            ** 2,
            lo,
            hi,
        )
        assert hellinger_sq_gaussian(m1, m2, sigma) == pytest.approx(h, abs=1e-6)


def test_tempered_threshold_values():
    assert tempered_threshold(0.5, 0.1, TemperedVariant.RENYI) == pytest.approx(
        2.0 * math.log(10.0), abs=1e-12
    )
    assert tempered_threshold(0.3, 0.1, TemperedVariant.HELLINGER) == pytest.approx(
        2.0 * math.log(10.0), abs=1e-12
    )
    # Renyi at beta = 1/2 and the Hellinger threshold coincide
    assert tempered_threshold(0.5, 0.05, TemperedVariant.RENYI) == (
        tempered_threshold(0.5, 0.05, TemperedVariant.HELLINGER)
    )
    with pytest.raises(ValueError):
        tempered_threshold(0.5, 0.0, TemperedVariant.RENYI)


def test_tempered_state_validation():
    model = gaussian_linear(1, 1.0)
    with pytest.raises(ValueError):
        TemperedState(model, 1.0)
    with pytest.raises(ValueError):
        TemperedState(model, 0.0)


def test_tempered_membership_trivia():
    model = gaussian_linear(1, 1.0)
    state = TemperedState(model, 0.5)
    theta = np.array([0.3])
    # at t = 0 every theta is a member for both variants
    assert tempered_membership(state, theta, 0.1, TemperedVariant.RENYI)
    assert tempered_membership(state, theta, 0.1, TemperedVariant.HELLINGER)
    # after one step where estimate == theta, lhs is the negated log regret of
    # theta itself, which is zero, so membership still holds
    obs = Observation(np.array([1.0]), 0.5)
    state.step(theta, obs)
    assert state.log_regret(theta) == pytest.approx(0.0, abs=1e-12)
    assert state.divergence_sum(theta, TemperedVariant.RENYI) == 0.0
    assert tempered_membership(state, theta, 0.1, TemperedVariant.RENYI)


def test_tempered_one_step_identity_bernoulli():
    """The normalized one-step tempered ratio integrates to exactly one.

    Under y ~ p_theta: E[ exp(-beta * log_regret(theta)) ] =
    sum_y p_theta(y)^(1-beta) p_hat(y)^beta = exp(-beta D_{1-beta}(theta||hat)),
    so multiplying by exp(beta * divergence) normalizes the expectation to 1.
    """
    rng = np.random.default_rng(42)
    model = logistic_bernoulli(1)
    for _ in range(100):
        beta = float(rng.uniform(0.1, 0.9))
        theta = rng.normal(size=1)
        est = rng.normal(size=1)
        x = rng.normal(size=1)
        total = 0.0
        p_theta = 1.0 / (1.0 + math.exp(-float(theta @ x)))
        for y in (0.0, 1.0):
            s = TemperedState(model, beta)
            s.step(est, Observation(x, y))
            log_ratio = -beta * s.log_regret(theta)
            prob_y = p_theta if y == 1.0 else 1.0 - p_theta
            d_step = s.divergence_sum(theta, TemperedVariant.RENYI)
            total += prob_y * math.exp(log_ratio + beta * d_step)
        assert total == pytest.approx(1.0, abs=1e-12)


def test_vaw_zero_state_predicts_zero():
    state = VAWState.initial(2, 1.0)
    assert vaw_predict(state, np.array([1.0, -1.0])) == 0.0


def test_vaw_single_observation():
    state = VAWState.initial(1, 1.0)
    state = vaw_update(state, Observation(np.array([1.0]), 1.0))
    # A = 2, b = 1, prediction at x = 1: 1 / (2 + 1) = 1/3
    assert vaw_predict(state, np.array([1.0])) == pytest.approx(1.0 / 3.0, abs=1e-12)


def test_vaw_linearity_in_targets():
    rng = np.random.default_rng(43)
    xs = [rng.normal(size=2) for _ in range(10)]
    ys = [float(rng.normal()) for _ in range(10)]
    s1 = VAWState.initial(2, 0.5)
    s2 = VAWState.initial(2, 0.5)
    for x, y in zip(xs, ys):
        s1 = vaw_update(s1, Observation(x, y))
        s2 = vaw_update(s2, Observation(x, 2.0 * y))
    x_test = rng.normal(size=2)
    assert vaw_predict(s2, x_test) == pytest.approx(
        2.0 * vaw_predict(s1, x_test), abs=1e-10
    )


def test_vaw_initial_validation():
    with pytest.raises(ValueError):
        VAWState.initial(2, 0.0)


def test_online_to_confidence_threshold_examples():
    assert online_to_confidence_threshold(0.1, 5.0) == pytest.approx(
        4.0 * math.log(10.0) + 10.0, abs=1e-12
    )
    assert online_to_confidence_threshold(0.1, 5.0) == pytest.approx(
        19.2103, abs=1e-4
    )
    assert online_to_confidence_threshold(0.5, 0.0) == pytest.approx(
        4.0 * math.log(2.0), abs=1e-12
    )
    with pytest.raises(ValueError):
        online_to_confidence_threshold(0.1, -1.0)
    with pytest.raises(ValueError):
        online_to_confidence_threshold(0.1, 1.0, beta=1.0)


def test_online_to_confidence_tighter_than_prior_work():
    for delta in (0.001, 0.01, 0.05, 0.1, 0.25, 0.5):
        for b_t in np.linspace(0.0, 100.0, 41):
            new = online_to_confidence_threshold(delta, float(b_t))
            old = prior_work_online_to_confidence_threshold(delta, float(b_t))
            assert new < old


def test_online_to_confidence_membership():
    rng = np.random.default_rng(44)
    theta_star = np.array([0.5, -0.2])
    model = gaussian_linear(2, 1.0)
    state = VAWState.initial(2, 1.0)
    data, preds = [], []
    for _ in range(50):
        x = rng.normal(size=2)
        y = sample_outcome(model, theta_star, x, rng)
        obs = Observation(x, y)
        preds.append(vaw_predict(state, x))
        state = vaw_update(state, obs)
        data.append(obs)
    # a generous certificate keeps theta_star inside with high probability
    b_t = 0.5 * math.log(np.linalg.det(state.gram)) + 0.5 * float(
        theta_star @ theta_star
    )
    assert online_to_confidence_membership(preds, data, theta_star, b_t, 0.5, 0.1)
    # a grossly wrong parameter falls outside
    assert not online_to_confidence_membership(
        preds, data, 50.0 * np.ones(2), b_t, 0.5, 0.1
    )
