import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seqmix.models import (
    Observation,
    finite_categorical,
    gaussian_linear,
    log_density,
    log_density_grid,
    logistic_bernoulli,
    neg_log_likelihood,
    neg_log_likelihood_grid,
    sample_outcome,
    sigmoid,
    softplus,
)


def test_logistic_log_half_at_zero_logit():
    model = logistic_bernoulli(2)
    obs = Observation(np.array([1.0, -1.0]), 1.0)
    assert log_density(model, np.array([1.0, 1.0]), obs) == pytest.approx(
        math.log(0.5), abs=1e-12
    )


def test_gaussian_zero_residual():
    model = gaussian_linear(1, 1.0)
    obs = Observation(np.array([2.0]), 1.0)
    assert log_density(model, np.array([0.5]), obs) == pytest.approx(
        -0.5 * math.log(2 * math.pi), abs=1e-12
    )


def test_gaussian_residual_two():
    model = gaussian_linear(1, 1.0)
    obs = Observation(np.array([1.0]), 2.0)
    assert log_density(model, np.array([0.0]), obs) == pytest.approx(
        -0.5 * math.log(2 * math.pi) - 2.0, abs=1e-12
    )


def test_nll_empty_is_zero():
    model = gaussian_linear(1)
    assert neg_log_likelihood(model, np.array([0.0]), []) == 0.0


def test_nll_single_bernoulli():
    model = logistic_bernoulli(1)
    obs = Observation(np.array([0.0]), 1.0)
    assert neg_log_likelihood(model, np.array([3.0]), [obs]) == pytest.approx(
        0.6931, abs=1e-4
    )


def test_nll_two_gaussian_residuals():
    model = gaussian_linear(1, 1.0)
    data = [Observation(np.array([1.0]), 0.0), Observation(np.array([1.0]), 2.0)]
    assert neg_log_likelihood(model, np.array([0.0]), data) == pytest.approx(
        2 * 0.5 * math.log(2 * math.pi) + 2.0, abs=1e-10
    )
    assert neg_log_likelihood(model, np.array([0.0]), data) == pytest.approx(
        3.8379, abs=1e-4
    )


def test_bernoulli_density_sums_to_one_exactly():
    model = logistic_bernoulli(2)
    rng = np.random.default_rng(0)
    for _ in range(50):
        theta = rng.normal(size=2) * 5
        x = rng.normal(size=2)
        p1 = math.exp(log_density(model, theta, Observation(x, 1.0)))
        p0 = math.exp(log_density(model, theta, Observation(x, 0.0)))
        assert p0 + p1 == pytest.approx(1.0, abs=1e-15)


def test_categorical_density_normalized():
    model = finite_categorical(4)
    rng = np.random.default_rng(1)
    x = np.zeros(4)
    for _ in range(20):
        theta = rng.normal(size=4) * 3
        total = sum(
            math.exp(log_density(model, theta, Observation(x, float(k))))
            for k in range(4)
        )
        assert total == pytest.approx(1.0, abs=1e-12)


def test_gaussian_density_integrates_to_one():
    model = gaussian_linear(1, 1.7)
    theta = np.array([0.8])
    x = np.array([1.3])
    mu = float(theta @ x)
    ys = np.linspace(mu - 10 * 1.7, mu + 10 * 1.7, 20001)
    dens = np.array(
        [math.exp(log_density(model, theta, Observation(x, float(y)))) for y in ys]
    )
    assert np.trapezoid(dens, ys) == pytest.approx(1.0, abs=1e-6)


def test_logistic_stable_at_extreme_logits():
    model = logistic_bernoulli(1)
    for z in (-700.0, -50.0, 50.0, 700.0):
        for y in (0.0, 1.0):
            val = log_density(model, np.array([z]), Observation(np.array([1.0]), y))
            assert np.isfinite(val)


def test_nll_additive_bit_identical():
    model = gaussian_linear(2, 0.7)
    rng = np.random.default_rng(2)
    data = [
        Observation(rng.normal(size=2), float(rng.normal())) for _ in range(10)
    ]
    theta = np.array([0.3, -0.2])
    whole = neg_log_likelihood(model, theta, data)
    parts = neg_log_likelihood(model, theta, data[:4]) + neg_log_likelihood(
        model, theta, data[4:]
    )
    # additivity of the sum, same summation order
    assert whole == pytest.approx(parts, abs=1e-12)


def test_grid_matches_scalar_log_density():
    rng = np.random.default_rng(3)
    for model in (gaussian_linear(2, 1.2), logistic_bernoulli(2)):
        thetas = rng.normal(size=(7, 2))
        x = rng.normal(size=2)
        y = 1.0 if model.kind.value == "logistic_bernoulli" else float(rng.normal())
        obs = Observation(x, y)
        grid = log_density_grid(model, thetas, obs)
        for i in range(7):
            assert grid[i] == pytest.approx(
                log_density(model, thetas[i], obs), abs=1e-12
            )


def test_grid_nll_matches_scalar():
    model = logistic_bernoulli(2)
    rng = np.random.default_rng(4)
    thetas = rng.normal(size=(5, 2))
    data = [
        Observation(rng.normal(size=2), float(rng.integers(2))) for _ in range(8)
    ]
    grid = neg_log_likelihood_grid(model, thetas, data)
    for i in range(5):
        assert grid[i] == pytest.approx(
            neg_log_likelihood(model, thetas[i], data), abs=1e-10
        )


def test_sample_saturated_sigmoid_deterministic():
    model = logistic_bernoulli(1)
    rng = np.random.default_rng(5)
    for _ in range(100):
        assert sample_outcome(model, np.array([50.0]), np.array([1.0]), rng) == 1.0


def test_sample_bernoulli_frequency():
    model = logistic_bernoulli(1)
    rng = np.random.default_rng(6)
    draws = [
        sample_outcome(model, np.array([0.0]), np.array([1.0]), rng)
        for _ in range(100_000)
    ]
    assert np.mean(draws) == pytest.approx(0.5, abs=0.005)


def test_sample_gaussian_moments():
    model = gaussian_linear(1, 2.0)
    rng = np.random.default_rng(7)
    theta, x = np.array([1.5]), np.array([1.0])
    draws = np.array(
        [sample_outcome(model, theta, x, rng) for _ in range(100_000)]
    )
    se_mean = 2.0 / math.sqrt(len(draws))
    assert abs(draws.mean() - 1.5) <= 3 * se_mean
    # variance of the sample variance of a Gaussian: 2 sigma^4 / n
    se_var = math.sqrt(2 * 2.0**4 / len(draws))
    assert abs(draws.var() - 4.0) <= 3 * se_var


def test_dimension_mismatch_errors():
    model = gaussian_linear(2)
    with pytest.raises(ValueError):
        log_density(model, np.array([0.0, 0.0]), Observation(np.array([1.0]), 0.0))
    with pytest.raises(ValueError):
        log_density(model, np.array([0.0]), Observation(np.array([1.0, 0.0]), 0.0))


def test_bernoulli_outcome_must_be_binary():
    model = logistic_bernoulli(1)
    with pytest.raises(ValueError):
        log_density(model, np.array([0.0]), Observation(np.array([1.0]), 0.5))


def test_invalid_model_params():
    with pytest.raises(ValueError):
        gaussian_linear(1, -1.0)
    with pytest.raises(ValueError):
        gaussian_linear(0)


def test_heteroscedastic_override():
    model = gaussian_linear(1, 1.0)
    obs = Observation(np.array([1.0]), 2.0, noise_std=2.0)
    expected = -0.5 * math.log(2 * math.pi) - math.log(2.0) - 4.0 / 8.0
    assert log_density(model, np.array([0.0]), obs) == pytest.approx(
        expected, abs=1e-12
    )


@given(st.floats(-700, 700))
@settings(max_examples=200, deadline=None)
def test_softplus_sigmoid_identities(z):
    assert float(softplus(z)) >= max(z, 0.0) - 1e-12
    s = float(sigmoid(z))
    assert 0.0 <= s <= 1.0
    # log sigma(z) == -softplus(-z)
    if 0.0 < s:
        assert math.log(s) == pytest.approx(-float(softplus(-z)), abs=1e-9)
