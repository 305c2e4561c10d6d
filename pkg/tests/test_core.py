import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mint_mcmc.core import (
    ConfigError, Dataset, EvalCounter, Model, NonFiniteError, RngStream, SampleRun, as_generator,
    batch_loglik_sum, full_grad_log_posterior, full_mean_loglik, log_posterior_tempered,
)
from mint_mcmc.models import SymmetricMixture, TiedMeansMixture


class Quadratic(Model):
    dim = 1

    def loglik(self, theta, x):
        return -0.5 * (x - theta[0]) ** 2


class BadAt(Model):
    dim = 1

    def __init__(self, bad):
        self.bad = bad

    def loglik(self, theta, x):
        out = -((x - theta[0]) ** 2)
        out[x == self.bad] = np.nan
        return out


def test_rng_stream_reproducible_and_independent():
    a = RngStream(7, 0).generator().random(5)
    b = RngStream(7, 0).generator().random(5)
    c = RngStream(7, 1).generator().random(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert np.array_equal(as_generator(7).random(5), a)


def test_rng_stream_rejects_out_of_range():
    with pytest.raises(ConfigError):
        RngStream(-1)
    with pytest.raises(ConfigError):
        RngStream(2**64)


def test_dataset_is_read_only():
    d = Dataset(np.arange(4.0))
    with pytest.raises(ValueError):
        d.points[0] = 5.0
    assert d.n == 4 and len(d) == 4


def test_full_mean_and_counter():
    x = Dataset(np.array([0.0, 1.0, 2.0]))
    c = EvalCounter()
    mu = full_mean_loglik(Quadratic(), x, np.array([1.0]), c)
    assert mu == pytest.approx(-(0.5 + 0 + 0.5) / 3)
    assert c.loglik == 3 and c.grad == 0


def test_batch_sum_names_offending_index():
    data = Dataset(np.array([0.0, 1.0, 2.0, 3.0]))
    with pytest.raises(NonFiniteError, match="index 2"):
        batch_loglik_sum(BadAt(2.0), data, np.array([0, 2]), np.array([0.0]))


def test_tempered_log_posterior_divides_by_T():
    model = TiedMeansMixture()
    data = model.generate(np.array([0.0, 1.0]), 50, np.random.default_rng(0))
    th = np.array([0.2, 0.7])
    lp1 = log_posterior_tempered(model, data, th, 1.0)
    lp5 = log_posterior_tempered(model, data, th, 5.0)
    assert lp5 == pytest.approx(lp1 / 5.0)


def test_check_theta_rejects_shape_and_nan():
    m = SymmetricMixture(3)
    with pytest.raises(ConfigError):
        m.check_theta([1.0, 2.0])
    with pytest.raises(NonFiniteError):
        m.check_theta([1.0, np.nan, 0.0])


def test_sample_run_lengths_checked():
    with pytest.raises(ValueError):
        SampleRun(np.zeros((3, 1)), np.zeros(2, bool), np.zeros(3), np.zeros(3))


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_full_gradient_matches_finite_difference(a, b):
    model = TiedMeansMixture()
    data = model.generate(np.array([0.0, 1.0]), 40, np.random.default_rng(1))
    th = np.array([a, b])
    g = full_grad_log_posterior(model, data, th)

    def f(t):
        return data.n * full_mean_loglik(model, data, t) + model.log_prior(t)

    h = 1e-6
    fd = np.array([(f(th + h * e) - f(th - h * e)) / (2 * h) for e in np.eye(2)])
    assert np.allclose(g, fd, rtol=1e-4, atol=1e-4)
