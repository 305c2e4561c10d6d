import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mint_mcmc.baselines import run_mh, tempered_mh_step
from mint_mcmc.chain import init_state
from mint_mcmc.core import ConfigError, Dataset, EvalCounter, Model
from mint_mcmc.estimator import mu_hat, regenerate
from mint_mcmc.mint import (
    AugmentationScratch, MintConfig, cancellation_identity_check, init_mint, mint_log_accept, mint_step, run_mint,
    tau_from_batch, temperature,
)
from mint_mcmc.models import SymmetricMixture, TiedMeansMixture
from mint_mcmc.proposals import ProposalKernel

RW = ProposalKernel(0.3, "random-walk")


class Flat(Model):
    dim = 2

    def loglik(self, theta, x):
        return np.zeros(len(x))


def test_tau_values():
    assert tau_from_batch(10, 10) == 1.0
    assert tau_from_batch(1000, 10**6) == pytest.approx(0.5)
    assert tau_from_batch(100, 13_000) == pytest.approx(math.log(100) / math.log(13_000), abs=1e-12)
    assert round(tau_from_batch(100, 13_000), 3) == 0.486


def test_temperature_values():
    n = 10**5
    assert temperature(n, 0.995 * tau_from_batch(5378, n)) == pytest.approx(19.41, abs=0.01)
    assert temperature(n, 0.995 * tau_from_batch(1000, n)) == pytest.approx(103.51, abs=0.01)
    assert temperature(n, 1 - 1e-12) == pytest.approx(1.0)


def test_lambda_must_be_below_tau():
    with pytest.raises(ConfigError, match="lambda"):
        MintConfig(10_000, 100, 0.5, RW)
    with pytest.raises(ConfigError):
        MintConfig(10_000, 100, 0.0, RW)
    cfg = MintConfig.from_alpha(10_000, 100, 0.99, RW)
    assert cfg.T > 1 and cfg.alpha == pytest.approx(0.99)
    assert round(cfg.n**cfg.tau) == cfg.m


def test_acceptance_arithmetic_example():
    la = mint_log_accept(10_000, 0.3, -0.001, 0.0)
    assert math.exp(la) == pytest.approx(math.exp(-10**1.2 * 0.001))
    assert math.exp(la) == pytest.approx(0.98428, abs=1e-5)


def test_equal_estimates_always_accepted():
    data = Dataset(np.zeros(50))
    cfg = MintConfig(50, 10, 0.3, RW, n_samples=200)
    run = run_mint(Flat(), data, cfg, np.zeros(2), 0)
    assert run.accepted.all()


def test_cached_value_kept_on_rejection_and_reproducible():
    model = TiedMeansMixture()
    data = model.generate(np.array([0.0, 1.0]), 2000, np.random.default_rng(0))
    cfg = MintConfig(2000, 50, 0.4, ProposalKernel(1.5), n_samples=0)
    g = np.random.default_rng(1)
    state = init_mint(model, data, cfg, np.zeros(2), g)
    rejected = 0
    for _ in range(200):
        new = mint_step(state, model, data, cfg, g)
        if not new.accepted:
            rejected += 1
            assert new.cached_mu_hat == state.cached_mu_hat and new.batch_seed == state.batch_seed
        idx = regenerate(new.batch_seed, data.n, new.batch_sizes)
        assert mu_hat(model, data, idx, new.theta) == new.cached_mu_hat
        state = new
    assert rejected > 0


def test_one_batch_per_step():
    model = SymmetricMixture(2)
    data = model.generate(np.array([2.0, 0.0]), 500, np.random.default_rng(0))
    cfg = MintConfig(500, 40, 0.3, RW, n_samples=123)
    run = run_mint(model, data, cfg, np.zeros(2), 5)
    assert run.evals.loglik == 40 * 124


def test_zero_samples():
    model = SymmetricMixture(2)
    data = model.generate(np.array([2.0, 0.0]), 100, np.random.default_rng(0))
    run = run_mint(model, data, MintConfig(100, 10, 0.2, RW), np.zeros(2), 0)
    assert len(run) == 0 and run.evals.loglik == 10


@pytest.mark.parametrize("kind", ["random-walk", "langevin"])
def test_full_batch_mint_matches_tempered_mh(kind):
    model = TiedMeansMixture()
    data = model.generate(np.array([0.0, 1.0]), 400, np.random.default_rng(0))
    lam = 0.25
    prop = ProposalKernel(0.4 if kind == "random-walk" else 0.1, kind)
    cfg = MintConfig(400, 400, lam, prop, n_samples=300)
    a = run_mint(model, data, cfg, np.zeros(2), 9)
    b = run_mh(model, data, np.zeros(2), prop, 9, 300, T=temperature(400, lam))
    assert np.array_equal(a.samples, b.samples)
    assert np.array_equal(a.accepted, b.accepted)


def test_step_level_reduction():
    model = TiedMeansMixture()
    data = model.generate(np.array([0.0, 1.0]), 300, np.random.default_rng(0))
    cfg = MintConfig(300, 300, 0.25, RW)
    g1, g2 = np.random.default_rng(4), np.random.default_rng(4)
    s1 = init_mint(model, data, cfg, np.zeros(2), g1)
    s2 = init_state(model, data, np.zeros(2), 300, g2)
    for _ in range(50):
        s1 = mint_step(s1, model, data, cfg, g1, EvalCounter())
        s2 = tempered_mh_step(s2, model, data, cfg.T, RW, g2)
        assert np.array_equal(s1.theta, s2.theta)


def test_naive_scale_uses_unit_temperature():
    cfg = MintConfig(1000, 100, 0.3, RW, naive_scale=True)
    assert cfg.kernel_temperature == 1.0
    assert cfg.likelihood_scale == 1000


@given(
    st.floats(0.05, 5), st.floats(0.05, 5), st.floats(-3, 3), st.floats(-3, 3),
    st.floats(-2, 0), st.floats(-2, 0), st.floats(-2, 2),
)
def test_cancellation_identity(s1, s2, t, tp, mh, mhp, q):
    sc = AugmentationScratch(10_000, 0.5, 0.3, s1, s2, t, tp)
    full, reduced = cancellation_identity_check(sc, (mh, mhp), q)
    assert abs(full - reduced) < 1e-10 * max(1.0, abs(full))


def test_cancellation_identity_random_batch():
    g = np.random.default_rng(0)
    worst = 0.0
    for _ in range(1000):
        sc = AugmentationScratch(int(g.integers(100, 10**6)), g.uniform(0.3, 0.9), 0.0, *g.uniform(0.01, 3, 2),
                                 *g.normal(size=2))
        sc.lam = g.uniform(0.01, sc.tau)
        full, red = cancellation_identity_check(sc, tuple(g.uniform(-3, 0, 2)), float(g.normal()))
        worst = max(worst, abs(full - red))
    assert worst < 1e-10


def test_unit_tilt_at_half_tau():
    # at lambda = tau/2 the tilt coefficient n**(lambda - tau/2) equals one
    sc = AugmentationScratch(10_000, 0.5, 0.25, 1.0, 2.0, 0.3, -0.4)
    assert sc.epsilon == pytest.approx(1.0)
    full, reduced = cancellation_identity_check(sc, (-1.0, -1.2), 0.0)
    assert full == pytest.approx(reduced) == pytest.approx(10_000**0.25 * (-0.2))
