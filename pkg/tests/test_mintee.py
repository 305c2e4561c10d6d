import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mint_mcmc.baselines import run_mh
from mint_mcmc.chain import init_state
from mint_mcmc.core import ConfigError, Dataset, EvalCounter, RngStream, full_mean_loglik
from mint_mcmc.mintee import (
    EnergyRing, build_ladder, cost_bound, ee_jump, ee_log_ratio, energy_estimate, ladder_batch_sizes,
    pilot_energy_floor, ring_index, run_mintee, truncated_log_density,
)
from mint_mcmc.models import SymmetricMixture
from mint_mcmc.proposals import ProposalKernel


def test_ladder_reference_table():
    lad = build_ladder(10**5, 7, 1000, 1.4, 0.995)
    assert lad.m == [100000, 5378, 3841, 2743, 1959, 1400, 1000]
    ref = [1.00, 19.41, 27.13, 37.93, 53.02, 74.06, 103.51]
    assert np.allclose(lad.T, ref, atol=0.01)


def test_ladder_energy_spacing():
    lad = build_ladder(10**4, 5, 2603, 1.4, 0.995, c=10.0, H0=-3.0)
    assert lad.H[0] == -3.0
    for k in range(lad.K - 1):
        assert (lad.H[k + 1] - lad.H[k]) / lad.T[k] == pytest.approx(10.0)
    assert lad.m[0] == 10**4 and lad.T[0] == 1.0


def test_ladder_single_chain():
    lad = build_ladder(500, 1, 0, 1.4, 0.9)
    assert lad.m == [500] and lad.T == [1.0]


@pytest.mark.parametrize("kw", [dict(alpha=1.0), dict(gamma=1.0), dict(m_min=1000, K=15)])
def test_ladder_validation(kw):
    args = dict(n=10**5, K=7, m_min=1000, gamma=1.4, alpha=0.995)
    args.update(kw)
    with pytest.raises(ConfigError):
        build_ladder(**args)


@given(st.integers(2, 6), st.floats(1.1, 2.0))
def test_ladder_sizes_decrease(K, gamma):
    sizes = ladder_batch_sizes(10**6, K, 50, gamma)
    assert sizes[0] == 10**6 and sizes[-1] == 50
    assert all(b < a for a, b in zip(sizes, sizes[1:]))


def test_ring_index_boundaries():
    H = [0.0, 10.0, 25.0, 50.0, 90.0]
    assert ring_index(H[0], H) == 0
    assert ring_index(H[3] - 1e-9, H) == 2
    assert ring_index(H[3], H) == 3
    assert ring_index(-5.0, H) == 0
    assert ring_index(1e9, H) == 4


@given(st.floats(-100, 200))
def test_ring_index_matches_scan(h):
    H = [0.0, 10.0, 25.0, 50.0, 90.0]
    scan = max([j for j in range(len(H)) if H[j] <= h], default=0)
    assert ring_index(h, H) == scan


def test_truncated_log_density():
    assert truncated_log_density(12.0, 5.0, 2.0) == -6.0
    assert truncated_log_density(3.0, 5.0, 2.0) == -2.5
    assert truncated_log_density(7.5, -math.inf, 1.0) == -7.5


def test_energy_estimate_hand():
    model = SymmetricMixture(1)
    data = Dataset(np.array([0.0, 1.0, 2.0, 3.0]))
    theta = np.array([1.0])
    log2pi = math.log(2 * math.pi)
    assert energy_estimate(model, data, theta, np.arange(4)) == pytest.approx(3 + 2 * log2pi)
    assert energy_estimate(model, data, theta, np.array([0, 3])) == pytest.approx(5 + 2 * log2pi)
    full = -4 * full_mean_loglik(model, data, theta) - model.log_prior(theta)
    assert energy_estimate(model, data, theta, np.arange(4)) == full


def test_ee_log_ratio_examples():
    assert ee_log_ratio(12.0, 10.0, 1.0, 2.0, -math.inf, -math.inf) == pytest.approx(1.0)
    assert ee_log_ratio(12.0, 10.0, 3.0, 3.0, 0.0, 0.0) == 0.0
    assert ee_log_ratio(3.0, 4.0, 1.0, 2.0, 5.0, 5.0) == 0.0


def test_ring_append_only_and_integrity():
    ring = EnergyRing([0.0, 10.0, 20.0], dim=2, capacity=2)
    for i, h in enumerate([1.0, 15.0, 25.0, 2.0, -4.0, 11.0]):
        ring.append(np.array([i, i], dtype=float), h, -h / 100, 0.0, i, (50,))
    assert ring.sizes() == [3, 2, 1]
    assert ring.level_energies(0).tolist() == [1.0, 2.0, -4.0]
    assert ring.entry(1, 1)["seed"] == 5 and ring.entry(1, 1)["sizes"] == (50,)
    with pytest.raises(IndexError):
        ring.entry(2, 1)


def _jump_setup():
    model = SymmetricMixture(2)
    data = model.generate(np.array([2.0, 0.0]), 2000, np.random.default_rng(0))
    lad = build_ladder(2000, 3, 1000, 1.4, 0.9, H0=-1e9)
    return model, data, lad


def test_ee_jump_refines_by_batch_difference():
    model, data, lad = _jump_setup()
    assert lad.m == [2000, 1400, 1000]
    g = np.random.default_rng(1)
    donor = init_state(model, data, np.array([0.0, 2.0]), 1000, g)
    ring = EnergyRing(lad.H, 2)
    ring.append(donor.theta, donor.energy(data.n), donor.cached_mu_hat, donor.log_prior, donor.batch_seed,
                donor.batch_sizes)
    state = init_state(model, data, np.array([2.0, 0.0]), 1400, g)
    counter = EvalCounter()
    res = ee_jump(state, 1, ring, lad, model, data, g, counter)
    assert counter.loglik == 400
    if res.accepted:
        assert res.state.batch_sizes == (1000, 1400)
        assert np.array_equal(res.state.theta, donor.theta)
    assert ee_jump(state, 1, EnergyRing(lad.H, 2), lad, model, data, g) is None


def test_ee_jump_equal_temperatures_accepts():
    model, data, lad = _jump_setup()
    lad.T[2] = lad.T[1]
    lad.H[1] = lad.H[2] = -1e9
    g = np.random.default_rng(2)
    donor = init_state(model, data, np.array([5.0, 5.0]), 1000, g)
    ring = EnergyRing([-1e9, -1e9 + 1, -1e9 + 2], 2)
    ring.append(donor.theta, donor.energy(data.n), donor.cached_mu_hat, donor.log_prior, donor.batch_seed,
                donor.batch_sizes)
    state = init_state(model, data, np.array([2.0, 0.0]), 1400, g)
    lad.H = [-1e9, -1e9 + 1, -1e9 + 2]
    for _ in range(5):
        res = ee_jump(state, 1, ring, lad, model, data, g)
        if res is not None:
            assert res.accepted and res.log_ratio == 0.0


def test_single_chain_equals_mh():
    model = SymmetricMixture(2)
    data = model.generate(np.array([2.0, 0.0]), 300, np.random.default_rng(0))
    lad = build_ladder(300, 1, 0, 1.4, 0.9, H0=-math.inf, burn_in=50, n_samples=400,
                       proposal="random-walk", step_scale=0.2, adapt=False)
    run = run_mintee(model, data, lad, np.zeros(2), 11)
    ref = run_mh(model, data, np.zeros(2), ProposalKernel(0.2), RngStream(11).child(0).generator(), 400, burn_in=50)
    assert np.array_equal(run.samples[0], ref.samples)
    assert np.array_equal(run.accepted[0], ref.accepted)


@pytest.fixture(scope="module")
def small_run():
    model = SymmetricMixture(3)
    data = model.generate(np.array([2.0, 0.0, 0.0]), 1000, np.random.default_rng(0))
    H0 = pilot_energy_floor(model, data, [np.zeros(3)], 10.0)
    lad = build_ladder(1000, 3, 510, 1.4, 0.995, 10.0, H0, burn_in=100, n_samples=300)
    return model, data, lad, run_mintee(model, data, lad, np.zeros(3), 0)


def test_staged_start(small_run):
    _, _, lad, run = small_run
    per = lad.burn_in + lad.n_samples
    for k, s in enumerate(run.stats):
        assert s.first_step == (lad.K - 1 - k) * per
        assert s.first_append == s.first_step + lad.burn_in
        assert s.steps == (k + 1) * per
    assert all(len(x) == lad.n_samples for x in run.samples)


def test_rings_respect_levels(small_run):
    _, _, lad, run = small_run
    H = lad.H + [math.inf]
    for ring in run.rings:
        for j in range(lad.K):
            e = ring.level_energies(j)
            if j > 0:
                assert np.all(e >= H[j])
            assert np.all(e < H[j + 1])


def test_window_cost_within_bound(small_run):
    _, data, lad, run = small_run
    assert run.window_total_evals <= cost_bound(lad)
    assert run.window_evals[0].loglik >= lad.n_samples * data.n * (1 - lad.p_ee)


def test_mintee_deterministic(small_run):
    model, data, lad, run = small_run
    again = run_mintee(model, data, lad, np.zeros(3), 0)
    for a, b in zip(run.samples, again.samples):
        assert np.array_equal(a, b)


def test_mintee_input_checks():
    model = SymmetricMixture(2)
    data = model.generate(np.array([2.0, 0.0]), 100, np.random.default_rng(0))
    lad = build_ladder(200, 1, 0, 1.4, 0.9)
    with pytest.raises(ConfigError):
        run_mintee(model, data, lad, np.zeros(2), 0)
    lad = build_ladder(100, 1, 0, 1.4, 0.9)
    with pytest.raises(ConfigError):
        run_mintee(model, data, lad, np.zeros((2, 2)), 0)

