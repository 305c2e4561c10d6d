import math
from types import SimpleNamespace

import numpy as np
import pytest

from mint_mcmc.core import ConfigError, Dataset, EvalCounter, SampleRun
from mint_mcmc.diagnostics import (
    acceptance_and_step_stats, grid_inverse_cdf_sample, hitting_time, ks_against_grid, mode_occupancy, mode_ratio,
    mode_ratio_curve, normal_false_alarm_rate, normality_report, ring_table, test_accuracy,
)
from mint_mcmc.models import LogisticRegressionModel, SymmetricMixture

A, B = np.array([0.0, 1.0]), np.array([1.0, -1.0])


def _fixture():
    return np.vstack([np.tile(A, (30, 1)), np.tile(B, (10, 1)), [[5.0, 5.0]]])


def test_mode_ratio_fixture():
    assert mode_ratio(_fixture(), A, B, 1e-3) == 3.0
    assert mode_ratio(_fixture(), A, A, 1e-3) == 1.0
    assert mode_ratio(np.tile(A, (3, 1)), A, B, 0.1) == math.inf
    assert math.isnan(mode_ratio(np.tile(A, (3, 1)), B, B, 0.1))
    with pytest.raises(ConfigError):
        mode_ratio(_fixture(), A, B, 0.0)


def test_mode_ratio_curve():
    x = _fixture()[::-1]
    curve = mode_ratio_curve(x, A, B, 1e-3, [1, 11, 41])
    assert math.isnan(curve[0]) and curve[1] == 0.0 and curve[2] == 3.0


def test_mode_occupancy():
    modes = [A, B, np.array([5.0, 5.0])]
    occ = mode_occupancy(np.tile(A, (7, 1)), modes)
    assert occ["fractions"] == [1.0, 0.0, 0.0]
    eq = np.vstack([np.tile(m, (4, 1)) for m in modes])
    assert np.allclose(mode_occupancy(eq, modes)["fractions"], 1 / 3)
    far = mode_occupancy(np.vstack([A, [[50.0, 50.0]]]), modes, radius=0.5)
    assert far["fractions"] == [0.5, 0.0, 0.0] and far["unassigned"] == 0.5
    with pytest.raises(ConfigError):
        mode_occupancy(eq, [])


def test_hitting_time():
    assert hitting_time(np.tile(A, (3, 1)), A, 0.1) == 0
    trace = np.vstack([np.tile([3.0, 3.0], (7, 1)), np.tile(A, (3, 1))])
    assert hitting_time(trace, A, 0.1) == 7
    assert hitting_time(trace, B, 0.1) is None


def test_normality_degenerate_at_full_batch():
    model = SymmetricMixture(1)
    data = model.generate(np.zeros(1), 200, np.random.default_rng(0))
    rep = normality_report(model, data, np.zeros(1), 200, 100, np.random.default_rng(1))
    assert rep["degenerate"] and not rep["normal_ok"] and rep["sd"] == 0.0
    with pytest.raises(ConfigError):
        normality_report(model, data, np.zeros(1), 10, 50, np.random.default_rng(1))


def test_normality_flags_heavy_tail():
    x = np.zeros(1000)
    x[0] = 1000.0
    model = SymmetricMixture(1)
    rep = normality_report(model, Dataset(x), np.zeros(1), 100, 2000, np.random.default_rng(0))
    assert rep["ks"] > 0.1
    assert not rep["normal_ok"]


def test_normality_variance_prediction():
    model = SymmetricMixture(1)
    data = model.generate(np.zeros(1), 2000, np.random.default_rng(0))
    rep = normality_report(model, data, np.array([0.3]), 100, 3000, np.random.default_rng(2))
    assert rep["sd"] ** 2 == pytest.approx(rep["predicted_var"], rel=0.1)
    assert abs(rep["mean"]) < 3 * rep["sd"] / math.sqrt(3000)


def test_false_alarm_rate_small():
    assert normal_false_alarm_rate(5000, 200, np.random.default_rng(0)) < 0.01


def _run(acc, disp):
    acc = np.asarray(acc, dtype=bool)
    n = len(acc)
    return SampleRun(np.zeros((n, 1)), acc, np.ones(n), np.asarray(disp, dtype=float), EvalCounter(), 0.0, 1.0, {})


def test_acceptance_stats():
    none = acceptance_and_step_stats(_run([False] * 4, [0, 0, 0, 0]))
    assert none["acceptance_rate"] == 0.0 and none["mean_accepted_step"] is None and not none["step_defined"]
    s = acceptance_and_step_stats(_run([True, False, True, True], [0.5, 0.0, 1.0, 1.5]))
    assert s["acceptance_rate"] == 0.75 and s["mean_accepted_step"] == 1.0


def test_ring_table_single_chain():
    fake = SimpleNamespace(ring_counts=[[40, 0, 0]], ladder=SimpleNamespace(T=[1.0], m=[100]))
    tab = ring_table(fake)
    assert tab.percentages.tolist() == [[100.0, 0.0, 0.0]]
    assert tab.rows()[0]["T"] == 1.0


def test_ring_table_rows_sum_to_100():
    fake = SimpleNamespace(ring_counts=[[3, 1, 0], [1, 1, 2], [0, 0, 0]], ladder=SimpleNamespace(T=[1, 2, 3], m=[9, 8, 7]))
    pct = ring_table(fake).percentages
    assert np.allclose(pct[:2].sum(axis=1), 100.0) and pct[2].sum() == 0.0


def test_accuracy_fixtures():
    model = LogisticRegressionModel(2)
    x = np.array([[-2.0, 1.0, 0.0], [-1.0, 1.0, 0.0], [1.0, 1.0, 1.0], [3.0, 1.0, 1.0], [2.0, 1.0, 1.0]])
    assert test_accuracy(model, np.array([[5.0, 0.0]]), x, thin=1) == 1.0
    assert test_accuracy(model, np.zeros((4, 2)), x, thin=1) == pytest.approx(0.6)
    with pytest.raises(ConfigError):
        test_accuracy(model, np.zeros((0, 2)), x)


def test_ks_self_consistency():
    grid = np.linspace(-6, 6, 2001)
    lg = -0.5 * grid**2 + np.log1p(0.5 * np.sin(3 * grid))
    x = grid_inverse_cdf_sample(grid, lg, 100_000, np.random.default_rng(0))
    assert ks_against_grid(x, grid, lg) < 0.02


def test_ks_point_mass():
    grid = np.linspace(-6, 6, 2001)
    assert ks_against_grid(np.zeros(100), grid, -0.5 * grid**2) == pytest.approx(0.5, abs=0.01)


def test_ks_errors():
    grid = np.linspace(0, 1, 5)
    with pytest.raises(ConfigError):
        ks_against_grid([0.5], grid, np.array([0, 0, np.inf, 0, 0]))
    with pytest.raises(ConfigError):
        ks_against_grid([0.5], grid[::-1], np.zeros(5))
