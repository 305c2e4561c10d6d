"""Run diagnostics: mode masses, hitting times, t-normality, step statistics,
energy-ring tables, test accuracy and grid-oracle KS distances."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from .core import ConfigError, Dataset, EvalCounter, Model, SampleRun, full_mean_loglik
from .estimator import finite_population_factor, t_statistic

__all__ = [
    "SampleRun", "RingTable", "mode_ratio", "mode_ratio_curve", "mode_occupancy",
    "hitting_time", "normality_report", "normal_false_alarm_rate", "moments_flagged",
    "acceptance_and_step_stats", "ring_table", "test_accuracy", "ks_against_grid",
    "grid_log_posterior",
]


def _samples(run) -> np.ndarray:
    x = run.samples if hasattr(run, "samples") else run
    x = np.asarray(x, dtype=float)
    return x[:, None] if x.ndim == 1 else x


def _within(x: np.ndarray, centre, radius: float) -> np.ndarray:
    if not radius > 0:
        raise ConfigError("radius must be positive")
    d = x - np.asarray(centre, dtype=float)[None, :]
    return np.einsum("ij,ij->i", d, d) <= radius * radius


def mode_ratio(run, mode_a, mode_b, radius: float) -> float:
    """Samples within ``radius`` of mode a divided by those near mode b.

    Returns ``inf`` when only the denominator is empty and ``nan`` when both are.
    """
    x = _samples(run)
    a = int(_within(x, mode_a, radius).sum())
    b = int(_within(x, mode_b, radius).sum())
    if b == 0:
        return math.inf if a else math.nan
    return a / b


def mode_ratio_curve(run, mode_a, mode_b, radius: float, checkpoints: Sequence[int]) -> np.ndarray:
    """mode_ratio over the first k samples, for each k in ``checkpoints``."""
    x = _samples(run)
    ca = np.cumsum(_within(x, mode_a, radius))
    cb = np.cumsum(_within(x, mode_b, radius))
    out = np.empty(len(checkpoints))
    for i, k in enumerate(checkpoints):
        a, b = ca[k - 1], cb[k - 1]
        out[i] = a / b if b else (math.inf if a else math.nan)
    return out


def mode_occupancy(run, modes: Sequence, radius: float | None = None) -> dict:
    """Fraction of samples nearest to each mode.

    With ``radius`` set, samples farther than that from every mode are left
    unassigned and their share is reported as ``unassigned``.
    """
    if len(modes) == 0:
        raise ConfigError("need at least one mode")
    x = _samples(run)
    centres = np.asarray(modes, dtype=float)
    d2 = ((x[:, None, :] - centres[None, :, :]) ** 2).sum(axis=2)
    nearest = d2.argmin(axis=1)
    ok = np.ones(len(x), dtype=bool)
    if radius is not None:
        ok = d2[np.arange(len(x)), nearest] <= radius * radius
    counts = np.bincount(nearest[ok], minlength=len(centres))
    total = max(len(x), 1)
    return {"fractions": (counts / total).tolist(), "unassigned": float((~ok).sum() / total)}


def hitting_time(trace, mode, radius: float) -> int | None:
    """First index whose state lies within ``radius`` of ``mode`` (index 0 is the start)."""
    hit = np.flatnonzero(_within(_samples(trace), mode, radius))
    return int(hit[0]) if len(hit) else None


def normality_report(
    model: Model,
    data: Dataset,
    theta,
    m: int,
    draws: int,
    rng: np.random.Generator,
    skew_tol: float = 0.3,
    kurt_tol: float = 0.5,
) -> dict:
    """Moments of t = sqrt(m)(mu_hat - mu) over random batches and the KS
    distance to a normal with the same mean and sd."""
    if draws < 100:
        raise ConfigError("normality report needs at least 100 draws")
    theta = model.check_theta(theta)
    counter = EvalCounter()
    mu = full_mean_loglik(model, data, theta, counter)
    t = np.array([t_statistic(model, data, m, theta, rng, mu=mu, counter=counter).t for _ in range(draws)])
    sd = float(t.std(ddof=1))
    l = model.loglik(theta, data.points)
    pop_var = float(l.var())
    fpc = finite_population_factor(data.n, m)
    report = {
        "m": m, "draws": draws, "mean": float(t.mean()), "sd": sd,
        "population_var": pop_var, "fpc": fpc, "predicted_var": pop_var * fpc,
        "gamma": pop_var / (2 * mu) if mu != 0 else math.nan,
    }
    if sd == 0.0:
        report.update(skewness=0.0, excess_kurtosis=0.0, ks=0.0, degenerate=True, normal_ok=False)
        return report
    report["skewness"] = float(stats.skew(t))
    report["excess_kurtosis"] = float(stats.kurtosis(t))
    report["ks"] = float(stats.kstest(t, "norm", args=(t.mean(), sd)).statistic)
    report["degenerate"] = False
    report["normal_ok"] = abs(report["skewness"]) < skew_tol and abs(report["excess_kurtosis"]) < kurt_tol
    return report


def moments_flagged(t: np.ndarray, skew_tol: float = 0.3, kurt_tol: float = 0.5) -> bool:
    """True when the sample's skewness or excess kurtosis exceeds its tolerance."""
    return bool(abs(stats.skew(t)) >= skew_tol or abs(stats.kurtosis(t)) >= kurt_tol)


def normal_false_alarm_rate(
    draws: int,
    trials: int,
    rng: np.random.Generator,
    skew_tol: float = 0.3,
    kurt_tol: float = 0.5,
) -> float:
    """Share of exactly normal samples of size ``draws`` that the moment check flags.

    Calibrates the tolerances of :func:`normality_report`: at 5,000 draws the
    sampling sd of the skewness is about sqrt(6/5000) = 0.035 and that of the
    excess kurtosis about sqrt(24/5000) = 0.069.
    """
    return float(np.mean([moments_flagged(rng.standard_normal(draws), skew_tol, kurt_tol)
                          for _ in range(trials)]))


def acceptance_and_step_stats(run: SampleRun) -> dict:
    if len(run) == 0:
        raise ConfigError("empty run")
    acc = np.asarray(run.accepted, dtype=bool)
    steps = np.asarray(run.step_accepted)[acc]
    return {
        "acceptance_rate": float(acc.mean()),
        "mean_accepted_step": float(steps.mean()) if len(steps) else None,
        "step_defined": bool(len(steps)),
    }


@dataclass
class RingTable:
    """Percentage of each chain's ring entries per energy level."""

    percentages: np.ndarray
    T: list = field(default_factory=list)
    m: list = field(default_factory=list)
    counts: np.ndarray | None = None

    def rows(self) -> list[dict]:
        return [
            {"chain": k, "T": self.T[k], "m": self.m[k], "percent": self.percentages[k].tolist()}
            for k in range(len(self.percentages))
        ]


def ring_table(mintee_run) -> RingTable:
    """Per-chain percentage of stored states in each energy ring."""
    counts = np.asarray(mintee_run.ring_counts, dtype=float)
    tot = counts.sum(axis=1, keepdims=True)
    pct = np.divide(100.0 * counts, tot, out=np.zeros_like(counts), where=tot > 0)
    ladder = mintee_run.ladder
    return RingTable(pct, list(map(float, ladder.T)), list(map(int, ladder.m)), counts)


def test_accuracy(model, samples, test_data: Dataset | np.ndarray, thin: int = 10) -> float:
    """Accuracy of the posterior-mean predictive probability thresholded at 0.5.

    Ties (probability exactly 0.5) go to the majority class of the test set.
    """
    pts = test_data.points if isinstance(test_data, Dataset) else np.asarray(test_data)
    y = pts[:, -1]
    thetas = _samples(samples)[::thin]
    if len(thetas) == 0:
        raise ConfigError("no samples to average")
    p = np.zeros(len(pts))
    for th in thetas:
        p += model.predict_proba(th, pts)
    p /= len(thetas)
    majority = float(y.mean() >= 0.5)
    pred = np.where(p > 0.5, 1.0, np.where(p < 0.5, 0.0, majority))
    return float((pred == y).mean())


test_accuracy.__test__ = False


def grid_log_posterior(model: Model, data: Dataset, grid: np.ndarray, T: float = 1.0) -> np.ndarray:
    """Tempered log posterior of a 1-d model on a grid of theta values."""
    return np.array([(data.n * full_mean_loglik(model, data, np.array([g])) + model.log_prior(np.array([g]))) / T
                     for g in grid])


def _grid_cdf(grid: np.ndarray, log_density: np.ndarray) -> np.ndarray:
    # trapezoid rule on the density, normalised to end at 1
    p = np.exp(log_density - log_density.max())
    mass = np.concatenate([[0.0], np.cumsum(0.5 * (p[1:] + p[:-1]) * np.diff(grid))])
    return mass / mass[-1]


def ks_against_grid(samples_1d, grid, grid_log_density) -> float:
    """Kolmogorov-Smirnov distance between samples and a grid-defined density."""
    grid = np.asarray(grid, dtype=float)
    lg = np.asarray(grid_log_density, dtype=float)
    if grid.shape != lg.shape or grid.ndim != 1:
        raise ConfigError("grid and log density must be 1-d arrays of equal length")
    if not np.all(np.isfinite(lg)):
        raise ConfigError("grid log density has non-finite values")
    if np.any(np.diff(grid) <= 0):
        raise ConfigError("grid must be strictly increasing")
    x = np.sort(np.asarray(samples_1d, dtype=float).ravel())
    cdf = _grid_cdf(grid, lg)
    F = np.interp(x, grid, cdf)
    k = len(x)
    upper = np.arange(1, k + 1) / k
    return float(max(np.max(upper - F), np.max(F - (upper - 1.0 / k))))


def grid_inverse_cdf_sample(grid, grid_log_density, size: int, rng: np.random.Generator) -> np.ndarray:
    cdf = _grid_cdf(np.asarray(grid, float), np.asarray(grid_log_density, float))
    return np.interp(rng.random(size), cdf, grid)
