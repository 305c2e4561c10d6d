"""Shared contracts: datasets, models, random streams and evaluation counting.

Every sampler in the package talks to a model through three vectorised
callables: per-point log-likelihoods, per-point gradients and the log-prior.
Datasets are immutable arrays; the first axis indexes observations.
"""
from __future__ import annotations

import math

from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np


class ConfigError(ValueError):
    """Invalid sampler or experiment configuration."""


class NonFiniteError(ArithmeticError):
    """A log-likelihood, energy or gradient evaluated to inf/nan."""


@dataclass
class EvalCounter:
    """Per-datum evaluation tallies.

    ``loglik`` counts evaluations of l(x; theta), ``grad`` counts per-point
    gradient evaluations. They are kept apart so cost statements about
    likelihood touches stay exact when Langevin proposals are in use.
    """

    loglik: int = 0
    grad: int = 0

    def add(self, other: "EvalCounter") -> None:
        self.loglik += other.loglik
        self.grad += other.grad


@dataclass(frozen=True)
class RngStream:
    """A reproducible random stream identified by ``(seed, stream)``.

    Streams with the same seed and different ids are statistically
    independent (numpy ``SeedSequence`` spawn keys).
    """

    seed: int
    stream: int = 0

    def __post_init__(self) -> None:
        if not (0 <= self.seed < 2**64 and 0 <= self.stream < 2**64):
            raise ConfigError("seed and stream id must be unsigned 64-bit integers")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream,))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, stream: int) -> "RngStream":
        return RngStream(self.seed, stream)


def as_generator(rng: RngStream | np.random.Generator | int) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    return RngStream(int(rng)).generator()


class Dataset:
    """Immutable collection of ``n`` observations.

    ``points`` has shape ``(n,)`` for scalar observations or ``(n, k)`` for
    record-valued ones (e.g. logistic regression stores features with the
    label in the last column).
    """

    __slots__ = ("_points", "meta")

    def __init__(self, points: Any, meta: Mapping[str, Any] | None = None):
        arr = np.array(points, dtype=float)
        if arr.ndim == 0 or arr.shape[0] < 1:
            raise ConfigError("a dataset needs at least one observation")
        arr.setflags(write=False)
        self._points = arr
        self.meta = dict(meta or {})

    @property
    def points(self) -> np.ndarray:
        return self._points

    @property
    def n(self) -> int:
        return self._points.shape[0]

    def __len__(self) -> int:
        return self.n

    def take(self, indices: np.ndarray) -> np.ndarray:
        return self._points[indices]

    def __repr__(self) -> str:
        return f"Dataset(n={self.n}, shape={self._points.shape}, meta={self.meta})"


class Model:
    """Base class for likelihood models.

    Subclasses set ``dim`` and implement :meth:`loglik`. Gradients are
    optional; samplers that need them check :attr:`has_gradient`. The prior
    defaults to the improper uniform prior.
    """

    dim: int = 1
    name: str = "model"

    def loglik(self, theta: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Per-point log-likelihoods l(x_i; theta), shape ``(len(x),)``."""
        raise NotImplementedError

    def grad_loglik(self, theta: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Per-point gradients with respect to theta, shape ``(len(x), dim)``."""
        raise NotImplementedError(f"{type(self).__name__} does not provide gradients")

    def grad_loglik_sum(self, theta: np.ndarray, x: np.ndarray) -> np.ndarray:
        """sum_i grad l(x_i; theta); override when a fused version is cheaper."""
        return self.grad_loglik(theta, x).sum(axis=0)

    def log_prior(self, theta: np.ndarray) -> float:
        return 0.0

    def grad_log_prior(self, theta: np.ndarray) -> np.ndarray:
        return np.zeros(self.dim)

    @property
    def has_gradient(self) -> bool:
        return type(self).grad_loglik is not Model.grad_loglik

    def check_theta(self, theta: Any) -> np.ndarray:
        th = np.asarray(theta, dtype=float)
        if th.shape != (self.dim,):
            raise ConfigError(f"theta must have shape ({self.dim},), got {th.shape}")
        if not np.all(np.isfinite(th)):
            raise NonFiniteError("theta has non-finite entries")
        return th


def _checked_sum(values: np.ndarray, indices: np.ndarray | None = None) -> float:
    total = float(np.add.reduce(values))
    if not math.isfinite(total):
        bad = int(np.flatnonzero(~np.isfinite(values))[0])
        where = bad if indices is None else int(indices[bad])
        raise NonFiniteError(f"non-finite log-likelihood at data index {where}")
    return total


def batch_loglik_sum(
    model: Model,
    data: Dataset,
    indices: np.ndarray,
    theta: np.ndarray,
    counter: EvalCounter | None = None,
) -> float:
    """Sum of l(x_i; theta) over ``indices``; counts ``len(indices)`` evaluations."""
    values = model.loglik(theta, data.take(indices))
    if counter is not None:
        counter.loglik += len(indices)
    return _checked_sum(values, indices)


def full_mean_loglik(
    model: Model,
    data: Dataset,
    theta: np.ndarray,
    counter: EvalCounter | None = None,
) -> float:
    """mu(theta) = (1/n) sum_i l(x_i; theta) over the whole dataset."""
    values = model.loglik(theta, data.points)
    if counter is not None:
        counter.loglik += data.n
    return _checked_sum(values) / data.n


def log_posterior_tempered(
    model: Model,
    data: Dataset,
    theta: np.ndarray,
    T: float = 1.0,
    counter: EvalCounter | None = None,
) -> float:
    """Unnormalised log of the posterior raised to ``1/T`` (prior included)."""
    if not T >= 1.0:
        raise ConfigError(f"temperature must be >= 1, got {T}")
    mu = full_mean_loglik(model, data, theta, counter)
    return (data.n * mu + model.log_prior(theta)) / T


def energy(model: Model, n: int, mu: float, theta: np.ndarray) -> float:
    """h = -n*mu - log pi_0(theta), from a (possibly estimated) mean log-likelihood."""
    return -n * mu - model.log_prior(theta)


def full_grad_log_posterior(
    model: Model,
    data: Dataset,
    theta: np.ndarray,
    counter: EvalCounter | None = None,
) -> np.ndarray:
    g = model.grad_loglik(theta, data.points).sum(axis=0)
    if counter is not None:
        counter.grad += data.n
    return g + model.grad_log_prior(theta)


@dataclass
class SampleRun:
    """Output of a single-chain sampler.

    ``samples`` holds the post-burn-in states; ``accepted`` and the two step
    arrays are aligned with it. ``step_proposed`` is the proposal scale in
    force at each iteration, ``step_accepted`` the Euclidean displacement of
    accepted moves (0 for rejections).
    """

    samples: np.ndarray
    accepted: np.ndarray
    step_proposed: np.ndarray
    step_accepted: np.ndarray
    evals: EvalCounter = field(default_factory=EvalCounter)
    burn_in_accept_rate: float = float("nan")
    final_step: float = float("nan")
    config: dict = field(default_factory=dict)
    trace: np.ndarray | None = None

    def __post_init__(self) -> None:
        lens = {len(self.samples), len(self.accepted), len(self.step_proposed), len(self.step_accepted)}
        if len(lens) != 1:
            raise ValueError("SampleRun arrays must have equal length")

    def __len__(self) -> int:
        return len(self.samples)
