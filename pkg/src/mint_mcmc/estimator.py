"""Mini-batch sampling and the mini-batch mean log-likelihood estimator.

A batch is identified by a seed plus the sequence of sizes it was grown
through, so stored states only carry a couple of integers and the index set
is regenerated on demand.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

from .core import (
    ConfigError,
    Dataset,
    EvalCounter,
    Model,
    batch_loglik_sum,
    full_mean_loglik,
)

SEED_BOUND = 2**63


@dataclass(frozen=True)
class MiniBatch:
    """Indices of a without-replacement batch and the lineage that rebuilds them.

    ``sizes`` starts with the size of the original draw; every extension
    appends the new total size.
    """

    indices: np.ndarray
    seed: int
    n: int
    sizes: tuple[int, ...]

    @property
    def m(self) -> int:
        return self.sizes[-1]

    def __len__(self) -> int:
        return self.m


def _check_sizes(n: int, m: int) -> None:
    if not 1 <= m <= n:
        raise ConfigError(f"batch size must satisfy 1 <= m <= n, got m={m}, n={n}")


_local = threading.local()
# fixed odd increment; the seed becomes the PCG64 state directly
_PCG_INC = 0xDA3E39CB94B95BDB


def _seeded(seed: int) -> np.random.Generator:
    # resetting one generator per thread is cheaper than building a new one
    g = getattr(_local, "gen", None)
    if g is None:
        g = _local.gen = np.random.Generator(np.random.PCG64())
    g.bit_generator.state = {"bit_generator": "PCG64", "state": {"state": seed, "inc": _PCG_INC},
                             "has_uint32": 0, "uinteger": 0}
    return g


def _draw(seed: int, n: int, m: int) -> np.ndarray:
    return _seeded(seed).choice(n, size=m, replace=False)


def _extension(seed: int, n: int, prefix: np.ndarray, target_m: int) -> np.ndarray:
    k = target_m - len(prefix)
    if k == 0:
        return prefix
    free = np.ones(n, dtype=bool)
    free[prefix] = False
    complement = np.flatnonzero(free)
    g = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, target_m))))
    extra = g.choice(complement, size=k, replace=False)
    return np.concatenate([prefix, extra])


def regenerate(seed: int, n: int, sizes: int | tuple[int, ...]) -> np.ndarray:
    """Rebuild batch indices from a seed and size lineage (pure function)."""
    if isinstance(sizes, (int, np.integer)):
        sizes = (int(sizes),)
    _check_sizes(n, sizes[0])
    idx = _draw(seed, n, sizes[0])
    for target in sizes[1:]:
        idx = _extension(seed, n, idx, target)
    return idx


def sample_batch(n: int, m: int, rng: np.random.Generator) -> MiniBatch:
    """Draw a uniform size-``m`` subset of ``range(n)``; the seed comes from ``rng``."""
    _check_sizes(n, m)
    seed = int(rng.integers(SEED_BOUND))
    return MiniBatch(_draw(seed, n, m), seed, n, (m,))


def extend_batch(batch: MiniBatch, target_m: int, n: int | None = None) -> MiniBatch:
    """Grow ``batch`` to ``target_m`` indices, drawing the new ones from the complement.

    The first ``batch.m`` indices are the original ones, regenerated from the
    seed so the result is reproducible from ``(seed, sizes)`` alone.
    """
    n = batch.n if n is None else n
    if n != batch.n:
        raise ConfigError("batch was drawn for a dataset of a different size")
    if target_m > n:
        raise ConfigError(f"cannot extend to {target_m} > n={n}")
    if target_m < batch.m:
        raise ConfigError(f"target size {target_m} smaller than batch size {batch.m}")
    if target_m == batch.m:
        return batch
    prefix = regenerate(batch.seed, n, batch.sizes)
    return MiniBatch(_extension(batch.seed, n, prefix, target_m), batch.seed, n, batch.sizes + (target_m,))


def mu_hat(
    model: Model,
    data: Dataset,
    batch: MiniBatch | np.ndarray,
    theta: np.ndarray,
    counter: EvalCounter | None = None,
) -> float:
    """Mean log-likelihood over the batch.

    Indices are visited in sorted order so a batch covering the whole dataset
    reproduces :func:`full_mean_loglik` bit for bit.
    """
    idx = batch.indices if isinstance(batch, MiniBatch) else np.asarray(batch)
    m = len(idx)
    if m == data.n:
        return full_mean_loglik(model, data, theta, counter)
    return batch_loglik_sum(model, data, np.sort(idx), theta, counter) / m


def refine_mu_hat(
    model: Model,
    data: Dataset,
    old_estimate: float,
    batch: MiniBatch,
    extended: MiniBatch,
    theta: np.ndarray,
    counter: EvalCounter | None = None,
) -> float:
    """Update a batch mean after extension, evaluating only the new points."""
    if extended.seed != batch.seed or extended.sizes[: len(batch.sizes)] != batch.sizes:
        raise ConfigError("extended batch does not descend from the given batch")
    if extended.m == batch.m:
        return old_estimate
    new = extended.indices[batch.m :]
    total = batch.m * old_estimate + batch_loglik_sum(model, data, new, theta, counter)
    return total / extended.m


@dataclass(frozen=True)
class TStatSample:
    t: float
    mu_hat: float
    mu: float
    m: int


def t_statistic(
    model: Model,
    data: Dataset,
    m: int,
    theta: np.ndarray,
    rng: np.random.Generator,
    mu: float | None = None,
    counter: EvalCounter | None = None,
) -> TStatSample:
    """One draw of t = sqrt(m) * (mu_hat - mu) under random batching.

    Pass ``mu`` to avoid recomputing the full mean for repeated draws.
    """
    _check_sizes(data.n, m)
    if mu is None:
        mu = full_mean_loglik(model, data, theta, counter)
    if m == data.n:
        return TStatSample(0.0, mu, mu, m)
    mh = mu_hat(model, data, sample_batch(data.n, m, rng), theta, counter)
    return TStatSample(math.sqrt(m) * (mh - mu), mh, mu, m)


def finite_population_factor(n: int, m: int) -> float:
    """Variance shrinkage (n - m)/(n - 1) of a without-replacement batch mean."""
    return (n - m) / (n - 1) if n > 1 else 0.0
