"""Chain state and the shared Metropolis-Hastings kernel.

MINT, full-batch (tempered) MH and every MINTEE chain move with the same
kernel: the target is exp(-max(h, H)/T), where h is the energy and H an
optional truncation floor. The energy at the current state is cached; a
proposal's energy is computed on a fresh batch (or on the full data when the
batch size equals n). Written this way a full-batch MINT chain and a tempered
MH chain evaluate the same floating point expressions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import ConfigError, Dataset, EvalCounter, Model, NonFiniteError, full_mean_loglik
from .estimator import MiniBatch, mu_hat, regenerate, sample_batch
from .proposals import ProposalKernel, StepController, langevin_log_q_ratio, langevin_mean

NO_TRUNCATION = -math.inf


@dataclass(frozen=True)
class ChainState:
    """Augmented chain state: position plus the cached batch estimate at it.

    ``cached_mu_hat`` is the batch mean log-likelihood computed when
    ``theta`` was accepted, on the batch identified by ``batch_seed`` and
    ``batch_sizes``. It is never refreshed while the chain stays put.
    """

    theta: np.ndarray
    cached_mu_hat: float
    log_prior: float
    batch_seed: int
    batch_sizes: tuple[int, ...]
    iteration: int = 0
    accepted: bool = False
    # drift of the Langevin proposal at theta; only kept for full-batch chains
    grad_cache: np.ndarray | None = field(default=None, compare=False, repr=False)

    def energy(self, n: int) -> float:
        return -n * self.cached_mu_hat - self.log_prior

    def batch_indices(self, n: int) -> np.ndarray:
        if self.batch_sizes[-1] == n:
            return np.arange(n)
        return regenerate(self.batch_seed, n, self.batch_sizes)

    def batch(self, n: int) -> MiniBatch:
        return MiniBatch(self.batch_indices(n), self.batch_seed, n, self.batch_sizes)


FULL_BATCH_SEED = 0


def _draw_batch(n: int, m: int, rng: np.random.Generator) -> MiniBatch | None:
    if m == n:
        return None
    return sample_batch(n, m, rng)


def _estimate(model, data, batch, theta, counter) -> float:
    if batch is None:
        return full_mean_loglik(model, data, theta, counter)
    return mu_hat(model, data, batch, theta, counter)


def init_state(
    model: Model,
    data: Dataset,
    theta0,
    m: int,
    rng: np.random.Generator,
    counter: EvalCounter | None = None,
) -> ChainState:
    """Evaluate the batch estimate at the starting point (m evaluations)."""
    theta = model.check_theta(theta0).copy()
    if not 1 <= m <= data.n:
        raise ConfigError(f"batch size must satisfy 1 <= m <= n, got m={m}, n={data.n}")
    batch = _draw_batch(data.n, m, rng)
    mu = _estimate(model, data, batch, theta, counter)
    seed, sizes = (FULL_BATCH_SEED, (data.n,)) if batch is None else (batch.seed, batch.sizes)
    return ChainState(theta, mu, model.log_prior(theta), seed, sizes)


def _grad_log_target(model, data, batch, theta, T, counter) -> np.ndarray:
    x = data.points if batch is None else data.take(batch.indices)
    g = model.grad_loglik_sum(theta, x)
    if counter is not None:
        counter.grad += len(x)
    g = (data.n / len(x)) * g + model.grad_log_prior(theta)
    if not np.all(np.isfinite(g)):
        raise NonFiniteError("non-finite gradient")
    return g / T


def log_accept_ratio(h: float, h_p: float, T: float, H: float = NO_TRUNCATION, log_q_ratio: float = 0.0) -> float:
    """log of exp(-max(h', H)/T) q(theta'->theta) / (exp(-max(h, H)/T) q(theta->theta'))."""
    return (max(h, H) - max(h_p, H)) / T + log_q_ratio


def mh_kernel_step(
    state: ChainState,
    model: Model,
    data: Dataset,
    m: int,
    T: float,
    proposal: ProposalKernel,
    rng: np.random.Generator,
    counter: EvalCounter | None = None,
    H: float = NO_TRUNCATION,
) -> ChainState:
    """One accept/reject step against exp(-max(h, H)/T) with batch size ``m``.

    Random draws happen in a fixed order: batch seed (only when m < n),
    proposal noise, acceptance uniform.
    """
    n = data.n
    theta = state.theta
    h = state.energy(n)
    batch = _draw_batch(n, m, rng)
    if proposal.kind == "random-walk":
        theta_p = theta + proposal.step * rng.standard_normal(theta.shape)
        log_q = 0.0
        mu_p = _estimate(model, data, batch, theta_p, counter)
        lp_p = model.log_prior(theta_p)
        h_p = energy_from(n, mu_p, lp_p)
    else:
        if not model.has_gradient:
            raise ConfigError("Langevin proposals need a model with gradients")
        if batch is None and state.grad_cache is not None:
            g = state.grad_cache
        else:
            g = _grad_log_target(model, data, batch, theta, T, counter) if h > H else np.zeros_like(theta)
        z = rng.standard_normal(theta.shape)
        theta_p = langevin_mean(theta, proposal.step, g) + proposal.step * z
        mu_p = _estimate(model, data, batch, theta_p, counter)
        lp_p = model.log_prior(theta_p)
        h_p = energy_from(n, mu_p, lp_p)
        g_p = _grad_log_target(model, data, batch, theta_p, T, counter) if h_p > H else np.zeros_like(theta)
        log_q = langevin_log_q_ratio(theta, theta_p, g, g_p, proposal.step)
    if not math.isfinite(h_p):
        raise NonFiniteError("non-finite energy at proposal")
    log_alpha = log_accept_ratio(h, h_p, T, H, log_q)
    u = rng.random()
    if u == 0.0 or math.log(u) < log_alpha:
        if batch is None:
            cache = g_p if proposal.kind == "langevin" else None
            return ChainState(theta_p, mu_p, lp_p, FULL_BATCH_SEED, (n,), state.iteration + 1, True, cache)
        return ChainState(theta_p, mu_p, lp_p, batch.seed, batch.sizes, state.iteration + 1, True)
    cache = state.grad_cache
    if batch is None and proposal.kind == "langevin" and cache is None:
        cache = g
    return ChainState(theta, state.cached_mu_hat, state.log_prior, state.batch_seed, state.batch_sizes,
                      state.iteration + 1, False, cache)


def energy_from(n: int, mu: float, log_prior: float) -> float:
    return -n * mu - log_prior


def run_chain(
    state: ChainState,
    model: Model,
    data: Dataset,
    m: int,
    T: float,
    proposal: ProposalKernel,
    rng: np.random.Generator,
    burn_in: int,
    n_samples: int,
    counter: EvalCounter,
    controller: StepController | None = None,
    H: float = NO_TRUNCATION,
    keep_trace: bool = False,
    step_fn=None,
):
    """Drive ``mh_kernel_step`` (or ``step_fn``) for ``burn_in + n_samples`` iterations.

    Returns ``(final_state, samples, accepted, step_proposed, step_accepted,
    burn_in_accept_rate, trace, final_step)``. The controller adapts during burn-in only
    and is frozen afterwards.
    """
    d = state.theta.shape[0]
    samples = np.empty((n_samples, d))
    accepted = np.zeros(n_samples, dtype=bool)
    step_prop = np.empty(n_samples)
    step_acc = np.zeros(n_samples)
    trace = np.empty((burn_in + n_samples + 1, d)) if keep_trace else None
    if trace is not None:
        trace[0] = state.theta
    kernel = proposal
    burn_acc = 0
    step = step_fn or mh_kernel_step
    for it in range(burn_in + n_samples):
        if controller is not None:
            if it == burn_in:
                controller.freeze()
            if kernel.step != controller.step:
                kernel = ProposalKernel(controller.step, proposal.kind)
        prev = state.theta
        state = step(state, model, data, m, T, kernel, rng, counter, H)
        if trace is not None:
            trace[it + 1] = state.theta
        if it < burn_in:
            burn_acc += state.accepted
            if controller is not None:
                controller.record(state.accepted)
            continue
        j = it - burn_in
        samples[j] = state.theta
        accepted[j] = state.accepted
        step_prop[j] = kernel.step
        if state.accepted:
            step_acc[j] = float(np.linalg.norm(state.theta - prev))
    rate = burn_acc / burn_in if burn_in else float("nan")
    return state, samples, accepted, step_prop, step_acc, rate, trace, kernel.step
