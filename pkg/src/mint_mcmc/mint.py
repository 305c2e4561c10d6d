"""MINT: Metropolis-Hastings with a mini-batch estimate of the log-likelihood.

With batch size m = n**tau and likelihood scale n**lam (lam < tau), the
chain leaves (asymptotically) the posterior tempered at T = n**(1 - lam)
invariant. The batch estimate at the current state is part of the state and
is only replaced when a proposal is accepted.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .chain import ChainState, init_state, mh_kernel_step, run_chain
from .core import ConfigError, Dataset, EvalCounter, Model, RngStream, SampleRun, as_generator
from .proposals import ProposalKernel, StepController


def tau_from_batch(m: int, n: int) -> float:
    """Batch exponent tau = ln m / ln n."""
    if n <= 1:
        raise ConfigError("tau needs n > 1")
    if m <= 1 or m > n:
        raise ConfigError(f"tau needs 1 < m <= n, got m={m}, n={n}")
    return math.log(m) / math.log(n)


def temperature(n: int, lam: float) -> float:
    """Implied temperature n**(1 - lam)."""
    if not lam < 1:
        raise ConfigError(f"lambda must be < 1, got {lam}")
    return float(n) ** (1.0 - lam)


@dataclass
class MintConfig:
    """MINT hyper-parameters.

    Build with :meth:`from_alpha` or :meth:`from_lambda`; ``alpha = lam/tau``.
    Setting ``naive_scale`` replaces n**lam by n in the acceptance exponent
    (the mis-scaled subsampling rule); it exists only as a negative control.
    """

    n: int
    m: int
    lam: float
    proposal: ProposalKernel
    burn_in: int = 0
    n_samples: int = 0
    adapt: bool = False
    accept_window: tuple[float, float] = (0.2, 0.5)
    adapt_factor: float = 1.1
    adapt_window: int = 100
    naive_scale: bool = False
    tau: float = field(init=False)

    def __post_init__(self) -> None:
        if not 1 < self.m <= self.n:
            raise ConfigError(f"MINT needs 1 < m <= n, got m={self.m}, n={self.n}")
        self.tau = tau_from_batch(self.m, self.n)
        if not 0 < self.lam < self.tau:
            raise ConfigError(f"lambda must satisfy 0 < lambda < tau = {self.tau:.6g}, got {self.lam}")
        if self.burn_in < 0 or self.n_samples < 0:
            raise ConfigError("burn-in and sample count must be non-negative")

    @classmethod
    def from_alpha(cls, n: int, m: int, alpha: float, proposal: ProposalKernel, **kw) -> "MintConfig":
        if not 0 < alpha < 1:
            raise ConfigError(f"alpha must lie in (0, 1), got {alpha}")
        return cls(n, m, alpha * tau_from_batch(m, n), proposal, **kw)

    @property
    def alpha(self) -> float:
        return self.lam / self.tau

    @property
    def T(self) -> float:
        return temperature(self.n, self.lam)

    @property
    def kernel_temperature(self) -> float:
        return 1.0 if self.naive_scale else self.T

    @property
    def likelihood_scale(self) -> float:
        """Factor multiplying the batch-mean difference in the acceptance exponent."""
        return self.n / self.kernel_temperature

    def echo(self) -> dict:
        return {
            "n": self.n, "m": self.m, "tau": self.tau, "lambda": self.lam,
            "alpha": self.alpha, "T": self.T, "proposal": self.proposal.kind,
            "step": self.proposal.step, "burn_in": self.burn_in,
            "n_samples": self.n_samples, "adapt": self.adapt,
            "naive_scale": self.naive_scale,
        }


def mint_log_accept(
    n: int, lam: float, mu_hat_new: float, mu_hat_old: float,
    log_prior_new: float = 0.0, log_prior_old: float = 0.0, log_q_ratio: float = 0.0,
) -> float:
    """Acceptance exponent n**lam (mu'-mu) + (log p0' - log p0)/T + log q-ratio."""
    T = temperature(n, lam)
    return n**lam * (mu_hat_new - mu_hat_old) + (log_prior_new - log_prior_old) / T + log_q_ratio


def mint_step(
    state: ChainState,
    model: Model,
    data: Dataset,
    config: MintConfig,
    rng: np.random.Generator,
    counter: EvalCounter | None = None,
) -> ChainState:
    """One MINT iteration: one fresh batch, m likelihood evaluations."""
    return mh_kernel_step(state, model, data, config.m, config.kernel_temperature, config.proposal, rng, counter)


def init_mint(model, data, config: MintConfig, init_theta, rng, counter=None) -> ChainState:
    return init_state(model, data, init_theta, config.m, rng, counter)


def run_mint(
    model: Model,
    data: Dataset,
    config: MintConfig,
    init_theta,
    rng: RngStream | np.random.Generator | int,
    keep_trace: bool = False,
) -> SampleRun:
    """Run ``burn_in + n_samples`` MINT iterations and keep the post-burn-in states."""
    if config.n != data.n:
        raise ConfigError(f"config built for n={config.n}, dataset has n={data.n}")
    if config.proposal.needs_gradient and not model.has_gradient:
        raise ConfigError("Langevin proposals need a model with gradients")
    g = as_generator(rng)
    counter = EvalCounter()
    state = init_mint(model, data, config, init_theta, g, counter)
    controller = None
    if config.adapt:
        lo, hi = config.accept_window
        controller = StepController(config.proposal.step, lo, hi, config.adapt_factor, config.adapt_window)
    _, samples, acc, sp, sa, rate, trace, final_step = run_chain(
        state, model, data, config.m, config.kernel_temperature, config.proposal, g,
        config.burn_in, config.n_samples, counter, controller, keep_trace=keep_trace,
    )
    return SampleRun(samples, acc, sp, sa, counter, rate, final_step, config.echo(), trace)


@dataclass
class AugmentationScratch:
    """Inputs for checking that the per-state noise variances drop out of the
    augmented-space acceptance ratio.

    ``t`` and ``t_prime`` are scaled estimator deviations sqrt(m)(mu_hat - mu);
    the sigma values are the (assumed) variances of the Gaussian laws they
    are drawn from.
    """

    n: int
    tau: float
    lam: float
    sigma_sq_theta: float
    sigma_sq_theta_prime: float
    t: float
    t_prime: float

    @property
    def m(self) -> float:
        return self.n**self.tau

    @property
    def epsilon(self) -> float:
        return self.n ** (self.lam - self.tau / 2)


def _log_normal_pdf(t: float, var: float) -> float:
    return -0.5 * (math.log(2 * math.pi * var) + t * t / var)


def cancellation_identity_check(
    scratch: AugmentationScratch,
    mu_hat_pair: tuple[float, float],
    q_ratio: float,
) -> tuple[float, float]:
    """Augmented-space log MH ratio versus the reduced mini-batch log ratio.

    The full ratio is assembled from the joint density
    g(theta) exp(eps*t) phi_theta(t), with g = exp(n**lam * mu), and the
    proposal q(theta->theta') phi_theta'(t'). The reduced ratio is
    n**lam (mu_hat' - mu_hat) + log q-ratio.
    """
    s = scratch
    scale = s.n**s.lam
    mh, mh_p = mu_hat_pair
    root_m = math.sqrt(s.m)
    mu, mu_p = mh - s.t / root_m, mh_p - s.t_prime / root_m
    log_phi = _log_normal_pdf(s.t, s.sigma_sq_theta)
    log_phi_p = _log_normal_pdf(s.t_prime, s.sigma_sq_theta_prime)
    log_f = scale * mu + s.epsilon * s.t + log_phi
    log_f_p = scale * mu_p + s.epsilon * s.t_prime + log_phi_p
    # q_ratio = log q(theta'->theta) - log q(theta->theta'); t' is drawn from phi_theta'
    full = (log_f_p + log_phi) - (log_f + log_phi_p) + q_ratio
    reduced = scale * (mh_p - mh) + q_ratio
    return full, reduced
