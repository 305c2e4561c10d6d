"""Full-batch Metropolis-Hastings (plain and tempered) and SGLD."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chain import ChainState, init_state, mh_kernel_step, run_chain
from .core import ConfigError, Dataset, EvalCounter, Model, RngStream, SampleRun, as_generator
from .estimator import sample_batch
from .proposals import ProposalKernel, StepController


def mh_step(
    state: ChainState,
    model: Model,
    data: Dataset,
    T: float,
    proposal: ProposalKernel,
    rng: np.random.Generator,
    counter: EvalCounter | None = None,
) -> ChainState:
    """Full-data MH step on the posterior tempered at ``T`` (n evaluations)."""
    if not T >= 1.0:
        raise ConfigError(f"temperature must be >= 1, got {T}")
    return mh_kernel_step(state, model, data, data.n, T, proposal, rng, counter)


tempered_mh_step = mh_step


def run_mh(
    model: Model,
    data: Dataset,
    init_theta,
    proposal: ProposalKernel,
    rng: RngStream | np.random.Generator | int,
    n_samples: int,
    burn_in: int = 0,
    T: float = 1.0,
    controller: StepController | None = None,
    keep_trace: bool = False,
) -> SampleRun:
    """Full-batch MH; ``T > 1`` gives tempered MH."""
    if not T >= 1.0:
        raise ConfigError(f"temperature must be >= 1, got {T}")
    if proposal.needs_gradient and not model.has_gradient:
        raise ConfigError("Langevin proposals need a model with gradients")
    g = as_generator(rng)
    counter = EvalCounter()
    state = init_state(model, data, init_theta, data.n, g, counter)
    _, samples, acc, sp, sa, rate, trace, final_step = run_chain(
        state, model, data, data.n, T, proposal, g, burn_in, n_samples, counter, controller,
        keep_trace=keep_trace,
    )
    echo = {"sampler": "mh" if T == 1.0 else "tempered-mh", "T": T, "proposal": proposal.kind,
            "step": proposal.step, "burn_in": burn_in, "n_samples": n_samples}
    return SampleRun(samples, acc, sp, sa, counter, rate, final_step, echo, trace)


@dataclass
class SgldConfig:
    """SGLD settings.

    The step is either constant (``gamma == 0``) or follows
    eps_t = a * (b + t) ** (-gamma).
    """

    m: int
    a: float
    b: float = 1.0
    gamma: float = 1.0 / 3.0
    n_steps: int = 0

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ConfigError("SGLD batch size must be positive")
        if not (self.a > 0 and self.b > 0 and self.gamma >= 0):
            raise ConfigError("SGLD schedule needs a > 0, b > 0, gamma >= 0")

    @classmethod
    def constant(cls, m: int, eps: float, n_steps: int = 0) -> "SgldConfig":
        return cls(m, eps, 1.0, 0.0, n_steps)

    def step_size(self, t: int) -> float:
        return self.a * (self.b + t) ** (-self.gamma)


def sgld_step(
    theta: np.ndarray,
    t: int,
    model: Model,
    data: Dataset,
    config: SgldConfig,
    rng: np.random.Generator,
    counter: EvalCounter | None = None,
) -> np.ndarray:
    """theta + (eps^2/2) ((n/m) sum_batch grad l + grad log p0) + eps z; no correction."""
    if not model.has_gradient:
        raise ConfigError("SGLD needs a model with gradients")
    batch = sample_batch(data.n, config.m, rng)
    grad = model.grad_loglik_sum(theta, data.take(batch.indices))
    if counter is not None:
        counter.grad += config.m
    drift = (data.n / config.m) * grad + model.grad_log_prior(theta)
    eps = config.step_size(t)
    return theta + 0.5 * eps * eps * drift + eps * rng.standard_normal(theta.shape)


def run_sgld(
    model: Model,
    data: Dataset,
    config: SgldConfig,
    init_theta,
    rng: RngStream | np.random.Generator | int,
    burn_in: int = 0,
    thin: int = 1,
) -> SampleRun:
    """Run ``config.n_steps`` SGLD updates; every move counts as accepted."""
    g = as_generator(rng)
    theta = model.check_theta(init_theta).copy()
    counter = EvalCounter()
    keep = range(burn_in, config.n_steps, thin)
    samples = np.empty((len(keep), model.dim))
    steps = np.empty(len(keep))
    disp = np.empty(len(keep))
    j = 0
    for t in range(config.n_steps):
        new = sgld_step(theta, t, model, data, config, g, counter)
        if t >= burn_in and (t - burn_in) % thin == 0:
            samples[j] = new
            steps[j] = config.step_size(t)
            disp[j] = float(np.linalg.norm(new - theta))
            j += 1
        theta = new
        if not np.all(np.isfinite(theta)):
            raise ArithmeticError(f"SGLD diverged at step {t}")
    echo = {"sampler": "sgld", "m": config.m, "a": config.a, "b": config.b,
            "gamma": config.gamma, "n_steps": config.n_steps, "burn_in": burn_in, "thin": thin}
    final = config.step_size(max(config.n_steps - 1, 0))
    return SampleRun(samples, np.ones(len(keep), dtype=bool), steps, disp, counter, 1.0, final, echo)


def first_hit_sgld(
    model: Model,
    data: Dataset,
    config: SgldConfig,
    init_theta,
    rng,
    target: np.ndarray,
    radius: float,
) -> int | None:
    """First SGLD iteration whose state lies within ``radius`` of ``target``.

    Streams the chain without storing it, for long trapping checks.
    """
    g = as_generator(rng)
    theta = model.check_theta(init_theta).copy()
    target = np.asarray(target, dtype=float)
    r2 = radius * radius
    if float((theta - target) @ (theta - target)) <= r2:
        return 0
    for t in range(config.n_steps):
        theta = sgld_step(theta, t, model, data, config, g)
        diff = theta - target
        if float(diff @ diff) <= r2:
            return t + 1
        if not math.isfinite(diff[0]):
            raise ArithmeticError(f"SGLD diverged at step {t}")
    return None
