"""Proposal kernels and step-size adaptation."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import ConfigError, NonFiniteError

log = logging.getLogger(__name__)

KINDS = ("random-walk", "langevin")


@dataclass
class ProposalKernel:
    step: float
    kind: str = "random-walk"

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"unknown proposal kind {self.kind!r}; expected one of {KINDS}")
        if not self.step > 0:
            raise ConfigError(f"proposal step must be positive, got {self.step}")

    @property
    def needs_gradient(self) -> bool:
        return self.kind == "langevin"


def propose_random_walk(theta: np.ndarray, step: float, rng: np.random.Generator) -> tuple[np.ndarray, float]:
    """Gaussian random walk; symmetric, so the log q-ratio is 0."""
    return theta + step * rng.standard_normal(theta.shape), 0.0


def langevin_mean(theta: np.ndarray, step: float, grad: np.ndarray) -> np.ndarray:
    return theta + 0.5 * step * step * grad


def langevin_log_q_ratio(
    theta: np.ndarray,
    theta_p: np.ndarray,
    grad: np.ndarray,
    grad_p: np.ndarray,
    step: float,
) -> float:
    """log q(theta' -> theta) - log q(theta -> theta') for the Langevin kernel.

    Normalising constants cancel since both transitions share the step.
    """
    fwd = theta_p - langevin_mean(theta, step, grad)
    bwd = theta - langevin_mean(theta_p, step, grad_p)
    return float((fwd @ fwd - bwd @ bwd) / (2.0 * step * step))


def _check_grad(g: np.ndarray) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    if not np.all(np.isfinite(g)):
        raise NonFiniteError("non-finite gradient in Langevin proposal")
    return g


def propose_langevin(
    theta: np.ndarray,
    step: float,
    grad_log_target: Callable[[np.ndarray], np.ndarray],
    rng: np.random.Generator,
    z: np.ndarray | None = None,
) -> tuple[np.ndarray, float]:
    """theta' = theta + (step^2/2) g(theta) + step*z with its MALA log q-ratio.

    ``grad_log_target`` is evaluated at both endpoints; callers using
    stochastic gradients should close over a single batch.
    """
    g = _check_grad(grad_log_target(theta))
    if z is None:
        z = rng.standard_normal(theta.shape)
    theta_p = langevin_mean(theta, step, g) + step * z
    g_p = _check_grad(grad_log_target(theta_p))
    return theta_p, langevin_log_q_ratio(theta, theta_p, g, g_p, step)


@dataclass
class StepController:
    """Multiplicative step tuning towards an acceptance window.

    After every ``window`` recorded steps the step is multiplied by
    ``factor`` if the windowed acceptance exceeds ``high``, divided by it if
    below ``low``, and left alone otherwise.
    """

    step: float
    low: float = 0.2
    high: float = 0.5
    factor: float = 1.1
    window: int = 100
    frozen: bool = False
    history: list = field(default_factory=list)
    _count: int = 0
    _accepted: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.low < self.high <= 1.0:
            raise ConfigError("acceptance window must satisfy 0 <= low < high <= 1")
        if not self.factor > 1.0:
            raise ConfigError("adaptation factor must exceed 1")
        if self.window < 1:
            raise ConfigError("adaptation window must be positive")

    def record(self, accepted: bool) -> float:
        if self.frozen:
            return self.step
        self._count += 1
        self._accepted += bool(accepted)
        if self._count == self.window:
            adapt_step(self, self._accepted / self._count)
            self._count = self._accepted = 0
        return self.step

    def freeze(self) -> None:
        self.frozen = True


def adapt_step(controller: StepController, windowed_acceptance: float) -> float:
    """Apply one adaptation decision and return the (possibly) new step."""
    if controller.frozen:
        log.warning("step controller is frozen; ignoring adaptation request")
        return controller.step
    old = controller.step
    if windowed_acceptance > controller.high:
        controller.step = old * controller.factor
    elif windowed_acceptance < controller.low:
        controller.step = old / controller.factor
    if controller.step != old:
        controller.history.append((windowed_acceptance, old, controller.step))
        log.debug("step %.4g -> %.4g (acceptance %.3f)", old, controller.step, windowed_acceptance)
    return controller.step
