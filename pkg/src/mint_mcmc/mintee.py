"""MINTEE: a ladder of MINT chains coupled by equi-energy jumps.

Chain k targets exp(-max(h, H_k)/T_k) with batch size m_k; chain 0 uses the
full data at T = 1. Chains start in a staggered fashion from the hottest one
down, and after its own burn-in each chain files its states into energy rings
that the next colder chain draws jump proposals from.
"""
from __future__ import annotations

import bisect
import logging
import math
import threading
from dataclasses import dataclass, field

import numpy as np

from .chain import ChainState, init_state, log_accept_ratio, mh_kernel_step
from .core import ConfigError, Dataset, EvalCounter, Model, RngStream
from .estimator import MiniBatch, extend_batch, refine_mu_hat, regenerate
from .mint import tau_from_batch
from .proposals import ProposalKernel, StepController

log = logging.getLogger(__name__)


@dataclass
class LadderConfig:
    """Temperature, batch-size and energy schedule for K chains (index 0 coldest)."""

    n: int
    gamma: float
    alpha: float
    c: float
    m: list
    lam: list
    T: list
    H: list
    p_ee: float = 0.1
    burn_in: int = 1000
    n_samples: int = 1000
    proposal: str = "langevin"
    step_scale: float = 5e-4
    adapt: bool = True
    accept_window: tuple = (0.2, 0.5)
    adapt_factor: float = 1.1
    adapt_window: int = 100

    @property
    def K(self) -> int:
        return len(self.m)

    def initial_step(self, k: int) -> float:
        return self.step_scale * math.sqrt(self.T[k])

    def validate(self) -> None:
        K = self.K
        if not (len(self.lam) == len(self.T) == len(self.H) == K and K >= 1):
            raise ConfigError("ladder arrays must all have length K >= 1")
        if self.m[0] != self.n:
            raise ConfigError("chain 0 must use the full batch m_0 = n")
        if self.T[0] != 1.0:
            raise ConfigError("chain 0 must run at T = 1")
        if any(b >= a for a, b in zip(self.m, self.m[1:])):
            raise ConfigError(f"batch sizes must strictly decrease along the ladder: {self.m}")
        if any(b <= a for a, b in zip(self.T, self.T[1:])):
            raise ConfigError(f"temperatures must strictly increase along the ladder: {self.T}")
        if any(b <= a for a, b in zip(self.H, self.H[1:])):
            raise ConfigError("energy levels must strictly increase")
        if not 0 < self.p_ee < 1:
            raise ConfigError("p_ee must lie in (0, 1)")
        if self.burn_in < 0 or self.n_samples < 0:
            raise ConfigError("burn-in and sample count must be non-negative")

    def echo(self) -> dict:
        return {
            "n": self.n, "K": self.K, "gamma": self.gamma, "alpha": self.alpha, "c": self.c,
            "m": list(map(int, self.m)), "lambda": list(map(float, self.lam)),
            "T": list(map(float, self.T)), "H": list(map(float, self.H)), "p_ee": self.p_ee,
            "burn_in": self.burn_in, "n_samples": self.n_samples, "proposal": self.proposal,
            "step_scale": self.step_scale, "adapt": self.adapt,
            "accept_window": list(self.accept_window),
        }


def ladder_batch_sizes(n: int, K: int, m_min: int, gamma: float) -> list[int]:
    """[n, floor(m_min*gamma**(K-2)), ..., floor(m_min*gamma), m_min]."""
    if K == 1:
        return [n]
    return [n] + [int(m_min * gamma**j) for j in range(K - 2, -1, -1)]


def build_ladder(
    n: int,
    K: int,
    m_min: int,
    gamma: float,
    alpha: float,
    c: float = 10.0,
    H0: float = 0.0,
    **kw,
) -> LadderConfig:
    """Geometric batch ladder with implied temperatures and energy levels.

    Chain k >= 1 gets lambda_k = alpha * ln(m_k)/ln(n) and T_k = n**(1 - lambda_k);
    chain 0 runs on the full data at T = 1. Levels satisfy
    H_{k+1} = H_k + c * T_k.
    """
    if K < 1:
        raise ConfigError("need at least one chain")
    if not 0 < alpha < 1:
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha}")
    if not gamma > 1:
        raise ConfigError(f"gamma must exceed 1, got {gamma}")
    if not c > 0:
        raise ConfigError("energy spacing constant must be positive")
    if K > 1:
        if m_min < 2:
            raise ConfigError("smallest batch must hold at least 2 points")
        if m_min * gamma ** (K - 1) > n * (1 + 1e-9):
            raise ConfigError(
                f"ladder too long: m_min * gamma**(K-1) = {m_min * gamma ** (K - 1):.6g} exceeds n = {n}"
            )
    m = ladder_batch_sizes(n, K, m_min, gamma)
    lam = [1.0] + [alpha * tau_from_batch(mk, n) for mk in m[1:]]
    T = [1.0] + [float(n) ** (1.0 - lk) for lk in lam[1:]]
    H = [float(H0)]
    for k in range(K - 1):
        H.append(H[-1] + c * T[k])
    cfg = LadderConfig(n, gamma, alpha, c, m, lam, T, H, **kw)
    cfg.validate()
    return cfg


def ring_index(h_hat: float, H) -> int:
    """Level j with H_j <= h < H_{j+1}; energies below H_0 map to 0."""
    return max(bisect.bisect_right(H, h_hat) - 1, 0)


def truncated_log_density(h_hat: float, H_k: float, T_k: float) -> float:
    return -max(h_hat, H_k) / T_k


def energy_estimate(model: Model, data: Dataset, theta, batch: MiniBatch | np.ndarray, counter=None) -> float:
    """-n * mu_hat(theta) - log pi_0(theta) on the given batch."""
    from .estimator import mu_hat

    return -data.n * mu_hat(model, data, batch, theta, counter) - model.log_prior(theta)


class EnergyRing:
    """Append-only store of states bucketed by estimated energy level.

    One instance holds all K levels of a single chain. Entries keep the
    batch lineage so jump targets can be refined reproducibly.
    """

    def __init__(self, H, dim: int, capacity: int = 1024):
        self.H = list(H)
        self.dim = dim
        K = len(self.H)
        self._theta = [np.empty((capacity, dim)) for _ in range(K)]
        self._vals = [np.empty((capacity, 3)) for _ in range(K)]  # h, mu_hat, log_prior
        self._seed = [np.empty(capacity, dtype=np.uint64) for _ in range(K)]
        self._lin = [np.empty(capacity, dtype=np.int32) for _ in range(K)]
        self._len = [0] * K
        self._lineages: list[tuple[int, ...]] = []
        self._lineage_ids: dict[tuple[int, ...], int] = {}
        self._lock = threading.Lock()

    @property
    def K(self) -> int:
        return len(self.H)

    def __len__(self) -> int:
        return sum(self._len)

    def level_size(self, j: int) -> int:
        return self._len[j]

    def sizes(self) -> list[int]:
        return list(self._len)

    def append(self, theta, h_hat: float, mu_hat: float, log_prior: float, seed: int, sizes: tuple) -> int:
        j = ring_index(h_hat, self.H)
        if not (self.H[j] <= h_hat or j == 0) or (j + 1 < self.K and h_hat >= self.H[j + 1]):
            raise AssertionError(f"ring integrity violated: h={h_hat} filed at level {j}")
        with self._lock:
            i = self._len[j]
            if i == len(self._vals[j]):
                self._grow(j)
            lid = self._lineage_ids.get(sizes)
            if lid is None:
                lid = self._lineage_ids[sizes] = len(self._lineages)
                self._lineages.append(sizes)
            self._theta[j][i] = theta
            self._vals[j][i] = (h_hat, mu_hat, log_prior)
            self._seed[j][i] = seed
            self._lin[j][i] = lid
            self._len[j] = i + 1
        return j

    def _grow(self, j: int) -> None:
        cap = 2 * len(self._vals[j])
        for store in (self._theta, self._vals, self._seed, self._lin):
            old = store[j]
            new = np.empty((cap,) + old.shape[1:], dtype=old.dtype)
            new[: len(old)] = old
            store[j] = new

    def entry(self, j: int, i: int) -> dict:
        if not 0 <= i < self._len[j]:
            raise IndexError(f"ring level {j} has {self._len[j]} entries")
        h, mu, lp = self._vals[j][i]
        return {
            "theta": self._theta[j][i].copy(), "h": float(h), "mu_hat": float(mu),
            "log_prior": float(lp), "seed": int(self._seed[j][i]),
            "sizes": self._lineages[int(self._lin[j][i])],
        }

    def level_energies(self, j: int) -> np.ndarray:
        return self._vals[j][: self._len[j], 0].copy()

    def level_thetas(self, j: int) -> np.ndarray:
        return self._theta[j][: self._len[j]].copy()


@dataclass
class JumpResult:
    state: ChainState
    accepted: bool
    log_ratio: float
    refined_h: float


def ee_jump(
    state: ChainState,
    k: int,
    upper_ring: EnergyRing,
    ladder: LadderConfig,
    model: Model,
    data: Dataset,
    rng: np.random.Generator,
    counter: EvalCounter | None = None,
) -> JumpResult | None:
    """Equi-energy jump for chain ``k`` using chain k+1's rings.

    Returns ``None`` when the matching ring is empty; the caller then makes
    an ordinary MH move instead.
    """
    n = data.n
    h = state.energy(n)
    j = ring_index(h, ladder.H)
    size = upper_ring.level_size(j)
    if size == 0:
        return None
    e = upper_ring.entry(j, int(rng.integers(size)))
    theta_p = e["theta"]
    m_k = ladder.m[k]
    if e["sizes"][-1] != ladder.m[k + 1]:
        raise AssertionError("ring entry batch size does not match its chain")
    base = MiniBatch(regenerate(e["seed"], n, e["sizes"]), e["seed"], n, e["sizes"])
    ext = extend_batch(base, m_k, n)
    mu_p = refine_mu_hat(model, data, e["mu_hat"], base, ext, theta_p, counter)
    lp_p = e["log_prior"]
    h_p = -n * mu_p - lp_p
    Tk, Tk1 = ladder.T[k], ladder.T[k + 1]
    Hk, Hk1 = ladder.H[k], ladder.H[k + 1]
    log_r = log_accept_ratio(h, h_p, Tk, Hk) - log_accept_ratio(h, h_p, Tk1, Hk1)
    u = rng.random()
    if u == 0.0 or math.log(u) < log_r:
        new = ChainState(theta_p, mu_p, lp_p, ext.seed, ext.sizes, state.iteration + 1, True)
        return JumpResult(new, True, log_r, h_p)
    return JumpResult(ChainState(state.theta, state.cached_mu_hat, state.log_prior, state.batch_seed,
                                 state.batch_sizes, state.iteration + 1, False), False, log_r, h_p)


def ee_log_ratio(h: float, h_p: float, T_k: float, T_k1: float, H_k: float, H_k1: float) -> float:
    """log of pi_k(theta') pi_{k+1}(theta) / (pi_k(theta) pi_{k+1}(theta')) on truncated energies."""
    return log_accept_ratio(h, h_p, T_k, H_k) - log_accept_ratio(h, h_p, T_k1, H_k1)


@dataclass
class ChainStats:
    steps: int = 0
    mh_steps: int = 0
    mh_accepted: int = 0
    jumps: int = 0
    jumps_accepted: int = 0
    fallbacks: int = 0
    ring_appends: int = 0
    first_step: int | None = None
    first_append: int | None = None
    post_burn_accepted: int = 0
    post_burn_steps: int = 0


@dataclass
class MinteeRun:
    """Result of :func:`run_mintee`; ``samples[k]`` are chain k's kept states."""

    ladder: LadderConfig
    samples: list
    accepted: list
    step_accepted: list
    rings: list
    ring_counts: np.ndarray
    stats: list
    evals: list
    window_evals: list
    final_steps: list
    iterations: int
    config: dict = field(default_factory=dict)

    @property
    def total_evals(self) -> int:
        return sum(c.loglik for c in self.evals)

    @property
    def window_total_evals(self) -> int:
        return sum(c.loglik for c in self.window_evals)


class _Chain:
    def __init__(self, k, ladder, model, data, theta0, rng: np.random.Generator):
        self.k = k
        self.rng = rng
        self.counter = EvalCounter()
        self.window_counter = EvalCounter()
        self.state = init_state(model, data, theta0, ladder.m[k], rng, self.counter)
        self.kernel = ProposalKernel(ladder.initial_step(k), ladder.proposal)
        lo, hi = ladder.accept_window
        self.controller = (
            StepController(self.kernel.step, lo, hi, ladder.adapt_factor, ladder.adapt_window)
            if ladder.adapt else None
        )
        self.ring = EnergyRing(ladder.H, model.dim)
        self.stats = ChainStats()
        self.samples: list = []
        self.accepted: list = []
        self.step_accepted: list = []


def _chain_start(k: int, ladder: LadderConfig) -> int:
    return (ladder.K - 1 - k) * (ladder.burn_in + ladder.n_samples)


def run_mintee(
    model: Model,
    data: Dataset,
    ladder: LadderConfig,
    init_thetas,
    rng: RngStream | int,
    keep: str = "window",
    parallel: bool = False,
    progress: bool = False,
) -> MinteeRun:
    """Run the staged MINTEE schedule until chain 0 holds ``n_samples`` states.

    Chain k uses the random stream ``RngStream(seed, k)``. ``keep`` selects
    which states are returned per chain: ``"window"`` keeps the last
    ``n_samples`` iterations (when every chain is post-burn-in), ``"all"``
    keeps every post-burn-in state. ``parallel`` runs the chains of each
    sweep on threads; rings are then read while being written, so bit-level
    reproducibility is not guaranteed.
    """
    ladder.validate()
    if ladder.n != data.n:
        raise ConfigError(f"ladder built for n={ladder.n}, dataset has n={data.n}")
    if ladder.proposal == "langevin" and not model.has_gradient:
        raise ConfigError("Langevin proposals need a model with gradients")
    if keep not in ("window", "all"):
        raise ConfigError("keep must be 'window' or 'all'")
    stream = rng if isinstance(rng, RngStream) else RngStream(int(rng))
    K, B, N = ladder.K, ladder.burn_in, ladder.n_samples
    init = np.asarray(init_thetas, dtype=float)
    if init.ndim == 1:
        init = np.tile(init, (K, 1))
    if init.shape != (K, model.dim):
        raise ConfigError(f"init_thetas must have shape ({K}, {model.dim})")
    chains = [_Chain(k, ladder, model, data, init[k], stream.child(k).generator()) for k in range(K)]
    total = K * (B + N)
    window_start = total - N

    def advance(ch: _Chain, it: int) -> None:
        k = ch.k
        local = it - _chain_start(k, ladder)
        if local < 0:
            return
        st = ch.stats
        if st.first_step is None:
            st.first_step = it
        if ch.controller is not None:
            if local == B:
                ch.controller.freeze()
            if ch.kernel.step != ch.controller.step:
                ch.kernel = ProposalKernel(ch.controller.step, ladder.proposal)
        counter = ch.window_counter if it >= window_start else None
        before = ch.counter.loglik, ch.counter.grad
        prev = ch.state.theta
        jumped = False
        if k < K - 1 and ch.rng.random() < ladder.p_ee:
            res = ee_jump(ch.state, k, chains[k + 1].ring, ladder, model, data, ch.rng, ch.counter)
            if res is None:
                st.fallbacks += 1
            else:
                jumped = True
                st.jumps += 1
                st.jumps_accepted += res.accepted
                ch.state = res.state
        if not jumped:
            ch.state = mh_kernel_step(ch.state, model, data, ladder.m[k], ladder.T[k], ch.kernel,
                                      ch.rng, ch.counter, ladder.H[k])
            st.mh_steps += 1
            st.mh_accepted += ch.state.accepted
            if ch.controller is not None and local < B:
                ch.controller.record(ch.state.accepted)
        if counter is not None:
            counter.loglik += ch.counter.loglik - before[0]
            counter.grad += ch.counter.grad - before[1]
        st.steps += 1
        if local >= B:
            s = ch.state
            j = ch.ring.append(s.theta, s.energy(data.n), s.cached_mu_hat, s.log_prior, s.batch_seed, s.batch_sizes)
            st.ring_appends += 1
            if st.first_append is None:
                st.first_append = it
            st.post_burn_steps += 1
            st.post_burn_accepted += s.accepted
            if keep == "all" or it >= window_start:
                ch.samples.append(s.theta)
                ch.accepted.append(s.accepted)
                ch.step_accepted.append(float(np.linalg.norm(s.theta - prev)) if s.accepted else 0.0)

    pool = None
    if parallel and K > 1:
        from concurrent.futures import ThreadPoolExecutor

        pool = ThreadPoolExecutor(max_workers=K)
    try:
        for it in range(total):
            if pool is not None:
                list(pool.map(lambda ch: advance(ch, it), reversed(chains)))
            else:
                for ch in reversed(chains):
                    advance(ch, it)
            if progress and it % 10000 == 0:
                log.info("iteration %d / %d", it, total)
    finally:
        if pool is not None:
            pool.shutdown()

    return MinteeRun(
        ladder=ladder,
        samples=[np.array(ch.samples).reshape(-1, model.dim) for ch in chains],
        accepted=[np.array(ch.accepted, dtype=bool) for ch in chains],
        step_accepted=[np.array(ch.step_accepted) for ch in chains],
        rings=[ch.ring for ch in chains],
        ring_counts=np.array([ch.ring.sizes() for ch in chains]),
        stats=[ch.stats for ch in chains],
        evals=[ch.counter for ch in chains],
        window_evals=[ch.window_counter for ch in chains],
        final_steps=[ch.kernel.step for ch in chains],
        iterations=total,
        config=ladder.echo(),
    )


def cost_bound(ladder: LadderConfig) -> float:
    """Per-datum evaluation budget N n (gamma/(gamma-1) + 1 + p_ee) for N samples per chain."""
    g = ladder.gamma
    return ladder.n_samples * ladder.n * (g / (g - 1) + 1 + ladder.p_ee)


def pilot_energy_floor(
    model: Model,
    data: Dataset,
    starts,
    c: float,
    T0: float = 1.0,
    counter=None,
    restarts: int = 8,
    jitter: float = 1.0,
    seed: int = 0,
) -> float:
    """Lower energy bound for H_0: best full-data energy after local
    optimisation, minus a 2*c*T0 margin.

    Each start is optimised as given and from ``restarts`` jittered copies, so
    a start on a symmetry saddle (the origin of a symmetric mixture) does not
    stall the search there.
    """
    from scipy.optimize import minimize

    def h(theta):
        if counter is not None:
            counter.loglik += data.n
        return -data.n * (model.loglik(theta, data.points).mean()) - model.log_prior(theta)

    def grad(theta):
        if counter is not None:
            counter.grad += data.n
        return -model.grad_loglik_sum(theta, data.points) - model.grad_log_prior(theta)

    g = np.random.default_rng(seed)
    best = math.inf
    for s in np.atleast_2d(np.asarray(starts, dtype=float)):
        for r in range(restarts + 1):
            x0 = s if r == 0 else s + jitter * g.standard_normal(s.shape)
            res = minimize(h, x0, jac=grad if model.has_gradient else None, method="L-BFGS-B")
            if math.isfinite(res.fun):
                best = min(best, float(res.fun))
    if not math.isfinite(best):
        raise ArithmeticError("pilot optimisation found no finite energy")
    return best - 2 * c * T0
