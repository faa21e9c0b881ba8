"""Random-walk Metropolis estimation of the fluctuating variance theta.

Two acceptance rules are available. ``STANDARD`` is ordinary Metropolis
(accept with probability min(1, rho)) and samples the posterior. ``GREEDY``
accepts only strict improvements (rho > 1) and behaves as a stochastic
hill-climber. Either rule may be followed by a momentum gradient nudge of the
retained state; the nudge is off by default for STANDARD because it breaks
detailed balance.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .densities import LOG_2PI, ModelSpec, SufficientStats, dlog_likelihood

THETA_FLOOR = 1e-12


class AcceptanceMode(enum.Enum):
    STANDARD = "standard"
    GREEDY = "greedy"


class McmcError(ArithmeticError):
    pass


@dataclass(frozen=True)
class McmcConfig:
    iterations: int = 5000
    proposal_step: float | None = None      # None: 0.1 * initial theta
    learning_rate: float | None = None      # None: 1e-3 greedy, 0 standard
    momentum: float = 0.9
    acceptance_mode: AcceptanceMode = AcceptanceMode.STANDARD
    burn_in: int = 1000
    seed: int = 0
    initial_theta: float | None = None      # None: mean squared deviation of the data
    theta_floor: float = THETA_FLOOR

    def __post_init__(self):
        if not self.iterations > self.burn_in >= 0:
            raise ValueError("need iterations > burn_in >= 0")
        if self.proposal_step is not None and not self.proposal_step > 0:
            raise ValueError("proposal_step must be > 0")
        if self.learning_rate is not None and not self.learning_rate >= 0:
            raise ValueError("learning_rate must be >= 0")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must lie in [0, 1)")
        if self.initial_theta is not None and not self.initial_theta > 0:
            raise ValueError("initial_theta must be > 0")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def resolved(self, stats: SufficientStats) -> "McmcConfig":
        """Fill data-dependent defaults."""
        theta0 = self.initial_theta
        if theta0 is None:
            theta0 = stats.mean_sq_dev if stats.mean_sq_dev > 0 else 1.0
        lr = self.learning_rate
        if lr is None:
            lr = 1e-3 if self.acceptance_mode is AcceptanceMode.GREEDY else 0.0
        step = self.proposal_step if self.proposal_step is not None else 0.1 * theta0
        return replace(self, initial_theta=theta0, learning_rate=lr, proposal_step=step)


class LogPosterior:
    """Unnormalised log-posterior of theta: Gaussian likelihood plus prior log-density."""

    def __init__(self, stats: SufficientStats, model: ModelSpec):
        self.stats = stats
        self.model = model
        self._law = model.law
        self._half_n = 0.5 * stats.n
        self._half_ss = 0.5 * stats.n * stats.mean_sq_dev

    @classmethod
    def from_data(cls, data, model: ModelSpec) -> "LogPosterior":
        return cls(SufficientStats.from_data(data, model.mu), model)

    def __call__(self, theta: float) -> float:
        if not theta > 0:
            raise ValueError("theta must be > 0")
        loglik = -self._half_n * (LOG_2PI + math.log(theta)) - self._half_ss / theta
        return loglik + self._law.log_pdf_scalar(theta)

    def grad(self, theta: float) -> float:
        return dlog_likelihood(self.stats, theta) + self._law.dlog_pdf(theta)


def log_unnormalized_posterior(theta: float, data, model: ModelSpec) -> float:
    return LogPosterior.from_data(data, model)(theta)


@dataclass(frozen=True)
class ChainState:
    theta: float
    velocity: float
    log_posterior: float


@dataclass(frozen=True)
class StepRecord:
    iteration: int
    theta_proposed: float
    theta_current: float
    log_posterior: float
    accepted: bool


def mh_step(state: ChainState, target: LogPosterior, config: McmcConfig,
            rng: np.random.Generator, iteration: int = 0) -> tuple[ChainState, StepRecord]:
    """One propose / accept / nudge cycle. ``config`` must already be resolved."""
    z = rng.standard_normal()
    u = rng.random()
    floor = config.theta_floor
    proposal = max(abs(state.theta + config.proposal_step * z), floor)
    lp_prop = target(proposal)
    log_rho = lp_prop - state.log_posterior
    if config.acceptance_mode is AcceptanceMode.GREEDY:
        accepted = log_rho > 0
    else:
        accepted = log_rho >= 0 or math.log(u) < log_rho
    theta, lp = (proposal, lp_prop) if accepted else (state.theta, state.log_posterior)

    velocity = state.velocity
    if config.learning_rate > 0:
        # gradient in log(theta) per observation keeps the nudge scale-free
        g = theta * target.grad(theta) / target.stats.n
        if not math.isfinite(g):
            raise McmcError(f"non-finite gradient at theta={theta!r}")
        velocity = config.momentum * velocity + g
        theta = max(theta * math.exp(config.learning_rate * velocity), floor)
        lp = target(theta)
    if not math.isfinite(lp):
        raise McmcError(f"non-finite log-posterior at theta={theta!r}")
    return (ChainState(theta, velocity, lp),
            StepRecord(iteration, proposal, theta, lp, accepted))


@dataclass(frozen=True, eq=False)
class McmcTrace:
    iteration: np.ndarray
    theta_proposed: np.ndarray
    theta_current: np.ndarray
    log_posterior: np.ndarray
    accepted: np.ndarray
    config: McmcConfig
    model: ModelSpec

    def __len__(self) -> int:
        return self.iteration.size

    @property
    def records(self) -> list[StepRecord]:
        return [StepRecord(int(i), float(p), float(c), float(l), bool(a))
                for i, p, c, l, a in zip(self.iteration, self.theta_proposed,
                                         self.theta_current, self.log_posterior, self.accepted)]

    def identical(self, other: "McmcTrace") -> bool:
        return all(np.array_equal(getattr(self, f), getattr(other, f))
                   for f in ("iteration", "theta_proposed", "theta_current",
                             "log_posterior", "accepted"))

    def to_csv(self) -> str:
        rows = ["iter,theta_proposed,theta_current,log_posterior,accepted"]
        rows.extend(
            f"{i},{p!r},{c!r},{l!r},{int(a)}"
            for i, p, c, l, a in zip(self.iteration.tolist(), self.theta_proposed.tolist(),
                                     self.theta_current.tolist(), self.log_posterior.tolist(),
                                     self.accepted.tolist()))
        return "\n".join(rows) + "\n"


def run_chain(data, model: ModelSpec, config: McmcConfig) -> McmcTrace:
    target = data if isinstance(data, LogPosterior) else LogPosterior.from_data(data, model)
    cfg = config.resolved(target.stats)
    rng = np.random.default_rng(cfg.seed)
    n = cfg.iterations
    it = np.arange(1, n + 1)
    prop = np.empty(n)
    cur = np.empty(n)
    lps = np.empty(n)
    acc = np.empty(n, dtype=bool)
    state = ChainState(cfg.initial_theta, 0.0, target(cfg.initial_theta))
    for k in range(n):
        state, rec = mh_step(state, target, cfg, rng, k + 1)
        prop[k], cur[k], lps[k], acc[k] = rec.theta_proposed, rec.theta_current, rec.log_posterior, rec.accepted
    return McmcTrace(it, prop, cur, lps, acc, cfg, model)


def chain_seed(seed: int, index: int) -> int:
    return (seed + index) % 2**64


def run_chains(data, model: ModelSpec, config: McmcConfig, n_chains: int,
               threads: int = 1) -> list[McmcTrace]:
    """Independent chains seeded ``seed + index``, returned in index order."""
    target = LogPosterior.from_data(data, model)
    configs = [replace(config, seed=chain_seed(config.seed, i)) for i in range(n_chains)]
    if threads <= 1:
        return [run_chain(target, model, c) for c in configs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda c: run_chain(target, model, c), configs))


def batch_means_stderr(x: np.ndarray) -> float:
    """Monte-Carlo standard error of the mean of a correlated chain (batch means)."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 2 or np.all(x == x[0]):
        return 0.0
    b = max(1, int(math.sqrt(n)))
    k = n // b
    if k < 2:
        return float(np.std(x, ddof=1) / math.sqrt(n))
    means = x[: k * b].reshape(k, b).mean(axis=1)
    return float(np.std(means, ddof=1) / math.sqrt(k))


def effective_sample_size(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    se = batch_means_stderr(x)
    if se == 0.0:
        return float(x.size)
    return float(min(x.size, np.var(x, ddof=1) / se**2))


def estimate_theta(trace: McmcTrace) -> tuple[float, float]:
    """Point estimate and standard error from the post-burn-in part of a trace."""
    burn = trace.config.burn_in
    kept = trace.theta_current[burn:]
    if trace.config.acceptance_mode is AcceptanceMode.GREEDY:
        # a converged hill-climber stops accepting; any move at all suffices,
        # whether an accepted proposal or a gradient nudge
        moved = np.any(trace.accepted) or np.any(trace.theta_current != trace.config.initial_theta)
        if kept.size == 0 or not moved:
            raise McmcError("greedy chain never moved from its initial state")
        return float(kept[-1]), 0.0
    if kept.size == 0 or not np.any(trace.accepted[burn:]):
        raise McmcError("no accepted states after burn-in")
    return float(np.mean(kept)), batch_means_stderr(kept)
