"""Prior laws for the fluctuating variance, Gaussian likelihood, conjugate updates.

Everything is evaluated in log space; callers exponentiate only for display.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import gammaln

LOG_2PI = math.log(2.0 * math.pi)


def _check_positive(**params):
    for name, v in params.items():
        if not (math.isfinite(v) and v > 0):
            raise ValueError(f"{name} must be finite and > 0, got {v!r}")


def _check_theta(theta):
    th = np.asarray(theta, dtype=float)
    if np.any(~(th > 0)):
        raise ValueError("theta must be > 0")
    return th


def _scalar_or_array(x):
    return float(x) if np.ndim(x) == 0 else x


# --- laws -------------------------------------------------------------------

@dataclass(frozen=True)
class IGa:
    """Inverse-Gamma law: shape ``alpha``, scale ``beta``."""

    alpha: float
    beta: float

    def __post_init__(self):
        _check_positive(alpha=self.alpha, beta=self.beta)

    name = "iga"

    def log_pdf(self, theta):
        return igamma_log_pdf(theta, self.alpha, self.beta)

    def log_pdf_scalar(self, theta: float) -> float:
        return (self.alpha * math.log(self.beta) - math.lgamma(self.alpha)
                - (self.alpha + 1.0) * math.log(theta) - self.beta / theta)

    def dlog_pdf(self, theta: float) -> float:
        return -(self.alpha + 1.0) / theta + self.beta / (theta * theta)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        return self.beta / rng.standard_gamma(self.alpha, size)

    def params(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta}


@dataclass(frozen=True)
class LogN:
    """Log-normal law with log-location fixed at 0 and scale ``s``."""

    s: float

    def __post_init__(self):
        _check_positive(s=self.s)

    name = "logn"

    def log_pdf(self, theta):
        return lognormal_log_pdf(theta, self.s)

    def log_pdf_scalar(self, theta: float) -> float:
        lt = math.log(theta)
        return -math.log(self.s) - lt - 0.5 * LOG_2PI - lt * lt / (2.0 * self.s * self.s)

    def dlog_pdf(self, theta: float) -> float:
        return -1.0 / theta - math.log(theta) / (self.s * self.s * theta)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        return np.exp(self.s * rng.standard_normal(size))

    def params(self) -> dict:
        return {"s": self.s}


@dataclass(frozen=True)
class ScaledInvChi2:
    """Scaled inverse chi-squared law: ``nu0`` degrees of freedom, scale ``sigma0_sq``."""

    nu0: float
    sigma0_sq: float

    def __post_init__(self):
        _check_positive(nu0=self.nu0, sigma0_sq=self.sigma0_sq)

    name = "sichi2"

    def as_iga(self) -> IGa:
        return IGa(self.nu0 / 2.0, self.nu0 * self.sigma0_sq / 2.0)

    def log_pdf(self, theta):
        return scaled_inv_chi2_log_pdf(theta, self.nu0, self.sigma0_sq)

    def log_pdf_scalar(self, theta: float) -> float:
        return self.as_iga().log_pdf_scalar(theta)

    def dlog_pdf(self, theta: float) -> float:
        return self.as_iga().dlog_pdf(theta)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        return self.as_iga().sample(rng, size)

    def params(self) -> dict:
        return {"nu0": self.nu0, "sigma0_sq": self.sigma0_sq}


Law = Union[IGa, LogN, ScaledInvChi2]


@dataclass(frozen=True)
class ModelSpec:
    """One superstatistics law for theta plus the known likelihood mean ``mu``."""

    law: Law
    mu: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.mu):
            raise ValueError("mu must be finite")

    @property
    def name(self) -> str:
        return self.law.name

    def prior_log_pdf(self, theta):
        return self.law.log_pdf(theta)

    def to_dict(self) -> dict:
        return {"law": self.law.name, **self.law.params(), "mu": self.mu}

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        d = dict(d)
        law = d.pop("law")
        mu = float(d.pop("mu", 0.0))
        ctor = {"iga": IGa, "logn": LogN, "sichi2": ScaledInvChi2}.get(law)
        if ctor is None:
            raise ValueError(f"unknown law {law!r}")
        return cls(ctor(**{k: float(v) for k, v in d.items()}), mu)

    def key(self) -> str:
        """Stable text identity, used to derive per-model random streams."""
        parts = ";".join(f"{k}={float(v)!r}" for k, v in sorted(self.law.params().items()))
        return f"{self.law.name}[{parts};mu={float(self.mu)!r}]"

    def __str__(self) -> str:
        return self.key()


# --- data summaries ---------------------------------------------------------

@dataclass(frozen=True)
class SufficientStats:
    """Sample size and mean squared deviation about a known mean."""

    n: int
    mean_sq_dev: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need n >= 1")
        if not (self.mean_sq_dev >= 0 and math.isfinite(self.mean_sq_dev)):
            raise ValueError("mean_sq_dev must be finite and >= 0")

    @classmethod
    def from_data(cls, data, mu: float = 0.0) -> "SufficientStats":
        x = np.asarray(getattr(data, "values", data), dtype=float)
        if x.size == 0:
            raise ValueError("data must be nonempty")
        d = x - mu
        return cls(int(x.size), float(np.sum(d * d) / x.size))


def block_stats(data, mu: float, block_length: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-block counts and mean squared deviations; the last block may be short."""
    x = np.asarray(getattr(data, "values", data), dtype=float)
    if x.size == 0:
        raise ValueError("data must be nonempty")
    if block_length < 1:
        raise ValueError("block_length must be >= 1")
    sq = (x - mu) ** 2
    starts = np.arange(0, x.size, block_length)
    counts = np.diff(np.r_[starts, x.size])
    return counts, np.add.reduceat(sq, starts) / counts


# --- log densities ----------------------------------------------------------

def igamma_log_pdf(theta, alpha: float, beta: float):
    _check_positive(alpha=alpha, beta=beta)
    th = _check_theta(theta)
    out = alpha * math.log(beta) - gammaln(alpha) - (alpha + 1.0) * np.log(th) - beta / th
    return _scalar_or_array(out)


def lognormal_log_pdf(theta, s: float):
    _check_positive(s=s)
    th = _check_theta(theta)
    lt = np.log(th)
    out = -math.log(s) - lt - 0.5 * LOG_2PI - lt * lt / (2.0 * s * s)
    return _scalar_or_array(out)


def scaled_inv_chi2_log_pdf(theta, nu0: float, sigma0_sq: float):
    _check_positive(nu0=nu0, sigma0_sq=sigma0_sq)
    th = _check_theta(theta)
    half = 0.5 * nu0
    scale = half * sigma0_sq
    out = half * math.log(scale) - gammaln(half) - (1.0 + half) * np.log(th) - scale / th
    return _scalar_or_array(out)


def gaussian_log_likelihood(data, mu: float, theta):
    """Full-constant Gaussian log-likelihood of iid data with variance ``theta``.

    ``data`` may be a ReturnSeries, an array, or precomputed SufficientStats.
    ``theta`` may be an array, in which case the result is elementwise.
    """
    stats = data if isinstance(data, SufficientStats) else SufficientStats.from_data(data, mu)
    th = _check_theta(theta)
    half_n = 0.5 * stats.n
    out = -half_n * (LOG_2PI + np.log(th)) - half_n * stats.mean_sq_dev / th
    return _scalar_or_array(out)


def dlog_likelihood(stats: SufficientStats, theta: float) -> float:
    """Derivative of the Gaussian log-likelihood in theta."""
    return 0.5 * stats.n * (stats.mean_sq_dev / theta - 1.0) / theta


# --- conjugate updates ------------------------------------------------------

def conjugate_posterior_iga(alpha: float, beta: float, stats: SufficientStats) -> tuple[float, float]:
    _check_positive(alpha=alpha, beta=beta)
    half_n = 0.5 * stats.n
    return alpha + half_n, beta + half_n * stats.mean_sq_dev


def conjugate_posterior_sichi2(nu0: float, sigma0_sq: float,
                               stats: SufficientStats) -> tuple[float, float]:
    _check_positive(nu0=nu0, sigma0_sq=sigma0_sq)
    nu_post = nu0 + stats.n
    return nu_post, (nu0 * sigma0_sq + stats.n * stats.mean_sq_dev) / nu_post


def iga_log_evidence(alpha: float, beta: float, stats: SufficientStats) -> float:
    """Closed-form log marginal likelihood of Gaussian data under an IGa prior."""
    a_post, b_post = conjugate_posterior_iga(alpha, beta, stats)
    return float(alpha * math.log(beta) - gammaln(alpha) - 0.5 * stats.n * LOG_2PI
                 + gammaln(a_post) - a_post * math.log(b_post))
