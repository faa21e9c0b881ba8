"""Superstatistical return generator: block-constant variance regimes over Gaussian noise."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .densities import ModelSpec
from .marketdata import PriceSeries, ReturnKind, ReturnSeries, Timescale


@dataclass(frozen=True)
class GeneratorConfig:
    model: ModelSpec
    n_points: int
    block_length: int
    seed: int = 0

    def __post_init__(self):
        if self.n_points < 1:
            raise ValueError("n_points must be >= 1")
        if self.block_length < 1:
            raise ValueError("block_length must be >= 1")

    @property
    def n_blocks(self) -> int:
        return -(-self.n_points // self.block_length)


def gen_superstat(config: GeneratorConfig) -> tuple[ReturnSeries, np.ndarray]:
    """Returns and the per-block variance path (one entry per block).

    All block variances are drawn first, then the Gaussian noise, from a
    single generator seeded with ``config.seed``.
    """
    rng = np.random.default_rng(config.seed)
    theta = config.model.law.sample(rng, config.n_blocks)
    scale = np.repeat(np.sqrt(theta), config.block_length)[: config.n_points]
    x = config.model.mu + scale * rng.standard_normal(config.n_points)
    return ReturnSeries(x, Timescale.RAW, ReturnKind.SIGNED), theta


def gen_prices_from_returns(returns, p0: float, start: int, step: int) -> PriceSeries:
    """Integrate log-returns from ``p0``; timestamps are ``start + i*step`` seconds."""
    if not p0 > 0:
        raise ValueError("p0 must be > 0")
    if step <= 0:
        raise ValueError("step must be a positive number of seconds")
    r = np.asarray(getattr(returns, "values", returns), dtype=float)
    with np.errstate(over="ignore"):
        prices = p0 * np.exp(np.r_[0.0, np.cumsum(r)])
    bad = np.flatnonzero(~np.isfinite(prices) | (prices <= 0))
    if bad.size:
        raise OverflowError(f"price overflow or underflow at index {int(bad[0])}")
    stamps = int(start) + int(step) * np.arange(prices.size, dtype=np.int64)
    return PriceSeries(stamps, prices, Timescale.RAW)


def fixture_manifest(config: GeneratorConfig, p0: float, start: str, step: int) -> str:
    return json.dumps({"model": config.model.to_dict(), "n_points": config.n_points,
                       "block_length": config.block_length, "seed": config.seed,
                       "p0": p0, "start": start, "step": step}, sort_keys=True)
