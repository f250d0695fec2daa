"""LST price trajectories in units of the underlying token.

Time is measured in years on a daily grid (``DT = 1/365``). Reward-LSTs follow
a geometric Brownian motion whose drift is the staking rate; rebase-LSTs stay
at price 1 and grow balances instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError

DAYS_PER_YEAR = 365
DT = 1.0 / DAYS_PER_YEAR


@dataclass(frozen=True)
class GbmParams:
    initial_price: float
    staking_rate: float
    volatility: float = 0.0

    def __post_init__(self):
        if not self.initial_price > 0:
            raise DomainError("initial price must be > 0")
        if not self.volatility >= 0:
            raise DomainError("volatility must be >= 0")


@dataclass(frozen=True)
class PricePath:
    times: np.ndarray
    prices: np.ndarray
    brownian: np.ndarray | None = None

    def __post_init__(self):
        if len(self.times) != len(self.prices):
            raise DomainError("times and prices differ in length")
        if self.brownian is not None and len(self.brownian) != len(self.times):
            raise DomainError("brownian samples differ in length")
        if np.any(self.prices <= 0):
            raise DomainError("prices must be positive")

    def __len__(self):
        return len(self.times)


@dataclass(frozen=True)
class RebaseSchedule:
    daily_multipliers: np.ndarray

    def compounded(self) -> np.ndarray:
        """Balance growth since day 0; entry ``i`` applies multipliers ``1..i``."""
        out = np.ones(len(self.daily_multipliers))
        out[1:] = np.cumprod(self.daily_multipliers[1:])
        return out


def _check_times(times) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) == 0:
        raise DomainError("times must be a nonempty 1-d grid")
    if times[0] != 0:
        raise DomainError("time grid must start at 0")
    if np.any(np.diff(times) <= 0):
        raise DomainError("time grid must be strictly increasing")
    return times


def daily_grid(days: int) -> np.ndarray:
    """``days + 1`` points from 0 to ``days/365`` years."""
    return np.arange(days + 1) / DAYS_PER_YEAR


def ideal_path(params: GbmParams, times) -> PricePath:
    """Deterministic path ``P(0) * exp(r t)`` of an LST that only accrues staking rewards."""
    if params.volatility != 0:
        raise DomainError("ideal path requires zero volatility")
    times = _check_times(times)
    prices = params.initial_price * np.exp(params.staking_rate * times)
    return PricePath(times, prices, np.zeros_like(times))


def path_rng(seed: int, path_index: int = 0) -> np.random.Generator:
    """Independent generator for ``(seed, path_index)``, stable across parallel layouts."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, path_index])))


def sample_gbm(params: GbmParams, times, seed: int, path_index: int = 0) -> PricePath:
    """Exact GBM sample on ``times`` using Gaussian Brownian increments."""
    times = _check_times(times)
    rng = path_rng(seed, path_index)
    dts = np.diff(times)
    increments = rng.standard_normal(len(dts)) * np.sqrt(dts)
    brownian = np.concatenate([[0.0], np.cumsum(increments)])
    r, sigma = params.staking_rate, params.volatility
    log_ret = (r - 0.5 * sigma * sigma) * times + sigma * brownian
    prices = params.initial_price * np.exp(log_ret)
    prices[0] = params.initial_price
    return PricePath(times, prices, brownian)


def rebase_schedule(staking_rates: Sequence[float]) -> RebaseSchedule:
    """Daily balance multipliers ``exp(rate / 365)`` for annualized rates."""
    rates = np.asarray(staking_rates, dtype=float)
    if not np.all(np.isfinite(rates)):
        raise DomainError("staking rates must be finite")
    return RebaseSchedule(np.exp(rates * DT))

