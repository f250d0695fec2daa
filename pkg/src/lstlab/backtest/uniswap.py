"""Uniswap v3 style backtest: one concentrated position, reset every calendar month.

The daily grid is end-of-day. A position opened (or reset) on day ``d`` uses
the opening pool price of that day, which is the previous day's closing pool
price (day 0 opens at its own close). Resets happen at the start of the first
day of each UTC calendar month, before that day's swaps.
"""

from __future__ import annotations

import datetime as dt
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..cfmm import ClmmPosition, clmm_holdings, liquidity_for_value
from ..errors import DomainError
from .ingest import SwapEvent
from .wealth import WealthSeries, compounded_rates

log = logging.getLogger(__name__)

# [-0.25%, +0.75%] around the month-open price
LOWER_OFFSET = -0.0025
UPPER_OFFSET = 0.0075


@dataclass(frozen=True)
class ClmmBacktestConfig:
    fee_rate: float
    lower_offset: float = LOWER_OFFSET
    upper_offset: float = UPPER_OFFSET
    gas_cost: float = 0.0
    recenter_on_exit: bool = False

    def __post_init__(self):
        if not 0 <= self.fee_rate < 1:
            raise DomainError("fee_rate must lie in [0, 1)")
        if not -1 < self.lower_offset < self.upper_offset:
            raise DomainError("range offsets must satisfy -1 < lower < upper")
        if self.gas_cost < 0:
            raise DomainError("gas cost must be >= 0")

    def bounds(self, price: float) -> tuple[float, float]:
        return price * (1.0 + self.lower_offset), price * (1.0 + self.upper_offset)


@dataclass(frozen=True)
class Rebalance:
    date: dt.date
    open_price: float
    lower_price: float
    upper_price: float
    liquidity: float
    wealth: float


@dataclass
class ClmmBacktestResult:
    wealth: WealthSeries
    rebalances: list[Rebalance]
    fees_token0: float = 0.0
    fees_token1: float = 0.0
    skipped_events: int = 0
    out_of_range_events: int = 0
    pool_prices: np.ndarray = field(default=None, repr=False)


def accrue_fee(event: SwapEvent, position_liquidity: float, fee_rate: float,
               lower_price: float, upper_price: float) -> tuple[float, float]:
    """Pro-rata fee share ``(token0, token1)`` of one swap for an in-range position.

    Out-of-range swaps and swaps with no recorded active liquidity earn nothing.
    """
    if not event.active_liquidity > 0:
        return 0.0, 0.0
    if not lower_price <= event.pool_price <= upper_price:
        return 0.0, 0.0
    share = float(position_liquidity) / event.active_liquidity
    return fee_rate * event.amount0_in * share, fee_rate * event.amount1_in * share


def daily_pool_prices(dates: Sequence[dt.date], events: Sequence[SwapEvent],
                      fallback: Sequence[float]) -> np.ndarray:
    """Closing pool price per day: last swap price, carried forward, else ``fallback``."""
    last_by_day: dict[dt.date, float] = {}
    for e in events:
        last_by_day[e.date] = e.pool_price
    out = np.empty(len(dates))
    current = None
    for i, d in enumerate(dates):
        if d in last_by_day:
            current = last_by_day[d]
        out[i] = current if current is not None else fallback[i]
    return out


def clmm_backtest(events: Sequence[SwapEvent], dates: Sequence[dt.date],
                  lst_prices: Sequence[float], config: ClmmBacktestConfig,
                  staking_rates: Sequence[float] | None = None) -> ClmmBacktestResult:
    """Replay swaps against a monthly re-centred position worth 1 unit at the start.

    LP wealth is the position value plus accrued fees, both valued at the LST
    price. HOLD re-adopts the new position's token split at every reset; an
    optional flat ``gas_cost`` is paid at every reset after the first.
    """
    dates = list(dates)
    n = len(dates)
    if n == 0:
        raise DomainError("empty date grid")
    if len(lst_prices) != n:
        raise DomainError("lst_prices must align with dates")
    if any(b - a != dt.timedelta(days=1) for a, b in zip(dates, dates[1:])):
        raise DomainError("dates must be consecutive days")
    if any(b.timestamp < a.timestamp for a, b in zip(events, events[1:])):
        raise DomainError("events must be sorted by time")
    lst_prices = np.asarray(lst_prices, dtype=float)
    pool = daily_pool_prices(dates, events, lst_prices)

    by_day: dict[dt.date, list[SwapEvent]] = {}
    for e in events:
        by_day.setdefault(e.date, []).append(e)

    lp = np.empty(n)
    hold = np.empty(n)
    rebalances: list[Rebalance] = []
    fees0 = fees1 = 0.0
    total0 = total1 = 0.0
    skipped = out_of_range = 0
    position: ClmmPosition | None = None
    hold_units = (0.0, 0.0)

    def open_position(day: int, wealth: float, hold_wealth: float):
        nonlocal position, hold_units
        price = pool[day - 1] if day > 0 else pool[0]
        lower, upper = config.bounds(price)
        liquidity = liquidity_for_value(wealth, price, lower, upper)
        position = ClmmPosition(liquidity, lower, upper)
        x, y = clmm_holdings(position, price)
        # HOLD takes the same token split, scaled to its own wealth
        scale = hold_wealth / wealth
        hold_units = (x * scale, y * scale)
        rebalances.append(Rebalance(dates[day], price, lower, upper, liquidity, wealth))

    def value_at(day: int, at_open: bool) -> float:
        p_pool = pool[day - 1] if at_open and day > 0 else pool[day]
        p_val = lst_prices[day - 1] if at_open and day > 0 else lst_prices[day]
        x, y = clmm_holdings(position, p_pool)
        return (x + fees0) * p_val + y + fees1

    open_position(0, 1.0, 1.0)
    for i, d in enumerate(dates):
        if i > 0 and d.month != dates[i - 1].month:
            wealth = value_at(i, at_open=True) - config.gas_cost
            hold_wealth = hold_units[0] * lst_prices[i - 1] + hold_units[1]
            if not wealth > 0:
                raise DomainError(f"LP wealth exhausted by gas costs on {d.isoformat()}")
            fees0 = fees1 = 0.0
            open_position(i, wealth, hold_wealth)
        for e in by_day.get(d, ()):
            if not e.active_liquidity > 0:
                skipped += 1
                continue
            f0, f1 = accrue_fee(e, position.liquidity, config.fee_rate,
                                position.lower_price, position.upper_price)
            if f0 == 0 and f1 == 0 and not (
                    position.lower_price <= e.pool_price <= position.upper_price):
                out_of_range += 1
            fees0 += f0
            fees1 += f1
            total0 += f0
            total1 += f1
        lp[i] = value_at(i, at_open=False)
        hold[i] = hold_units[0] * lst_prices[i] + hold_units[1]
        if config.recenter_on_exit and not (
                position.lower_price <= pool[i] <= position.upper_price) and i + 1 < n \
                and dates[i + 1].month == d.month:
            # re-centre at tomorrow's open, which is today's close
            hold_wealth = hold[i]
            wealth = lp[i] - config.gas_cost
            if not wealth > 0:
                raise DomainError(f"LP wealth exhausted by gas costs on {d.isoformat()}")
            fees0 = fees1 = 0.0
            open_position(i + 1, wealth, hold_wealth)
    if skipped:
        log.warning("skipped %d swap events with zero active liquidity", skipped)

    lst = lst_prices / lst_prices[0]
    staker = compounded_rates(staking_rates) if staking_rates is not None else None
    lp = lp / lp[0]
    hold = hold / hold[0]
    series = WealthSeries(dates, lp, lp.copy(), hold, lst, staker)
    return ClmmBacktestResult(series, rebalances, total0, total1, skipped, out_of_range, pool)
